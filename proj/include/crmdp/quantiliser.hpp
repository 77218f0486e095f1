#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "agent.hpp"
#include "crmdp.hpp"
#include "dp.hpp"
#include "rng.hpp"

namespace crmdp {

// ---------------------------------------------------------------------------
// Bounds
// ---------------------------------------------------------------------------

/// Optimal threshold 1 - sqrt(q/|S|) and the matching worst-case
/// time-averaged regret bound 1 - (1 - sqrt(q/|S|))^2 for the stay-in-place
/// quantilising agent.
inline std::pair<double, double> quantile_bound(int q, int n_states) {
    if (n_states < 1) throw std::invalid_argument("quantile_bound: need n_states >= 1");
    if (q < 0 || q > n_states) throw std::invalid_argument("quantile_bound: need 0 <= q <= n_states");
    double root = std::sqrt(double(q) / double(n_states));
    double delta_star = 1.0 - root;
    return {delta_star, 1.0 - delta_star * delta_star};
}

/// Regret bound 1 - delta * (1 - q/|S^delta|) for the general quantilising
/// agent; may exceed 1 (vacuous) when q >= union_size.
inline double general_bound(double delta, int q, int union_size) {
    if (union_size < 1) throw std::invalid_argument("general_bound: need union_size >= 1");
    return 1.0 - delta * (1.0 - double(q) / double(union_size));
}

// ---------------------------------------------------------------------------
// Simple quantilising agent
// ---------------------------------------------------------------------------

/**
 * The stay-in-place quantilising agent: random-walk until every state has
 * been visited (learning the observed reward of each), draw one state
 * uniformly from {s : observed(s) >= delta}, travel there along a shortest
 * expected path, and stay forever.
 *
 * If the threshold set is empty the agent falls back to the best observed
 * state and flags the fallback in its snapshot.
 */
class SimpleQuantiliserAgent final : public Agent {
  public:
    SimpleQuantiliserAgent(DynamicsView dynamics, double delta)
        : dyn_(dynamics), delta_(delta), rng_(0) {
        if (delta < 0.0 || delta >= 1.0)
            throw std::invalid_argument("SimpleQuantiliserAgent: delta in [0,1)");
        reset(0);
    }

    void reset(uint64_t seed) override {
        rng_ = Rng(seed);
        observed_.assign(size_t(dyn_.states), 0.0);
        visited_.assign(size_t(dyn_.states), false);
        n_visited_ = 0;
        chosen_ = -1;
        fallback_ = false;
        committed_ = false;
        stay_action_ = -1;
        nav_.action.clear();
    }

    int act(int state, double observed_reward) override {
        if (!visited_[size_t(state)]) {
            visited_[size_t(state)] = true;
            observed_[size_t(state)] = observed_reward;
            ++n_visited_;
            if (n_visited_ == dyn_.states) choose_target();
        }
        if (chosen_ < 0) return rng_.uniform_int(dyn_.actions);  // still exploring
        if (state == chosen_) {
            committed_ = true;
            if (stay_action_ >= 0) return stay_action_;
        }
        return nav_.action[size_t(state)];
    }

    int chosen_state() const { return chosen_; }
    const std::vector<int>& threshold_set() const { return threshold_set_; }

    nlohmann::json snapshot() const override {
        return {{"type", "quantile"},
                {"delta", delta_},
                {"phase", chosen_ < 0 ? "exploring" : (committed_ ? "committed" : "travelling")},
                {"threshold_set", threshold_set_},
                {"chosen_state", chosen_},
                {"empty_set_fallback", fallback_},
                {"no_stay_action", stay_action_ < 0}};
    }

  private:
    void choose_target() {
        threshold_set_.clear();
        for (int s = 0; s < dyn_.states; ++s)
            if (observed_[size_t(s)] >= delta_ - kRewardTol) threshold_set_.push_back(s);
        if (threshold_set_.empty()) {
            fallback_ = true;
            int best = 0;
            for (int s = 1; s < dyn_.states; ++s)
                if (observed_[size_t(s)] > observed_[size_t(best)]) best = s;
            chosen_ = best;
        } else {
            chosen_ = threshold_set_[size_t(rng_.uniform_int(int(threshold_set_.size())))];
        }
        nav_ = navigation_policy(dyn_, chosen_);
        stay_action_ = -1;
        for (int a = 0; a < dyn_.actions; ++a) {
            if (dyn_.prob(chosen_, a, chosen_) >= 1.0 - kDistTol) {
                stay_action_ = a;
                break;
            }
        }
    }

    DynamicsView dyn_;
    double delta_;
    Rng rng_;
    std::vector<double> observed_;
    std::vector<bool> visited_;
    int n_visited_ = 0;
    std::vector<int> threshold_set_;
    int chosen_ = -1;
    bool fallback_ = false;
    bool committed_ = false;
    int stay_action_ = -1;
    StationaryDeterministic nav_;
};

// ---------------------------------------------------------------------------
// Stationary distributions and value support
// ---------------------------------------------------------------------------

struct UnichainViolation : std::runtime_error {
    UnichainViolation(std::vector<int> a, std::vector<int> b)
        : std::runtime_error("chain has multiple recurrent classes; e.g. {" + join(a) + "} and {" +
                             join(b) + "}"),
          class_a(std::move(a)), class_b(std::move(b)) {}
    std::vector<int> class_a, class_b;

  private:
    static std::string join(const std::vector<int>& v) {
        std::string out;
        for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
        return out;
    }
};

namespace detail {

/// Strongly connected components of a chain given by dense row-major P.
/// Returns the recurrent classes (components with no outgoing edges).
inline std::vector<std::vector<int>> recurrent_classes(const std::vector<double>& P, int n) {
    // Kosaraju: order by finish time on P, then collect components on P^T.
    std::vector<int> order;
    order.reserve(size_t(n));
    std::vector<char> seen(size_t(n), 0);
    for (int start = 0; start < n; ++start) {
        if (seen[size_t(start)]) continue;
        // Iterative DFS with an explicit next-edge cursor.
        std::vector<std::pair<int, int>> stack{{start, 0}};
        seen[size_t(start)] = 1;
        while (!stack.empty()) {
            auto& [v, cursor] = stack.back();
            bool descended = false;
            while (cursor < n) {
                int w = cursor++;
                if (P[size_t(v) * size_t(n) + size_t(w)] > 0.0 && !seen[size_t(w)]) {
                    seen[size_t(w)] = 1;
                    stack.push_back({w, 0});
                    descended = true;
                    break;
                }
            }
            if (!descended && cursor >= n) {
                order.push_back(v);
                stack.pop_back();
            }
        }
    }
    std::vector<int> comp(size_t(n), -1);
    int n_comp = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (comp[size_t(*it)] >= 0) continue;
        std::vector<int> stack{*it};
        comp[size_t(*it)] = n_comp;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w = 0; w < n; ++w) {
                if (P[size_t(w) * size_t(n) + size_t(v)] > 0.0 && comp[size_t(w)] < 0) {
                    comp[size_t(w)] = n_comp;
                    stack.push_back(w);
                }
            }
        }
        ++n_comp;
    }
    std::vector<char> leaks(size_t(n_comp), 0);
    for (int v = 0; v < n; ++v)
        for (int w = 0; w < n; ++w)
            if (P[size_t(v) * size_t(n) + size_t(w)] > 0.0 && comp[size_t(v)] != comp[size_t(w)])
                leaks[size_t(comp[size_t(v)])] = 1;
    std::vector<std::vector<int>> recurrent(size_t(n_comp), std::vector<int>{});
    for (int v = 0; v < n; ++v)
        if (!leaks[size_t(comp[size_t(v)])]) recurrent[size_t(comp[size_t(v)])].push_back(v);
    std::erase_if(recurrent, [](const auto& c) { return c.empty(); });
    return recurrent;
}

/// Unique stationary distribution of a single-recurrent-class chain, by a
/// dense linear solve of d P = d with normalization.
inline std::vector<double> stationary_of_chain(const std::vector<double>& P, int n) {
    // System rows: (P^T - I) d = 0 for rows 0..n-2, then sum(d) = 1.
    std::vector<double> A(size_t(n) * size_t(n + 1), 0.0);
    auto at = [&](int r, int c) -> double& { return A[size_t(r) * size_t(n + 1) + size_t(c)]; };
    for (int r = 0; r < n - 1; ++r) {
        for (int c = 0; c < n; ++c) at(r, c) = P[size_t(c) * size_t(n) + size_t(r)];
        at(r, r) -= 1.0;
    }
    for (int c = 0; c < n; ++c) at(n - 1, c) = 1.0;
    at(n - 1, n) = 1.0;

    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(at(r, col)) > std::abs(at(pivot, col))) pivot = r;
        if (std::abs(at(pivot, col)) < 1e-14)
            throw std::runtime_error("stationary_of_chain: singular system");
        if (pivot != col)
            for (int c = col; c <= n; ++c) std::swap(at(pivot, c), at(col, c));
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = at(r, col) / at(col, col);
            if (f == 0.0) continue;
            for (int c = col; c <= n; ++c) at(r, c) -= f * at(col, c);
        }
    }
    std::vector<double> d(size_t(n), 0.0);
    for (int r = 0; r < n; ++r) d[size_t(r)] = at(r, n) / at(r, r);
    for (double& x : d) x = std::max(x, 0.0);

    double residual = 0.0;
    for (int c = 0; c < n; ++c) {
        double v = 0.0;
        for (int r = 0; r < n; ++r) v += d[size_t(r)] * P[size_t(r) * size_t(n) + size_t(c)];
        residual = std::max(residual, std::abs(v - d[size_t(c)]));
    }
    if (residual > 1e-9) throw std::runtime_error("stationary_of_chain: residual too large");
    return d;
}

template <typename Model>
std::vector<double> policy_chain(const Model& m, const std::vector<int>& action) {
    int n = m.n_states();
    std::vector<double> P(size_t(n) * size_t(n), 0.0);
    for (int s = 0; s < n; ++s) {
        auto row = m.row(s, action[size_t(s)]);
        for (int next = 0; next < n; ++next) P[size_t(s) * size_t(n) + size_t(next)] = row[size_t(next)];
    }
    return P;
}

} // namespace detail

/**
 * Stationary distribution of a deterministic stationary policy. Throws
 * UnichainViolation (naming two recurrent classes) when the induced chain's
 * long-run distribution would depend on the start state.
 */
inline std::vector<double> stationary_distribution(const Crmdp& m,
                                                   const StationaryDeterministic& policy) {
    auto P = detail::policy_chain(m, policy.action);
    auto classes = detail::recurrent_classes(P, m.n_states());
    if (classes.size() > 1) throw UnichainViolation(classes[0], classes[1]);
    return detail::stationary_of_chain(P, m.n_states());
}

/**
 * A policy's asymptotic value contributions vc(s) = d(s) * observed(s) and
 * its canonical maximal delta-value-supporting set: order states by
 * contribution and take the longest prefix whose k-th entry still clears
 * delta / k.
 */
struct ValueSupport {
    StationaryDeterministic policy;
    std::vector<double> stationary;
    std::vector<double> contribution;
    std::vector<int> support_set;  // sorted by state index
};

namespace detail {

inline std::vector<int> maximal_support(const std::vector<double>& vc, double delta) {
    int n = int(vc.size());
    std::vector<int> order(size_t(n), 0);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vc[size_t(a)] > vc[size_t(b)]; });
    int best_k = 0;
    for (int k = 1; k <= n; ++k)
        if (vc[size_t(order[size_t(k - 1)])] >= delta / double(k) - 1e-12) best_k = k;
    std::vector<int> support(order.begin(), order.begin() + best_k);
    std::sort(support.begin(), support.end());
    return support;
}

} // namespace detail

template <typename ObservedModel>
ValueSupport value_supports_view(const ObservedModel& view, std::span<const double> observed,
                                 const StationaryDeterministic& policy, double delta) {
    auto P = detail::policy_chain(view, policy.action);
    auto classes = detail::recurrent_classes(P, view.n_states());
    if (classes.size() > 1) throw UnichainViolation(classes[0], classes[1]);
    ValueSupport vs;
    vs.policy = policy;
    vs.stationary = detail::stationary_of_chain(P, view.n_states());
    vs.contribution.resize(size_t(view.n_states()));
    for (int s = 0; s < view.n_states(); ++s)
        vs.contribution[size_t(s)] = vs.stationary[size_t(s)] * observed[size_t(s)];
    vs.support_set = detail::maximal_support(vs.contribution, delta);
    return vs;
}

inline ValueSupport value_supports(const Crmdp& m, const StationaryDeterministic& policy,
                                   double delta) {
    return value_supports_view(m, m.observed_rewards(), policy, delta);
}

// ---------------------------------------------------------------------------
// General quantilising agent
// ---------------------------------------------------------------------------

struct DeltaTooHigh : std::runtime_error {
    DeltaTooHigh() : std::runtime_error("Failed because delta too high") {}
};

struct PolicyCapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * The general quantilising agent over an observed MDP:
 *   1. enumerate all deterministic stationary policies and their value
 *      supports (policies whose chain is not unichain are skipped, since
 *      their asymptotic contribution is start-dependent);
 *   2. pick a family of pairwise-disjoint supporting sets maximizing the
 *      size of their union (exact search for up to 12 distinct candidate
 *      sets, greedy with one-swap improvement beyond);
 *   3. on reset, sample a state uniformly from the union;
 *   4. follow the policy whose set contains it.
 *
 * Construction throws DeltaTooHigh when no non-empty collection exists.
 */
class GeneralQuantiliserAgent final : public Agent {
  public:
    GeneralQuantiliserAgent(ObservedMdpView view, double delta, int64_t policy_cap = 1'000'000)
        : delta_(delta), rng_(0) {
        int n = view.n_states(), na = view.n_actions();
        double count = std::pow(double(na), double(n));
        if (count > double(policy_cap))
            throw PolicyCapExceeded("general quantiliser: |A|^|S| = " + std::to_string(count) +
                                    " exceeds policy cap " + std::to_string(policy_cap));

        std::vector<Candidate> candidates;
        std::vector<int> assignment(size_t(n), 0);
        for (;;) {
            StationaryDeterministic pol{assignment};
            try {
                auto vs = value_supports_view(view, view.observed, pol, delta);
                if (!vs.support_set.empty()) add_candidate(candidates, vs.support_set, pol);
            } catch (const UnichainViolation&) {
                // start-dependent chain: no well-defined support, skip
            }
            int pos = 0;
            while (pos < n && ++assignment[size_t(pos)] == na) assignment[size_t(pos++)] = 0;
            if (pos == n) break;
        }
        if (candidates.empty()) throw DeltaTooHigh();

        auto family = pick_family(candidates);
        for (int idx : family) {
            const auto& c = candidates[size_t(idx)];
            for (int s : c.set) {
                union_.push_back(s);
                policy_of_state_[s] = int(policies_.size());
            }
            policies_.push_back(c.policy);
        }
        std::sort(union_.begin(), union_.end());
        reset(0);
    }

    void reset(uint64_t seed) override {
        rng_ = Rng(seed);
        int s = union_[size_t(rng_.uniform_int(int(union_.size())))];
        sampled_state_ = s;
        active_ = policy_of_state_.at(s);
    }

    int act(int state, double) override { return policies_[size_t(active_)].action[size_t(state)]; }

    const std::vector<int>& support_union() const { return union_; }
    int sampled_state() const { return sampled_state_; }
    const StationaryDeterministic& active_policy() const { return policies_[size_t(active_)]; }

    nlohmann::json snapshot() const override {
        return {{"type", "general-quantile"},
                {"delta", delta_},
                {"support_union", union_},
                {"sampled_state", sampled_state_},
                {"active_policy", policies_[size_t(active_)].action}};
    }

  private:
    struct Candidate {
        std::vector<int> set;
        StationaryDeterministic policy;
    };

    static void add_candidate(std::vector<Candidate>& cs, const std::vector<int>& set,
                              const StationaryDeterministic& pol) {
        for (const auto& c : cs)
            if (c.set == set) return;  // first enumerated policy wins
        cs.push_back({set, pol});
    }

    static bool disjoint(const std::vector<int>& a, const std::vector<int>& b) {
        size_t i = 0, j = 0;
        while (i < a.size() && j < b.size()) {
            if (a[i] == b[j]) return false;
            if (a[i] < b[j]) ++i; else ++j;
        }
        return true;
    }

    /// Indices of the chosen candidate family. Exact branch-and-bound for
    /// small candidate counts; greedy-by-size plus one-swap otherwise.
    static std::vector<int> pick_family(const std::vector<Candidate>& cs) {
        int m = int(cs.size());
        if (m <= 12) {
            std::vector<int> best, cur;
            int best_size = -1, best_sets = 0;
            std::vector<int64_t> tail(size_t(m) + 1, 0);
            for (int i = m - 1; i >= 0; --i) tail[size_t(i)] = tail[size_t(i) + 1] + int64_t(cs[size_t(i)].set.size());
            auto rec = [&](auto&& self, int i, int size) -> void {
                if (size + tail[size_t(i)] < best_size) return;
                if (i == m) {
                    if (size > best_size || (size == best_size && int(cur.size()) < best_sets)) {
                        best_size = size;
                        best_sets = int(cur.size());
                        best = cur;
                    }
                    return;
                }
                bool ok = true;
                for (int idx : cur)
                    if (!disjoint(cs[size_t(idx)].set, cs[size_t(i)].set)) { ok = false; break; }
                if (ok) {
                    cur.push_back(i);
                    self(self, i + 1, size + int(cs[size_t(i)].set.size()));
                    cur.pop_back();
                }
                self(self, i + 1, size);
            };
            rec(rec, 0, 0);
            return best;
        }
        // Greedy by size with one-swap improvement.
        std::vector<int> order(size_t(m), 0);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return cs[size_t(a)].set.size() > cs[size_t(b)].set.size();
        });
        std::vector<int> chosen;
        auto fits = [&](int c, const std::vector<int>& in, int skip) {
            for (int idx : in)
                if (idx != skip && !disjoint(cs[size_t(idx)].set, cs[size_t(c)].set)) return false;
            return true;
        };
        for (int c : order)
            if (fits(c, chosen, -1)) chosen.push_back(c);
        bool improved = true;
        while (improved) {
            improved = false;
            for (int c : order) {
                if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
                for (size_t k = 0; k < chosen.size(); ++k) {
                    if (!fits(c, chosen, chosen[k])) continue;
                    if (cs[size_t(c)].set.size() > cs[size_t(chosen[k])].set.size()) {
                        chosen[k] = c;
                        improved = true;
                        break;
                    }
                }
                if (improved) break;
            }
        }
        return chosen;
    }

    double delta_;
    Rng rng_;
    std::vector<int> union_;
    std::map<int, int> policy_of_state_;
    std::vector<StationaryDeterministic> policies_;
    int active_ = 0;
    int sampled_state_ = -1;
};

} // namespace crmdp
