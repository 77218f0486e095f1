#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "crmdp.hpp"
#include "sim.hpp"

namespace crmdp {

constexpr double kDpTol = 1e-9;

/// Raised when an exact finite-horizon solve would exceed the compute budget.
struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when an operation requires a communicating CRMDP and the input is not.
struct NotCommunicating : std::runtime_error {
    NotCommunicating(int from, int to)
        : std::runtime_error("state " + std::to_string(to) + " is unreachable from state " +
                             std::to_string(from)),
          from_state(from), to_state(to) {}
    int from_state;
    int to_state;
};

namespace detail {

/// States reachable from s under some action sequence (support-graph BFS).
template <typename Model>
std::vector<bool> reachable_from(const Model& m, int s) {
    std::vector<bool> seen(size_t(m.n_states()), false);
    std::vector<int> stack{s};
    seen[size_t(s)] = true;
    while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        for (int a = 0; a < m.n_actions(); ++a) {
            auto row = m.row(cur, a);
            for (int next = 0; next < m.n_states(); ++next) {
                if (row[size_t(next)] > 0.0 && !seen[size_t(next)]) {
                    seen[size_t(next)] = true;
                    stack.push_back(next);
                }
            }
        }
    }
    return seen;
}

} // namespace detail

template <typename Model>
bool is_communicating(const Model& m) {
    for (int s = 0; s < m.n_states(); ++s) {
        auto seen = detail::reachable_from(m, s);
        for (int s2 = 0; s2 < m.n_states(); ++s2)
            if (!seen[size_t(s2)]) return false;
    }
    return true;
}

/**
 * Minimal expected hitting times to `target` from every state, by value
 * iteration on h(s) = 1 + min_a sum_s' T(s'|s,a) h(s'), h(target) = 0.
 *
 * Throws NotCommunicating if some state cannot reach the target at all.
 */
template <typename Model>
std::vector<double> min_expected_hitting_times(const Model& m, int target) {
    int n = m.n_states();
    // Backward reachability guard: find states that can reach the target.
    std::vector<bool> can_reach(size_t(n), false);
    can_reach[size_t(target)] = true;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int s = 0; s < n; ++s) {
            if (can_reach[size_t(s)]) continue;
            for (int a = 0; a < m.n_actions() && !can_reach[size_t(s)]; ++a) {
                auto row = m.row(s, a);
                for (int next = 0; next < n; ++next) {
                    if (row[size_t(next)] > 0.0 && can_reach[size_t(next)]) {
                        can_reach[size_t(s)] = true;
                        changed = true;
                        break;
                    }
                }
            }
        }
    }
    for (int s = 0; s < n; ++s)
        if (!can_reach[size_t(s)]) throw NotCommunicating(s, target);

    std::vector<double> h(size_t(n), 0.0), next(size_t(n), 0.0);
    for (int64_t iter = 0; iter < 10'000'000; ++iter) {
        double delta = 0.0;
        for (int s = 0; s < n; ++s) {
            if (s == target) {
                next[size_t(s)] = 0.0;
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            for (int a = 0; a < m.n_actions(); ++a) {
                auto row = m.row(s, a);
                double v = 1.0;
                for (int s2 = 0; s2 < n; ++s2) v += row[size_t(s2)] * h[size_t(s2)];
                if (v < best) best = v;
            }
            next[size_t(s)] = best;
            delta = std::max(delta, std::abs(best - h[size_t(s)]));
        }
        h.swap(next);
        if (delta < kDpTol) return h;
    }
    throw std::runtime_error("hitting-time value iteration failed to converge");
}

/// Stationary policy minimizing expected time to reach `target`.
template <typename Model>
StationaryDeterministic navigation_policy(const Model& m, int target) {
    auto h = min_expected_hitting_times(m, target);
    StationaryDeterministic pol;
    pol.action.resize(size_t(m.n_states()), 0);
    for (int s = 0; s < m.n_states(); ++s) {
        double best = std::numeric_limits<double>::infinity();
        int best_a = 0;
        for (int a = 0; a < m.n_actions(); ++a) {
            auto row = m.row(s, a);
            double v = 1.0;
            for (int s2 = 0; s2 < m.n_states(); ++s2) v += row[size_t(s2)] * h[size_t(s2)];
            if (v < best - kDpTol) {
                best = v;
                best_a = a;
            }
        }
        pol.action[size_t(s)] = best_a;
    }
    pol.action[size_t(target)] = [&] {
        for (int a = 0; a < m.n_actions(); ++a)
            if (m.prob(target, a, target) >= 1.0 - kDistTol) return a;
        return pol.action[size_t(target)];
    }();
    return pol;
}

/**
 * Diameter: max over ordered state pairs of the minimal expected travel
 * time. Throws NotCommunicating (naming the offending pair) if infinite.
 */
inline double diameter(const Crmdp& m) {
    double d = 0.0;
    for (int target = 0; target < m.n_states(); ++target) {
        auto h = min_expected_hitting_times(m, target);
        for (double v : h) d = std::max(d, v);
    }
    return d;
}

/**
 * Exact informed optimum: max over policies of the expected cumulative true
 * reward over steps 0..t from s0, by backward induction over t stages.
 * Ties between actions break toward the lowest index.
 *
 * Throws BudgetExceeded when |S|^2 * |A| * t exceeds `budget` elementary
 * operations (callers then fall back to the average-reward approximation).
 */
inline double informed_optimum(const Crmdp& m, int s0, int64_t t, int64_t budget = 200'000'000) {
    int n = m.n_states();
    double cost = double(n) * double(n) * double(m.n_actions()) * double(t);
    if (cost > double(budget))
        throw BudgetExceeded("informed_optimum: |S|^2*|A|*t = " + std::to_string(cost) +
                             " exceeds budget " + std::to_string(budget));
    std::vector<double> v(size_t(n), 0.0), next(size_t(n), 0.0);
    for (int s = 0; s < n; ++s) v[size_t(s)] = m.true_reward(s);
    for (int64_t stage = 0; stage < t; ++stage) {
        for (int s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < m.n_actions(); ++a) {
                auto row = m.row(s, a);
                double q = 0.0;
                for (int s2 = 0; s2 < n; ++s2) q += row[size_t(s2)] * v[size_t(s2)];
                if (q > best) best = q;
            }
            next[size_t(s)] = m.true_reward(s) + best;
        }
        v.swap(next);
    }
    return v[size_t(s0)];
}

/// Gain and bias of the average-reward optimal policy, plus that policy.
struct GainBias {
    double gain = 0.0;
    std::vector<double> bias;
    StationaryDeterministic policy;
};

/**
 * Relative value iteration for the optimal average reward, with a damping
 * step so periodic chains converge. Rewards may be any per-state vector
 * (true or observed), passed explicitly.
 */
template <typename Model>
GainBias average_reward_optimum(const Model& m, const std::vector<double>& reward,
                                double tol = kDpTol) {
    int n = m.n_states();
    std::vector<double> h(size_t(n), 0.0), lh(size_t(n), 0.0);
    std::vector<int> argmax(size_t(n), 0);
    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
        for (int s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int a = 0; a < m.n_actions(); ++a) {
                auto row = m.row(s, a);
                double q = 0.0;
                for (int s2 = 0; s2 < n; ++s2) q += row[size_t(s2)] * in[size_t(s2)];
                if (q > best + kDpTol) {
                    best = q;
                    best_a = a;
                }
            }
            out[size_t(s)] = reward[size_t(s)] + best;
            argmax[size_t(s)] = best_a;
        }
    };

    double gain = 0.0;
    for (int64_t iter = 0; iter < 5'000'000; ++iter) {
        apply(h, lh);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int s = 0; s < n; ++s) {
            double d = lh[size_t(s)] - h[size_t(s)];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        gain = 0.5 * (lo + hi);
        if (hi - lo < tol) {
            h = lh;
            break;
        }
        // Damped update (aperiodicity transform), then renormalize at state 0.
        for (int s = 0; s < n; ++s) h[size_t(s)] = 0.5 * h[size_t(s)] + 0.5 * lh[size_t(s)];
        double ref = h[0];
        for (double& x : h) x -= ref;
    }
    GainBias out;
    out.gain = gain;
    double ref = h[0];
    for (double& x : h) x -= ref;
    out.bias = std::move(h);
    out.policy.action.assign(argmax.begin(), argmax.end());
    return out;
}

/// Informed optimum with automatic fallback: exact backward induction when
/// affordable, otherwise gain*(t+1) plus the bias at s0 (flagged approximate).
struct InformedValue {
    double value = 0.0;
    bool exact = true;
};

inline InformedValue informed_value(const Crmdp& m, int s0, int64_t t,
                                    int64_t budget = 200'000'000) {
    try {
        return {informed_optimum(m, s0, t, budget), true};
    } catch (const BudgetExceeded&) {
        auto gb = average_reward_optimum(m, m.true_rewards());
        return {gb.gain * double(t + 1) + gb.bias[size_t(s0)], false};
    }
}

/// Regret of a policy against the informed optimum, estimated by Monte Carlo.
struct RegretReport {
    double informed_optimum = 0.0;
    double agent_return = 0.0;   // mean cumulative true reward over runs
    double regret = 0.0;
    double time_averaged = 0.0;
    int64_t horizon = 0;
    int runs = 0;
    double std_error = 0.0;
    bool informed_exact = true;
};

inline RegretReport regret(const Crmdp& m, const PolicyKind& policy, int s0, int64_t t, int runs,
                           uint64_t seed, int64_t budget = 200'000'000) {
    if (runs < 1) throw std::invalid_argument("regret: need at least one run");
    auto informed = informed_value(m, s0, t, budget);
    CompiledEnv env(m);
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < runs; ++i) {
        double total = 0.0;
        simulate_visit(env, policy, s0, t, derive_seed(seed, uint64_t(i)),
                       [&](int64_t, int, int, double ir, double) { total += ir; });
        sum += total;
        sumsq += total * total;
    }
    RegretReport rep;
    rep.informed_optimum = informed.value;
    rep.informed_exact = informed.exact;
    rep.agent_return = sum / runs;
    rep.regret = rep.informed_optimum - rep.agent_return;
    rep.time_averaged = rep.regret / double(t);
    rep.horizon = t;
    rep.runs = runs;
    double var = std::max(0.0, sumsq / runs - rep.agent_return * rep.agent_return);
    rep.std_error = std::sqrt(var / runs);
    return rep;
}

} // namespace crmdp
