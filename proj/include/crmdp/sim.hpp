#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "agent.hpp"
#include "crmdp.hpp"
#include "rng.hpp"

namespace crmdp {

/// Deterministic stationary policy: one action per state.
struct StationaryDeterministic {
    std::vector<int> action;
};

/// Stochastic stationary policy: one distribution over actions per state.
struct StationaryStochastic {
    std::vector<std::vector<double>> action_probs;
};

/// History-based policy backed by an Agent. Non-owning; the agent is reset
/// with a derived seed at the start of every simulation.
struct HistoryBased {
    Agent* agent = nullptr;
};

using PolicyKind = std::variant<StationaryDeterministic, StationaryStochastic, HistoryBased>;

struct TrajectoryStep {
    int state;
    int action;        // action chosen in this state (drives the next transition)
    double true_reward;
    double observed_reward;
    int64_t time;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    uint64_t seed = 0;
};

/**
 * Transition sampler with per-(s,a) support lists precomputed, so stepping
 * is O(support size) instead of O(|S|). Immutable and shareable.
 */
class CompiledEnv {
  public:
    explicit CompiledEnv(const Crmdp& m) : m_(&m) {
        support_.resize(size_t(m.n_states()) * size_t(m.n_actions()));
        for (int s = 0; s < m.n_states(); ++s) {
            for (int a = 0; a < m.n_actions(); ++a) {
                auto row = m.row(s, a);
                auto& entries = support_[size_t(s) * size_t(m.n_actions()) + size_t(a)];
                for (int next = 0; next < m.n_states(); ++next) {
                    if (row[size_t(next)] > 0.0) entries.push_back({row[size_t(next)], next});
                }
            }
        }
    }

    const Crmdp& model() const { return *m_; }

    int step(int s, int a, Rng& rng) const {
        const auto& entries = support_[size_t(s) * size_t(m_->n_actions()) + size_t(a)];
        if (entries.size() == 1) return entries[0].next;
        double u = rng.uniform01();
        double acc = 0.0;
        for (const auto& e : entries) {
            acc += e.prob;
            if (u < acc) return e.next;
        }
        return entries.back().next;
    }

  private:
    struct Entry {
        double prob;
        int next;
    };
    const Crmdp* m_;
    std::vector<std::vector<Entry>> support_;
};

namespace detail {

inline void check_policy(const Crmdp& m, const PolicyKind& p) {
    if (const auto* d = std::get_if<StationaryDeterministic>(&p)) {
        if (d->action.size() != size_t(m.n_states()))
            throw std::invalid_argument("policy: action table size mismatch");
        for (int a : d->action)
            if (a < 0 || a >= m.n_actions()) throw std::invalid_argument("policy: action out of range");
    } else if (const auto* st = std::get_if<StationaryStochastic>(&p)) {
        if (st->action_probs.size() != size_t(m.n_states()))
            throw std::invalid_argument("policy: row count mismatch");
        for (const auto& probs : st->action_probs) {
            if (probs.size() != size_t(m.n_actions()))
                throw std::invalid_argument("policy: row size mismatch");
            double sum = 0.0;
            for (double x : probs) sum += x;
            if (std::abs(sum - 1.0) > kDistTol)
                throw std::invalid_argument("policy: stochastic row does not sum to 1");
        }
    } else if (const auto* h = std::get_if<HistoryBased>(&p)) {
        if (h->agent == nullptr) throw std::invalid_argument("policy: null agent");
    }
}

} // namespace detail

/**
 * Runs the interaction process for t steps and invokes
 * visit(k, state, action, true_reward, observed_reward) for k = 0..t.
 *
 * Deterministic given (policy state, seed): the environment stream uses
 * derive_seed(seed, 0), agents are reset with derive_seed(seed, 1), and
 * stochastic policies draw from derive_seed(seed, 2).
 */
template <typename Visitor>
void simulate_visit(const CompiledEnv& env, const PolicyKind& policy, int s0, int64_t t,
                    uint64_t seed, Visitor&& visit) {
    const Crmdp& m = env.model();
    detail::check_policy(m, policy);
    if (s0 < 0 || s0 >= m.n_states()) throw std::invalid_argument("simulate: start state out of range");
    if (t < 0) throw std::invalid_argument("simulate: negative horizon");

    Rng env_rng(derive_seed(seed, 0));
    Rng policy_rng(derive_seed(seed, 2));
    if (const auto* h = std::get_if<HistoryBased>(&policy)) h->agent->reset(derive_seed(seed, 1));

    int s = s0;
    for (int64_t k = 0; k <= t; ++k) {
        double observed = m.observed_reward(s);
        int a = std::visit(
            [&](const auto& p) -> int {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, StationaryDeterministic>) {
                    return p.action[size_t(s)];
                } else if constexpr (std::is_same_v<T, StationaryStochastic>) {
                    return policy_rng.categorical(p.action_probs[size_t(s)]);
                } else {
                    return p.agent->act(s, observed);
                }
            },
            policy);
        if (a < 0 || a >= m.n_actions()) throw std::out_of_range("simulate: agent returned bad action");
        visit(k, s, a, m.true_reward(s), observed);
        if (k < t) s = env.step(s, a, env_rng);
    }
}

/// Samples one trajectory of length t+1 (time steps 0..t).
inline Trajectory simulate(const Crmdp& m, const PolicyKind& policy, int s0, int64_t t,
                           uint64_t seed) {
    CompiledEnv env(m);
    Trajectory tr;
    tr.seed = seed;
    tr.steps.reserve(size_t(t) + 1);
    simulate_visit(env, policy, s0, t, seed,
                   [&](int64_t k, int s, int a, double ir, double orr) {
                       tr.steps.push_back({s, a, ir, orr, k});
                   });
    return tr;
}

/// Sums of true and observed rewards over every step of the trajectory.
inline std::pair<double, double> cumulative_returns(const Trajectory& tr) {
    double true_sum = 0.0, observed_sum = 0.0;
    for (const auto& st : tr.steps) {
        true_sum += st.true_reward;
        observed_sum += st.observed_reward;
    }
    return {true_sum, observed_sum};
}

} // namespace crmdp
