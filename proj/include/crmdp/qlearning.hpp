#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "agent.hpp"
#include "rng.hpp"

namespace crmdp {

/// Tabular action-value estimates plus the learning hyperparameters.
struct QTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> values;  // [s * n_actions + a]
    double alpha = 0.1;
    double gamma = 0.9;
    double epsilon = 0.1;  // used by epsilon-greedy selection
    double beta = 2.0;     // used by softmax selection

    QTable() = default;
    QTable(int states, int actions, double alpha_, double gamma_)
        : n_states(states), n_actions(actions),
          values(size_t(states) * size_t(actions), 0.0), alpha(alpha_), gamma(gamma_) {
        if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("QTable: gamma in [0,1)");
        if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("QTable: alpha in (0,1]");
    }

    double& q(int s, int a) { return values[size_t(s) * size_t(n_actions) + size_t(a)]; }
    double q(int s, int a) const { return values[size_t(s) * size_t(n_actions) + size_t(a)]; }

    double max_q(int s) const {
        double best = q(s, 0);
        for (int a = 1; a < n_actions; ++a) best = std::max(best, q(s, a));
        return best;
    }

    int argmax_action(int s) const {
        int best = 0;
        for (int a = 1; a < n_actions; ++a)
            if (q(s, a) > q(s, best)) best = a;  // ties keep the lowest index
        return best;
    }
};

/// One temporal-difference backup for the transition (s, a, r, s').
inline void q_learning_step(QTable& table, int s, int a, double reward, int next) {
    double target = reward + table.gamma * table.max_q(next);
    table.q(s, a) += table.alpha * (target - table.q(s, a));
}

/**
 * Greedy action with probability 1-eps, uniform otherwise. Exact ties at
 * the maximum are broken uniformly at random: with zero initialization a
 * deterministic tie-break freezes the greedy walk against a wall before
 * anything has been learned, and the agent never finds the high-reward
 * region.
 */
inline int epsilon_greedy_act(const QTable& table, int s, Rng& rng) {
    if (table.epsilon > 0.0 && rng.uniform01() < table.epsilon)
        return rng.uniform_int(table.n_actions);
    double top = table.max_q(s);
    int n_ties = 0;
    for (int a = 0; a < table.n_actions; ++a)
        if (table.q(s, a) == top) ++n_ties;
    if (n_ties == 1) return table.argmax_action(s);
    int pick = rng.uniform_int(n_ties);
    for (int a = 0; a < table.n_actions; ++a) {
        if (table.q(s, a) == top && pick-- == 0) return a;
    }
    return table.argmax_action(s);
}

/// Boltzmann action selection, P(a) proportional to exp(beta * Q(s,a));
/// beta acts as an inverse temperature.
inline int softmax_act(const QTable& table, int s, Rng& rng) {
    if (table.beta <= 0.0) throw std::invalid_argument("softmax_act: beta must be positive");
    double top = table.max_q(s);
    std::vector<double> weights(size_t(table.n_actions), 0.0);
    for (int a = 0; a < table.n_actions; ++a)
        weights[size_t(a)] = std::exp(table.beta * (table.q(s, a) - top));
    return rng.categorical(weights);
}

enum class ExplorationRule { EpsilonGreedy, Softmax };

/**
 * Tabular Q-learning on observed rewards. The reward of the occupied state
 * is credited to the transition leaving it: on reaching s' from (s, a) the
 * backup is Q(s,a) += alpha * (r(s) + gamma * max Q(s') - Q(s,a)). Greedy
 * behavior then follows the value gradient toward the globally best state
 * instead of stalling on the nearest decent one.
 */
class QLearningAgent final : public Agent {
  public:
    QLearningAgent(int n_states, int n_actions, ExplorationRule rule, double alpha = 0.1,
                   double gamma = 0.9, double epsilon = 0.1, double beta = 2.0)
        : rule_(rule), init_(n_states, n_actions, alpha, gamma), table_(init_), rng_(0) {
        table_.epsilon = init_.epsilon = epsilon;
        table_.beta = init_.beta = beta;
    }

    void reset(uint64_t seed) override {
        table_ = init_;
        rng_ = Rng(seed);
        prev_state_ = prev_action_ = -1;
        prev_reward_ = 0.0;
    }

    int act(int state, double observed_reward) override {
        if (prev_state_ >= 0)
            q_learning_step(table_, prev_state_, prev_action_, prev_reward_, state);
        int a = rule_ == ExplorationRule::EpsilonGreedy ? epsilon_greedy_act(table_, state, rng_)
                                                        : softmax_act(table_, state, rng_);
        prev_state_ = state;
        prev_action_ = a;
        prev_reward_ = observed_reward;
        return a;
    }

    const QTable& table() const { return table_; }

    nlohmann::json snapshot() const override {
        return {{"type", rule_ == ExplorationRule::EpsilonGreedy ? "qlearn" : "softmax"},
                {"alpha", table_.alpha},
                {"gamma", table_.gamma},
                {"epsilon", table_.epsilon},
                {"beta", table_.beta},
                {"max_q", table_.values.empty()
                              ? 0.0
                              : *std::max_element(table_.values.begin(), table_.values.end())}};
    }

  private:
    ExplorationRule rule_;
    QTable init_;
    QTable table_;
    Rng rng_;
    int prev_state_ = -1;
    int prev_action_ = -1;
    double prev_reward_ = 0.0;
};

} // namespace crmdp
