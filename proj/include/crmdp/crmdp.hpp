#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crmdp {

constexpr double kDistTol = 1e-12;   // probability rows must sum to 1 within this
constexpr double kRewardTol = 1e-9;  // reward-set membership / value comparisons

/// One entry of a sparse corruption function: in state `state`, a true
/// reward equal to `r_in` is reported as `r_out`. Unlisted (state, reward)
/// pairs are mapped identically.
struct CorruptionPair {
    int state;
    double r_in;
    double r_out;

    friend bool operator==(const CorruptionPair&, const CorruptionPair&) = default;
};

/**
 * A finite MDP over state-indexed rewards plus a per-state reward corruption
 * function. Immutable after construction; validate() checks the invariants.
 *
 * Transitions are stored dense: row(s, a)[s'] = P(s' | s, a).
 */
class Crmdp {
  public:
    Crmdp() = default;

    Crmdp(int n_states, int n_actions, std::vector<double> reward_set,
          std::vector<double> transition, std::vector<double> true_reward,
          std::vector<CorruptionPair> corruption)
        : n_states_(n_states),
          n_actions_(n_actions),
          reward_set_(std::move(reward_set)),
          transition_(std::move(transition)),
          true_reward_(std::move(true_reward)),
          corruption_(std::move(corruption)) {
        std::sort(reward_set_.begin(), reward_set_.end());
        canonicalize_corruption();
        validate();
        materialize_observed();
    }

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    const std::vector<double>& reward_set() const { return reward_set_; }
    const std::vector<double>& true_rewards() const { return true_reward_; }
    const std::vector<double>& observed_rewards() const { return observed_; }
    const std::vector<CorruptionPair>& corruption_pairs() const { return corruption_; }
    const std::vector<double>& transition_data() const { return transition_; }

    double true_reward(int s) const { return true_reward_.at(size_t(s)); }

    /// Observed reward of state s: corruption applied to the true reward.
    double observed_reward(int s) const { return observed_.at(size_t(s)); }

    /// Corruption function C_s(r); identity for unlisted pairs.
    double corrupt(int s, double r) const {
        for (const auto& p : corruption_) {
            if (p.state == s && std::abs(p.r_in - r) <= kRewardTol) return p.r_out;
        }
        return r;
    }

    /// True iff C_s is the identity on the whole reward set.
    bool state_uncorrupted(int s) const {
        for (const auto& p : corruption_) {
            if (p.state == s && std::abs(p.r_in - p.r_out) > kRewardTol) return false;
        }
        return true;
    }

    std::span<const double> row(int s, int a) const {
        size_t off = (size_t(s) * size_t(n_actions_) + size_t(a)) * size_t(n_states_);
        return {transition_.data() + off, size_t(n_states_)};
    }

    double prob(int s, int a, int next) const { return row(s, a)[size_t(next)]; }

    /// Index of r in the reward set, or -1 if absent (tolerance kRewardTol).
    int reward_index(double r) const {
        for (size_t i = 0; i < reward_set_.size(); ++i) {
            if (std::abs(reward_set_[i] - r) <= kRewardTol) return int(i);
        }
        return -1;
    }

    bool has_stay_action(int s) const {
        for (int a = 0; a < n_actions_; ++a) {
            if (prob(s, a, s) >= 1.0 - kDistTol) return true;
        }
        return false;
    }

    friend bool operator==(const Crmdp& a, const Crmdp& b) {
        return a.n_states_ == b.n_states_ && a.n_actions_ == b.n_actions_ &&
               a.reward_set_ == b.reward_set_ && a.transition_ == b.transition_ &&
               a.true_reward_ == b.true_reward_ && a.corruption_ == b.corruption_;
    }

  private:
    void canonicalize_corruption() {
        std::sort(corruption_.begin(), corruption_.end(), [](const auto& a, const auto& b) {
            if (a.state != b.state) return a.state < b.state;
            return a.r_in < b.r_in;
        });
        // Identity pairs carry no information; drop them.
        std::erase_if(corruption_,
                      [](const CorruptionPair& p) { return std::abs(p.r_in - p.r_out) <= kRewardTol; });
    }

    void validate() const {
        if (n_states_ <= 0 || n_actions_ <= 0)
            throw std::invalid_argument("Crmdp: need at least one state and one action");
        if (true_reward_.size() != size_t(n_states_))
            throw std::invalid_argument("Crmdp: true_reward size mismatch");
        if (transition_.size() != size_t(n_states_) * size_t(n_actions_) * size_t(n_states_))
            throw std::invalid_argument("Crmdp: transition size mismatch");
        for (double r : reward_set_) {
            if (r < -kRewardTol || r > 1.0 + kRewardTol)
                throw std::invalid_argument("Crmdp: reward set value outside [0,1]: " + std::to_string(r));
        }
        for (int s = 0; s < n_states_; ++s) {
            if (reward_index(true_reward_[size_t(s)]) < 0)
                throw std::invalid_argument("Crmdp: true reward of state " + std::to_string(s) +
                                            " not in reward set");
            for (int a = 0; a < n_actions_; ++a) {
                double sum = 0.0;
                for (double p : row(s, a)) {
                    if (p < -kDistTol)
                        throw std::invalid_argument("Crmdp: negative transition probability");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > kDistTol)
                    throw std::invalid_argument("Crmdp: transition row (" + std::to_string(s) + "," +
                                                std::to_string(a) + ") sums to " + std::to_string(sum));
            }
        }
        for (const auto& p : corruption_) {
            if (p.state < 0 || p.state >= n_states_)
                throw std::invalid_argument("Crmdp: corruption pair with out-of-range state");
            if (reward_index(p.r_in) < 0 || reward_index(p.r_out) < 0)
                throw std::invalid_argument("Crmdp: corruption pair with reward outside reward set");
        }
    }

    void materialize_observed() {
        observed_.resize(size_t(n_states_));
        for (int s = 0; s < n_states_; ++s) observed_[size_t(s)] = corrupt(s, true_reward_[size_t(s)]);
    }

    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<double> reward_set_;
    std::vector<double> transition_;
    std::vector<double> true_reward_;
    std::vector<CorruptionPair> corruption_;
    std::vector<double> observed_;
};

/// Observed reward function of a Crmdp, materialized per state. Together
/// with the source's transitions this is the induced observed MDP.
struct ObservedRewardView {
    const Crmdp* source = nullptr;
    std::vector<double> value;
};

inline ObservedRewardView observed_view(const Crmdp& m) {
    return ObservedRewardView{&m, m.observed_rewards()};
}

/// Transition structure only. Agents that must not see any rewards (the
/// exploring quantiliser) are handed this view.
struct DynamicsView {
    int states = 0;
    int actions = 0;
    std::span<const double> transition;

    int n_states() const { return states; }
    int n_actions() const { return actions; }
    std::span<const double> row(int s, int a) const {
        size_t off = (size_t(s) * size_t(actions) + size_t(a)) * size_t(states);
        return transition.subspan(off, size_t(states));
    }
    double prob(int s, int a, int next) const { return row(s, a)[size_t(next)]; }
};

inline DynamicsView dynamics_of(const Crmdp& m) {
    return {m.n_states(), m.n_actions(), m.transition_data()};
}

/// Transition structure plus observed rewards: the observed MDP. True
/// rewards are not reachable through this view.
struct ObservedMdpView {
    DynamicsView dynamics;
    std::span<const double> observed;

    int n_states() const { return dynamics.states; }
    int n_actions() const { return dynamics.actions; }
    std::span<const double> row(int s, int a) const { return dynamics.row(s, a); }
};

inline ObservedMdpView observed_mdp(const Crmdp& m) {
    return {dynamics_of(m), m.observed_rewards()};
}

/// Convenience builder for dense transition tables.
class TransitionBuilder {
  public:
    TransitionBuilder(int n_states, int n_actions)
        : n_states_(n_states), n_actions_(n_actions),
          data_(size_t(n_states) * size_t(n_actions) * size_t(n_states), 0.0) {}

    /// Deterministic move: action a in state s goes to next.
    TransitionBuilder& move(int s, int a, int next) {
        at(s, a, next) = 1.0;
        return *this;
    }

    TransitionBuilder& set(int s, int a, int next, double p) {
        at(s, a, next) = p;
        return *this;
    }

    std::vector<double> take() { return std::move(data_); }

  private:
    double& at(int s, int a, int next) {
        return data_[(size_t(s) * size_t(n_actions_) + size_t(a)) * size_t(n_states_) + size_t(next)];
    }

    int n_states_, n_actions_;
    std::vector<double> data_;
};

} // namespace crmdp
