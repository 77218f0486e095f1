#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "agent.hpp"
#include "crmdp.hpp"
#include "dp.hpp"

namespace crmdp {

struct ModelMisspecified : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * A posterior over a finite CRMDP class. Members must share the state and
 * action spaces. Consistency filtering is hard: observing a reward that a
 * member cannot produce zeroes that member out.
 */
struct BeliefState {
    std::vector<Crmdp> members;
    std::vector<double> prior;
    std::vector<double> posterior;
    std::map<int, double> observations;  // state -> observed reward seen there

    BeliefState(std::vector<Crmdp> class_members, std::vector<double> prior_weights)
        : members(std::move(class_members)), prior(std::move(prior_weights)) {
        if (members.empty()) throw std::invalid_argument("BeliefState: empty class");
        if (prior.size() != members.size())
            throw std::invalid_argument("BeliefState: prior size mismatch");
        double sum = 0.0;
        for (double b : prior) {
            if (b <= 0.0) throw std::invalid_argument("BeliefState: prior must have full support");
            sum += b;
        }
        if (std::abs(sum - 1.0) > kDistTol)
            throw std::invalid_argument("BeliefState: prior does not sum to 1");
        for (const auto& m : members) {
            if (m.n_states() != members[0].n_states() || m.n_actions() != members[0].n_actions())
                throw std::invalid_argument("BeliefState: members must share S and A");
        }
        posterior = prior;
    }

    int n_states() const { return members[0].n_states(); }
    int n_actions() const { return members[0].n_actions(); }

    double expected_true_reward(int s) const {
        double v = 0.0;
        for (size_t i = 0; i < members.size(); ++i)
            v += posterior[i] * members[i].true_reward(s);
        return v;
    }

    double expected_observed_reward(int s) const {
        double v = 0.0;
        for (size_t i = 0; i < members.size(); ++i)
            v += posterior[i] * members[i].observed_reward(s);
        return v;
    }
};

/// Conditions the belief on one reward observation: members whose observed
/// reward at s differs from the report are eliminated, the rest renormalized.
inline BeliefState belief_update(BeliefState bs, int s, double observed) {
    double total = 0.0;
    for (size_t i = 0; i < bs.members.size(); ++i) {
        if (std::abs(bs.members[i].observed_reward(s) - observed) > kRewardTol)
            bs.posterior[i] = 0.0;
        total += bs.posterior[i];
    }
    if (total <= 0.0)
        throw ModelMisspecified("belief_update: no class member is consistent with the observation");
    for (double& p : bs.posterior) p /= total;
    bs.observations[s] = observed;
    return bs;
}

enum class EtcMode { CR, RL };

/**
 * Explore-then-commit idealization of the Bayesian CR and RL agents: visit
 * every state once along shortest paths while conditioning the belief, then
 * permanently navigate to the state with the best posterior-expected reward
 * (true reward in CR mode, observed reward in RL mode; lowest index on ties).
 *
 * Navigation uses member 0's transition structure; the construction assumes
 * the class shares it.
 */
class EtcAgent final : public Agent {
  public:
    EtcAgent(BeliefState belief, EtcMode mode) : init_(std::move(belief)), mode_(mode),
        belief_(init_) {
        const Crmdp& nav = init_.members[0];
        hitting_policy_.reserve(size_t(nav.n_states()));
        for (int target = 0; target < nav.n_states(); ++target)
            hitting_policy_.push_back(navigation_policy(nav, target));
        hitting_time_.reserve(size_t(nav.n_states()));
        for (int target = 0; target < nav.n_states(); ++target)
            hitting_time_.push_back(min_expected_hitting_times(nav, target));
        reset(0);
    }

    void reset(uint64_t) override {
        belief_ = init_;
        visited_.assign(size_t(init_.n_states()), false);
        committed_ = -1;
    }

    int act(int state, double observed_reward) override {
        if (!visited_[size_t(state)]) {
            visited_[size_t(state)] = true;
            belief_ = belief_update(std::move(belief_), state, observed_reward);
        }
        if (committed_ < 0 && all_visited()) commit();
        int target = committed_ >= 0 ? committed_ : nearest_unvisited(state);
        return hitting_policy_[size_t(target)].action[size_t(state)];
    }

    int committed_state() const { return committed_; }
    const BeliefState& belief() const { return belief_; }

    nlohmann::json snapshot() const override {
        return {{"type", mode_ == EtcMode::CR ? "etc-cr" : "etc-rl"},
                {"committed", committed_},
                {"posterior", belief_.posterior}};
    }

  private:
    bool all_visited() const {
        for (bool v : visited_)
            if (!v) return false;
        return true;
    }

    int nearest_unvisited(int from) const {
        int best = -1;
        double best_time = 0.0;
        for (int s = 0; s < init_.n_states(); ++s) {
            if (visited_[size_t(s)]) continue;
            double time = hitting_time_[size_t(s)][size_t(from)];
            if (best < 0 || time < best_time - kDpTol) {
                best = s;
                best_time = time;
            }
        }
        return best;
    }

    void commit() {
        double best = -1.0;
        for (int s = 0; s < init_.n_states(); ++s) {
            double v = mode_ == EtcMode::CR ? belief_.expected_true_reward(s)
                                            : belief_.expected_observed_reward(s);
            if (v > best + kRewardTol) {
                best = v;
                committed_ = s;
            }
        }
    }

    BeliefState init_;
    EtcMode mode_;
    BeliefState belief_;
    std::vector<StationaryDeterministic> hitting_policy_;
    std::vector<std::vector<double>> hitting_time_;
    std::vector<bool> visited_;
    int committed_ = -1;
};

} // namespace crmdp
