#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "crmdp.hpp"
#include "rng.hpp"

namespace crmdp {

/**
 * The two-state cooperative value-learning environment where a corrupted
 * view of the supervisor's actions is indistinguishable from a supervisor
 * with different preferences.
 *
 * States s1 = 0, s2 = 1. Agent actions: go1 = 0, go2 = 1, wait = 2. Human
 * actions: h1 = 0, h2 = 1. Agent action go_i forces state i; only wait
 * cedes control to the human, and then only in s2:
 *     (wait, h1) from s2 reaches s1 with probability 1 - p,
 *     (wait, h2) from s2 reaches s1 with probability 0.5 - p.
 *
 * Hypothesis A: p = 0.5, the human prefers s1, and the action channel in s2
 * is corrupt (always reports h2). Hypothesis B: p = 0, the human prefers s2,
 * and the channel is honest. Both predict the same observed actions and the
 * same 50% transition out of s2 under wait, so no amount of data separates
 * them.
 */
struct CirlHypothesis {
    double p = 0.0;
    int best_state = 0;
    bool s2_corrupt = false;
};

struct CirlExample {
    static constexpr int kGo1 = 0, kGo2 = 1, kWait = 2;
    static constexpr int kHuman1 = 0, kHuman2 = 1;

    CirlHypothesis h1{0.5, 0, true};
    CirlHypothesis h2{0.0, 1, false};

    const CirlHypothesis& hypothesis(int i) const { return i == 0 ? h1 : h2; }

    /// P(next = s1 | state, agent action, human action) under parameter p.
    double prob_to_s1(const CirlHypothesis& h, int state, int agent_action,
                      int human_action) const {
        if (agent_action == kGo1) return 1.0;
        if (agent_action == kGo2) return 0.0;
        if (state == 0) return 1.0;  // wait in s1 stays put
        return human_action == kHuman1 ? 1.0 - h.p : 0.5 - h.p;
    }

    /// The human plays toward its preferred state where it matters (s2);
    /// in s1 every human action acts identically, so both hypotheses use
    /// the same canonical choice there.
    int human_action(const CirlHypothesis& h, int state) const {
        if (state == 0) return kHuman1;
        return h.best_state == 0 ? kHuman1 : kHuman2;
    }

    /// The observation channel: honest in s1; in s2 it always reports h2
    /// (corruption under hypothesis A, truthful under hypothesis B).
    int observed_action(const CirlHypothesis&, int state, int true_action) const {
        if (state == 0) return true_action;
        return kHuman2;
    }

    double true_reward(const CirlHypothesis& h, int state) const {
        return state == h.best_state ? 1.0 : 0.0;
    }
};

inline CirlExample cirl_example() { return {}; }

struct CirlStep {
    int state;            // state the step starts in
    int agent_action;
    int observed_human;   // action the agent saw
    int next_state;
};

/**
 * Exact trajectory likelihood under one hypothesis: the product over steps
 * of P(observed action | state) * P(next state | state, actions).
 */
inline double cirl_likelihood(const CirlExample& ex, const CirlHypothesis& h,
                              const std::vector<CirlStep>& steps) {
    double p = 1.0;
    for (const auto& st : steps) {
        int played = ex.human_action(h, st.state);
        if (ex.observed_action(h, st.state, played) != st.observed_human) return 0.0;
        double to_s1 = ex.prob_to_s1(h, st.state, st.agent_action, played);
        p *= st.next_state == 0 ? to_s1 : 1.0 - to_s1;
    }
    return p;
}

/// Likelihoods of a trajectory under both hypotheses. A trajectory that is
/// impossible under both is malformed and raises an error.
inline std::pair<double, double> cirl_indistinguishability(const CirlExample& ex,
                                                           const std::vector<CirlStep>& steps) {
    double a = cirl_likelihood(ex, ex.h1, steps);
    double b = cirl_likelihood(ex, ex.h2, steps);
    if (a == 0.0 && b == 0.0)
        throw std::invalid_argument("cirl_indistinguishability: trajectory impossible under both hypotheses");
    return {a, b};
}

/// Samples a trajectory under a ground-truth hypothesis with the given
/// agent action sequence (agent actions drawn uniformly when empty).
inline std::vector<CirlStep> cirl_sample_trajectory(const CirlExample& ex,
                                                    const CirlHypothesis& truth, int s0,
                                                    int length, uint64_t seed) {
    Rng rng(seed);
    std::vector<CirlStep> steps;
    int s = s0;
    for (int k = 0; k < length; ++k) {
        int a = rng.uniform_int(3);
        int played = ex.human_action(truth, s);
        int observed = ex.observed_action(truth, s, played);
        double to_s1 = ex.prob_to_s1(truth, s, a, played);
        int next = rng.uniform01() < to_s1 ? 0 : 1;
        steps.push_back({s, a, observed, next});
        s = next;
    }
    return steps;
}

/**
 * The posterior-expected-reward maximizer for this example: it keeps a
 * belief over the two hypotheses, updates it from each observed step (a
 * no-op here, the hypotheses being indistinguishable), and heads for the
 * state with the highest posterior-expected true reward.
 */
class CirlCrAgent {
  public:
    CirlCrAgent(CirlExample ex, double prior_h2) : ex_(ex), prior_h2_(prior_h2) {
        if (prior_h2 <= 0.0 || prior_h2 >= 1.0)
            throw std::invalid_argument("CirlCrAgent: prior must be interior");
        reset(0);
    }

    void reset(uint64_t) { posterior_h2_ = prior_h2_; }

    int act(int state) const {
        double r_s1 = (1.0 - posterior_h2_) * ex_.true_reward(ex_.h1, 0) +
                      posterior_h2_ * ex_.true_reward(ex_.h2, 0);
        double r_s2 = (1.0 - posterior_h2_) * ex_.true_reward(ex_.h1, 1) +
                      posterior_h2_ * ex_.true_reward(ex_.h2, 1);
        int target = r_s1 >= r_s2 ? 0 : 1;  // ties prefer the lower index
        (void)state;
        return target == 0 ? CirlExample::kGo1 : CirlExample::kGo2;
    }

    void observe(const CirlStep& step) {
        double la = cirl_likelihood(ex_, ex_.h1, {step});
        double lb = cirl_likelihood(ex_, ex_.h2, {step});
        double z = (1.0 - posterior_h2_) * la + posterior_h2_ * lb;
        if (z > 0.0) posterior_h2_ = posterior_h2_ * lb / z;
    }

    double posterior_h2() const { return posterior_h2_; }

  private:
    CirlExample ex_;
    double prior_h2_;
    double posterior_h2_ = 0.5;
};

/// Runs the belief-tracking agent under a ground-truth hypothesis and
/// returns its average per-step true reward.
inline double cirl_run_cr_agent(const CirlExample& ex, const CirlHypothesis& truth,
                                double prior_h2, int s0, int64_t t, uint64_t seed) {
    CirlCrAgent agent(ex, prior_h2);
    agent.reset(seed);
    Rng rng(derive_seed(seed, 0));
    int s = s0;
    double total = 0.0;
    for (int64_t k = 0; k <= t; ++k) {
        total += ex.true_reward(truth, s);
        int a = agent.act(s);
        int played = ex.human_action(truth, s);
        int observed = ex.observed_action(truth, s, played);
        double to_s1 = ex.prob_to_s1(truth, s, a, played);
        int next = rng.uniform01() < to_s1 ? 0 : 1;
        agent.observe({s, a, observed, next});
        s = next;
    }
    return total / double(t + 1);
}

/// The single-hypothesis view of the example as a plain CRMDP: the human's
/// policy folded into the dynamics, rewards set by the hypothesis.
inline Crmdp cirl_induced_crmdp(const CirlExample& ex, const CirlHypothesis& h) {
    TransitionBuilder tb(2, 3);
    for (int s = 0; s < 2; ++s) {
        for (int a = 0; a < 3; ++a) {
            double to_s1 = ex.prob_to_s1(h, s, a, ex.human_action(h, s));
            tb.set(s, a, 0, to_s1);
            tb.set(s, a, 1, 1.0 - to_s1);
        }
    }
    std::vector<double> true_reward{ex.true_reward(h, 0), ex.true_reward(h, 1)};
    return Crmdp(2, 3, {0.0, 1.0}, tb.take(), std::move(true_reward), {});
}

} // namespace crmdp
