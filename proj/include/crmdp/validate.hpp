#pragma once

#include <string>
#include <vector>

#include "crmdp.hpp"
#include "dp.hpp"

namespace crmdp {

/**
 * Report on the two standard simplifying assumptions:
 *   1a  corruption is the identity on every designated safe state;
 *   1b  at most q of the risky (non-safe) states are corrupt;
 *   2a  the CRMDP is communicating;
 *   2b  every state has a stay action;
 *   2c  for every reward-grid value d, fewer than d * |risky| risky states
 *       have true reward strictly below d.
 */
struct AssumptionsReport {
    bool safe_states_uncorrupted = true;   // 1a
    bool corruption_within_budget = true;  // 1b
    bool communicating = true;             // 2a
    bool stay_action_everywhere = true;    // 2b
    bool high_reward_prevalence = true;    // 2c
    int corrupt_risky_count = 0;
    std::vector<int> corrupt_safe_states;
    std::vector<int> states_missing_stay;
    double failing_delta = -1.0;  // first grid value violating 2c, if any

    bool assumption1() const { return safe_states_uncorrupted && corruption_within_budget; }
    bool assumption2() const {
        return communicating && stay_action_everywhere && high_reward_prevalence;
    }
};

inline AssumptionsReport validate_assumptions(const Crmdp& m, const std::vector<int>& safe_set,
                                              int q) {
    AssumptionsReport rep;
    std::vector<bool> safe(size_t(m.n_states()), false);
    for (int s : safe_set) safe.at(size_t(s)) = true;

    for (int s : safe_set) {
        if (!m.state_uncorrupted(s)) {
            rep.safe_states_uncorrupted = false;
            rep.corrupt_safe_states.push_back(s);
        }
    }

    int risky_count = 0;
    for (int s = 0; s < m.n_states(); ++s) {
        if (safe[size_t(s)]) continue;
        ++risky_count;
        if (!m.state_uncorrupted(s)) ++rep.corrupt_risky_count;
    }
    rep.corruption_within_budget = rep.corrupt_risky_count <= q;

    rep.communicating = is_communicating(m);

    for (int s = 0; s < m.n_states(); ++s) {
        if (!m.has_stay_action(s)) {
            rep.stay_action_everywhere = false;
            rep.states_missing_stay.push_back(s);
        }
    }

    for (double delta : m.reward_set()) {
        int below = 0;
        for (int s = 0; s < m.n_states(); ++s) {
            if (safe[size_t(s)]) continue;
            if (m.true_reward(s) < delta - kRewardTol) ++below;
        }
        if (double(below) > delta * double(risky_count) + kRewardTol) {
            rep.high_reward_prevalence = false;
            rep.failing_delta = delta;
            break;
        }
    }
    return rep;
}

} // namespace crmdp
