#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "crmdp.hpp"

namespace crmdp {

struct RewardSetNotSymmetric : std::invalid_argument {
    explicit RewardSetNotSymmetric(double r)
        : std::invalid_argument("mirror: reward set not closed under r -> 1-r; offending reward " +
                                std::to_string(r)),
          reward(r) {}
    double reward;
};

/**
 * The reflected CRMDP: true rewards become 1 - r and the corruption function
 * becomes C_s(1 - x), leaving the observed rewards (and hence all agent
 * behavior) unchanged. Requires the reward set to be closed under r -> 1-r.
 *
 * All reflected values are snapped to exact reward-set members so that the
 * observed reward function of the result is bitwise identical to the input's.
 */
inline Crmdp mirror(const Crmdp& m) {
    const auto& rs = m.reward_set();
    std::vector<double> reflected(rs.size());
    for (size_t i = 0; i < rs.size(); ++i) {
        int j = m.reward_index(1.0 - rs[i]);
        if (j < 0) throw RewardSetNotSymmetric(rs[i]);
        reflected[i] = rs[size_t(j)];
    }
    auto reflect = [&](double r) {
        int i = m.reward_index(r);
        return reflected[size_t(i)];
    };

    std::vector<double> true_reward(size_t(m.n_states()), 0.0);
    for (int s = 0; s < m.n_states(); ++s) true_reward[size_t(s)] = reflect(m.true_reward(s));

    std::vector<CorruptionPair> pairs;
    for (int s = 0; s < m.n_states(); ++s) {
        for (double r : rs) {
            double out = m.corrupt(s, reflect(r));
            if (std::abs(out - r) > kRewardTol) pairs.push_back({s, r, out});
        }
    }

    return Crmdp(m.n_states(), m.n_actions(), rs, m.transition_data(), std::move(true_reward),
                 std::move(pairs));
}

} // namespace crmdp
