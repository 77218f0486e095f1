#pragma once

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "crmdp.hpp"

namespace crmdp {

/**
 * Versioned JSON encoding of a Crmdp:
 *
 *   {"version": 1, "states": n, "actions": m,
 *    "transition": [[[p, ...], ...], ...],      // [s][a][s']
 *    "true_reward": [...],
 *    "corruption_pairs": [[s, r_in, r_out], ...],
 *    "reward_set": [...]}                        // optional on input
 *
 * Unlisted (state, reward) pairs are identity-corrupted. When reward_set is
 * absent, the set is derived from the true rewards and corruption pairs.
 */
inline nlohmann::json to_json(const Crmdp& m) {
    nlohmann::json tr = nlohmann::json::array();
    for (int s = 0; s < m.n_states(); ++s) {
        nlohmann::json per_action = nlohmann::json::array();
        for (int a = 0; a < m.n_actions(); ++a) {
            auto row = m.row(s, a);
            per_action.push_back(std::vector<double>(row.begin(), row.end()));
        }
        tr.push_back(std::move(per_action));
    }
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : m.corruption_pairs())
        pairs.push_back(nlohmann::json::array({p.state, p.r_in, p.r_out}));
    return nlohmann::json{{"version", 1},
                          {"states", m.n_states()},
                          {"actions", m.n_actions()},
                          {"transition", std::move(tr)},
                          {"true_reward", m.true_rewards()},
                          {"corruption_pairs", std::move(pairs)},
                          {"reward_set", m.reward_set()}};
}

inline Crmdp crmdp_from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j.at("version").get<int>() != 1)
        throw std::invalid_argument("crmdp_from_json: unsupported or missing version");
    int n = j.at("states").get<int>();
    int na = j.at("actions").get<int>();
    const auto& tr = j.at("transition");
    if (int(tr.size()) != n) throw std::invalid_argument("crmdp_from_json: transition shape");
    std::vector<double> transition;
    transition.reserve(size_t(n) * size_t(na) * size_t(n));
    for (const auto& per_action : tr) {
        if (int(per_action.size()) != na)
            throw std::invalid_argument("crmdp_from_json: transition shape");
        for (const auto& row : per_action) {
            if (int(row.size()) != n) throw std::invalid_argument("crmdp_from_json: transition shape");
            for (const auto& p : row) transition.push_back(p.get<double>());
        }
    }
    auto true_reward = j.at("true_reward").get<std::vector<double>>();
    std::vector<CorruptionPair> pairs;
    for (const auto& e : j.at("corruption_pairs"))
        pairs.push_back({e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<double>()});

    std::vector<double> reward_set;
    if (j.contains("reward_set")) {
        reward_set = j.at("reward_set").get<std::vector<double>>();
    } else {
        std::set<double> derived(true_reward.begin(), true_reward.end());
        for (const auto& p : pairs) {
            derived.insert(p.r_in);
            derived.insert(p.r_out);
        }
        reward_set.assign(derived.begin(), derived.end());
    }
    return Crmdp(n, na, std::move(reward_set), std::move(transition), std::move(true_reward),
                 std::move(pairs));
}

inline void save_crmdp(const Crmdp& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_crmdp: cannot open " + path);
    out << to_json(m).dump(2) << "\n";
}

inline Crmdp load_crmdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_crmdp: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return crmdp_from_json(j);
}

} // namespace crmdp
