#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "crmdp.hpp"
#include "dp.hpp"
#include "rng.hpp"
#include "sim.hpp"

namespace crmdp {

/**
 * A CRMDP with decoupled feedback: instead of its own reward, the agent in
 * state s is shown a pair (target, report) where the target is drawn
 * uniformly from all states and the report is observer s's possibly-corrupt
 * view of the target's reward, or blank when the target is not observable
 * from s.
 */
struct DecoupledCrmdp {
    Crmdp base;
    // observed_family[s][s'] = what observer s reports about target s'
    // (std::nullopt encodes a blank).
    std::vector<std::vector<std::optional<double>>> observed_family;

    std::optional<double> report(int observer, int target) const {
        return observed_family[size_t(observer)][size_t(target)];
    }
};

/// Which targets are observable from which states, plus the corruption
/// budget the class is assumed to satisfy.
struct ObservationGraph {
    int n_states = 0;
    std::vector<std::vector<int>> observers_of;  // per target: sorted observer list
    std::vector<int> safe_set;
    int q = 0;

    bool has_edge(int observer, int target) const {
        const auto& obs = observers_of[size_t(target)];
        return std::binary_search(obs.begin(), obs.end(), observer);
    }
};

inline ObservationGraph observation_graph(const DecoupledCrmdp& dm, std::vector<int> safe_set,
                                          int q) {
    ObservationGraph g;
    g.n_states = dm.base.n_states();
    g.observers_of.resize(size_t(g.n_states));
    for (int s = 0; s < g.n_states; ++s)
        for (int target = 0; target < g.n_states; ++target)
            if (dm.report(s, target).has_value()) g.observers_of[size_t(target)].push_back(s);
    g.safe_set = std::move(safe_set);
    g.q = q;
    std::sort(g.safe_set.begin(), g.safe_set.end());
    return g;
}

/// Per-target learnability: the target's reward can be pinned down when a
/// safe observer sees it or when more than 2q states see it.
struct LearnabilityReport {
    std::vector<bool> per_target;
    bool all = true;
};

inline LearnabilityReport learnability_check(const ObservationGraph& g) {
    LearnabilityReport rep;
    rep.per_target.resize(size_t(g.n_states), false);
    for (int target = 0; target < g.n_states; ++target) {
        const auto& obs = g.observers_of[size_t(target)];
        bool safe_observer = false;
        for (int s : obs) {
            if (std::binary_search(g.safe_set.begin(), g.safe_set.end(), s)) {
                safe_observer = true;
                break;
            }
        }
        bool ok = safe_observer || int(obs.size()) > 2 * g.q;
        rep.per_target[size_t(target)] = ok;
        rep.all = rep.all && ok;
    }
    return rep;
}

struct RewardObservation {
    int observer;
    int target;
    double value;
};

enum class ReconstructionMethod { SafeState, MajorityVote };

struct TargetReconstruction {
    bool known = false;
    double value = 0.0;
    ReconstructionMethod method = ReconstructionMethod::SafeState;
    std::string reason;  // set when unresolvable
};

struct ReconstructionResult {
    std::vector<TargetReconstruction> targets;
    std::vector<int> corrupt_observer_candidates;
    bool complete = true;  // every target known
};

/**
 * Reconstructs true rewards from collected observations. Per target: a safe
 * observer's report is final; otherwise a strict majority among more than 2q
 * distinct observers decides; otherwise the target is unresolvable.
 * Observers contradicting a known value are listed as corrupt candidates.
 *
 * Conflicting safe reports, or >2q observers with no strict majority, are
 * impossible under the limited-corruption assumption and throw
 * ModelViolation.
 */
struct ModelViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline ReconstructionResult reconstruct(const std::vector<RewardObservation>& observations,
                                        const ObservationGraph& g) {
    // Deduplicate: one report per (observer, target). Observers are
    // deterministic, so duplicates must agree.
    std::vector<std::map<int, double>> reports(size_t(g.n_states), std::map<int, double>{});  // target -> observer -> value
    for (const auto& o : observations) {
        auto [it, inserted] = reports[size_t(o.target)].try_emplace(o.observer, o.value);
        if (!inserted && std::abs(it->second - o.value) > kRewardTol)
            throw ModelViolation("reconstruct: one observer reported two values for a target");
    }

    ReconstructionResult out;
    out.targets.resize(size_t(g.n_states));
    std::vector<char> corrupt(size_t(g.n_states), 0);

    for (int target = 0; target < g.n_states; ++target) {
        auto& rec = out.targets[size_t(target)];
        const auto& by_observer = reports[size_t(target)];

        bool have_safe = false;
        double safe_value = 0.0;
        for (const auto& [observer, value] : by_observer) {
            if (!std::binary_search(g.safe_set.begin(), g.safe_set.end(), observer)) continue;
            if (have_safe && std::abs(safe_value - value) > kRewardTol)
                throw ModelViolation("reconstruct: safe observers disagree about target " +
                                     std::to_string(target));
            have_safe = true;
            safe_value = value;
        }
        if (have_safe) {
            rec.known = true;
            rec.value = safe_value;
            rec.method = ReconstructionMethod::SafeState;
        } else if (int(by_observer.size()) > 2 * g.q) {
            // Cluster values within tolerance, then demand a strict majority.
            std::vector<std::pair<double, int>> groups;
            for (const auto& [observer, value] : by_observer) {
                bool found = false;
                for (auto& grp : groups) {
                    if (std::abs(grp.first - value) <= kRewardTol) {
                        ++grp.second;
                        found = true;
                        break;
                    }
                }
                if (!found) groups.push_back({value, 1});
            }
            int n_obs = int(by_observer.size());
            const std::pair<double, int>* winner = nullptr;
            for (const auto& grp : groups)
                if (2 * grp.second > n_obs) winner = &grp;
            if (winner == nullptr)
                throw ModelViolation("reconstruct: no strict majority among " +
                                     std::to_string(n_obs) + " observers of target " +
                                     std::to_string(target));
            rec.known = true;
            rec.value = winner->first;
            rec.method = ReconstructionMethod::MajorityVote;
        } else {
            rec.known = false;
            rec.reason = "only " + std::to_string(by_observer.size()) +
                         " observers and none safe (need > " + std::to_string(2 * g.q) + ")";
            out.complete = false;
        }

        if (rec.known) {
            for (const auto& [observer, value] : by_observer)
                if (std::abs(value - rec.value) > kRewardTol) corrupt[size_t(observer)] = 1;
        }
    }
    for (int s = 0; s < g.n_states; ++s)
        if (corrupt[size_t(s)]) out.corrupt_observer_candidates.push_back(s);
    return out;
}

/// Expected-time cover bound 4 * D * |A|^(2D) * |S|^3 for random-walk
/// exploration of every (state, observed-target) pair. Non-integer diameters
/// use the next integer in the exponent.
inline double exploration_bound(int n_states, int n_actions, double diam) {
    if (diam < 0.0) throw std::invalid_argument("exploration_bound: negative diameter");
    double exponent = 2.0 * std::ceil(diam);
    return 4.0 * diam * std::pow(double(n_actions), exponent) *
           double(n_states) * double(n_states) * double(n_states);
}

struct ExplorationLog {
    std::vector<RewardObservation> observations;
    int64_t steps = 0;
};

/**
 * Random-walks until every observable (observer, target) pair has been seen
 * at least once, sampling one uniformly random target per step. Aborts with
 * a diagnostic after `step_limit_factor` times the analytic bound.
 */
inline ExplorationLog explore(const DecoupledCrmdp& dm, uint64_t seed,
                              double step_limit_factor = 100.0) {
    const Crmdp& m = dm.base;
    int n = m.n_states();
    double diam = diameter(m);  // throws NotCommunicating when not
    double bound = exploration_bound(n, m.n_actions(), std::max(diam, 1.0));
    int64_t limit = int64_t(step_limit_factor * bound) + 16;

    int64_t remaining = 0;
    std::vector<std::vector<char>> seen(size_t(n), std::vector<char>(size_t(n), 0));
    for (int s = 0; s < n; ++s)
        for (int target = 0; target < n; ++target)
            if (dm.report(s, target).has_value()) ++remaining;

    CompiledEnv env(m);
    Rng walk_rng(derive_seed(seed, 0));
    Rng target_rng(derive_seed(seed, 1));
    ExplorationLog log;
    int s = 0;
    while (remaining > 0) {
        if (log.steps >= limit)
            throw std::runtime_error("explore: step limit " + std::to_string(limit) +
                                     " reached with " + std::to_string(remaining) +
                                     " pairs missing");
        int target = target_rng.uniform_int(n);
        auto report = dm.report(s, target);
        if (report.has_value()) {
            if (!seen[size_t(s)][size_t(target)]) {
                seen[size_t(s)][size_t(target)] = 1;
                --remaining;
            }
            log.observations.push_back({s, target, *report});
        }
        s = env.step(s, walk_rng.uniform_int(m.n_actions()), walk_rng);
        ++log.steps;
    }
    return log;
}

/**
 * Decoupled-feedback agent: explore until every observable pair is seen
 * (estimating transitions from counts on the way), reconstruct the true
 * rewards, then follow the average-reward optimal policy of the
 * certainty-equivalent MDP, re-solving whenever the elapsed time doubles.
 *
 * Construction requires the observation graph to pass learnability_check;
 * if reconstruction still comes back incomplete the agent keeps exploring
 * and flags it in the snapshot.
 */
class ReconstructThenPlanAgent {
  public:
    ReconstructThenPlanAgent(const DecoupledCrmdp& dm, ObservationGraph graph)
        : dm_(&dm), graph_(std::move(graph)), rng_(0) {
        auto learn = learnability_check(graph_);
        if (!learn.all)
            throw std::invalid_argument(
                "ReconstructThenPlanAgent: observation graph fails the learnability condition");
        reset(0);
    }

    void reset(uint64_t seed) {
        rng_ = Rng(seed);
        int n = dm_->base.n_states();
        remaining_ = 0;
        seen_.assign(size_t(n), std::vector<char>(size_t(n), 0));
        for (int s = 0; s < n; ++s)
            for (int target = 0; target < n; ++target)
                if (dm_->report(s, target).has_value()) ++remaining_;
        observations_.clear();
        counts_.assign(size_t(n) * size_t(dm_->base.n_actions()) * size_t(n), 0);
        planning_ = false;
        unresolved_ = false;
        steps_ = 0;
        next_resolve_ = 1;
        policy_.action.assign(size_t(n), 0);
        prev_state_ = prev_action_ = -1;
    }

    /// One decoupled observation step: the current state plus the sampled
    /// (target, report) pair. Returns the chosen action.
    int act(int state, int target, std::optional<double> report) {
        int n = dm_->base.n_states();
        if (prev_state_ >= 0)
            ++counts_[(size_t(prev_state_) * size_t(dm_->base.n_actions()) + size_t(prev_action_)) *
                          size_t(n) + size_t(state)];
        if (report.has_value()) {
            if (!seen_[size_t(state)][size_t(target)]) {
                seen_[size_t(state)][size_t(target)] = 1;
                --remaining_;
                observations_.push_back({state, target, *report});
            }
        }
        ++steps_;

        if (!planning_ && remaining_ == 0) try_plan();
        if (planning_ && steps_ >= next_resolve_) {
            solve();
            next_resolve_ = steps_ * 2;
        }

        int a = planning_ ? policy_.action[size_t(state)]
                          : rng_.uniform_int(dm_->base.n_actions());
        prev_state_ = state;
        prev_action_ = a;
        return a;
    }

    bool planning() const { return planning_; }
    const std::vector<double>& reconstructed_rewards() const { return rewards_; }

    nlohmann::json snapshot() const {
        return {{"type", "reconstruct-then-plan"},
                {"planning", planning_},
                {"unresolved", unresolved_},
                {"exploration_steps", steps_}};
    }

  private:
    void try_plan() {
        auto result = reconstruct(observations_, graph_);
        if (!result.complete) {
            unresolved_ = true;  // keep exploring; more data cannot hurt
            return;
        }
        rewards_.resize(size_t(dm_->base.n_states()));
        for (int s = 0; s < dm_->base.n_states(); ++s)
            rewards_[size_t(s)] = result.targets[size_t(s)].value;
        planning_ = true;
        unresolved_ = false;
        solve();
        next_resolve_ = steps_ * 2;
    }

    void solve() {
        int n = dm_->base.n_states(), na = dm_->base.n_actions();
        // Certainty-equivalent transitions from visit counts; rows never
        // tried fall back to uniform.
        std::vector<double> est(size_t(n) * size_t(na) * size_t(n), 0.0);
        for (int s = 0; s < n; ++s) {
            for (int a = 0; a < na; ++a) {
                size_t off = (size_t(s) * size_t(na) + size_t(a)) * size_t(n);
                int64_t total = 0;
                for (int s2 = 0; s2 < n; ++s2) total += counts_[off + size_t(s2)];
                for (int s2 = 0; s2 < n; ++s2)
                    est[off + size_t(s2)] =
                        total > 0 ? double(counts_[off + size_t(s2)]) / double(total)
                                  : 1.0 / double(n);
            }
        }
        DynamicsView ce{n, na, est};
        policy_ = average_reward_optimum(ce, rewards_).policy;
    }

    const DecoupledCrmdp* dm_;
    ObservationGraph graph_;
    Rng rng_;
    std::vector<std::vector<char>> seen_;
    int64_t remaining_ = 0;
    std::vector<RewardObservation> observations_;
    std::vector<int64_t> counts_;
    std::vector<double> rewards_;
    StationaryDeterministic policy_;
    bool planning_ = false;
    bool unresolved_ = false;
    int64_t steps_ = 0;
    int64_t next_resolve_ = 1;
    int prev_state_ = -1;
    int prev_action_ = -1;
};

/// Runs a decoupled-feedback interaction loop for t steps, returning the
/// cumulative true reward collected.
template <typename DecoupledAgent>
double simulate_decoupled(const DecoupledCrmdp& dm, DecoupledAgent& agent, int s0, int64_t t,
                          uint64_t seed) {
    CompiledEnv env(dm.base);
    Rng env_rng(derive_seed(seed, 0));
    Rng target_rng(derive_seed(seed, 2));
    agent.reset(derive_seed(seed, 1));
    int s = s0;
    double total_true = 0.0;
    for (int64_t k = 0; k <= t; ++k) {
        total_true += dm.base.true_reward(s);
        int target = target_rng.uniform_int(dm.base.n_states());
        int a = agent.act(s, target, dm.report(s, target));
        if (k < t) s = env.step(s, a, env_rng);
    }
    return total_true;
}

// ---------------------------------------------------------------------------
// Observation graph serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ObservationGraph& g) {
    nlohmann::json adjacency = nlohmann::json::array();
    for (int s = 0; s < g.n_states; ++s) {
        std::vector<int> targets;
        for (int target = 0; target < g.n_states; ++target)
            if (g.has_edge(s, target)) targets.push_back(target);
        adjacency.push_back(std::move(targets));
    }
    return {{"version", 1},
            {"states", g.n_states},
            {"q", g.q},
            {"safe_set", g.safe_set},
            {"adjacency", std::move(adjacency)}};
}

inline ObservationGraph observation_graph_from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j.at("version").get<int>() != 1)
        throw std::invalid_argument("observation_graph_from_json: unsupported version");
    ObservationGraph g;
    g.n_states = j.at("states").get<int>();
    g.q = j.at("q").get<int>();
    g.safe_set = j.at("safe_set").get<std::vector<int>>();
    std::sort(g.safe_set.begin(), g.safe_set.end());
    g.observers_of.resize(size_t(g.n_states));
    const auto& adjacency = j.at("adjacency");
    if (int(adjacency.size()) != g.n_states)
        throw std::invalid_argument("observation_graph_from_json: adjacency shape");
    for (int s = 0; s < g.n_states; ++s)
        for (const auto& target : adjacency[size_t(s)])
            g.observers_of.at(size_t(target.get<int>())).push_back(s);
    for (auto& obs : g.observers_of) std::sort(obs.begin(), obs.end());
    return g;
}

} // namespace crmdp
