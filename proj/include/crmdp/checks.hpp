#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "belief.hpp"
#include "cirl.hpp"
#include "crmdp.hpp"
#include "decoupled.hpp"
#include "dp.hpp"
#include "envs.hpp"
#include "harness.hpp"
#include "mirror.hpp"
#include "qlearning.hpp"
#include "quantiliser.hpp"
#include "rng.hpp"
#include "sim.hpp"
#include "validate.hpp"

namespace crmdp {

struct CheckResult {
    std::string id;
    std::string name;
    bool passed = true;
    std::vector<std::string> details;

    void require(bool ok, const std::string& what) {
        passed = passed && ok;
        details.push_back(std::string(ok ? "  ok: " : "  FAIL: ") + what);
    }
    void note(const std::string& what) { details.push_back("  " + what); }
};

namespace detail {

inline std::string fmt(double x, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << std::fixed << x;
    return os.str();
}

/// Random CRMDP whose reward set is closed under r -> 1 - r.
inline Crmdp random_symmetric_crmdp(Rng& rng, int max_states = 6) {
    int n = 2 + rng.uniform_int(max_states - 1);
    int na = 1 + rng.uniform_int(3);
    std::vector<double> rs{0.0, 0.5, 1.0};
    const std::pair<double, double> extra[4] = {{0.1, 0.9}, {0.2, 0.8}, {0.3, 0.7}, {0.4, 0.6}};
    for (int k = 0; k < 2; ++k) {
        if (rng.uniform01() < 0.5) {
            auto [a, b] = extra[rng.uniform_int(4)];
            rs.push_back(a);
            rs.push_back(b);
        }
    }
    std::sort(rs.begin(), rs.end());
    rs.erase(std::unique(rs.begin(), rs.end()), rs.end());

    TransitionBuilder tb(n, na);
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < na; ++a) {
            if (rng.uniform01() < 0.5) {
                tb.move(s, a, rng.uniform_int(n));
            } else {
                int k = 2 + rng.uniform_int(2);
                std::vector<double> w(size_t(k), 0.0);
                double total = 0.0;
                for (double& x : w) {
                    x = 0.1 + rng.uniform01();
                    total += x;
                }
                std::vector<double> row(size_t(n), 0.0);
                for (int j = 0; j < k; ++j) row[size_t(rng.uniform_int(n))] += w[size_t(j)] / total;
                double sum = 0.0;
                for (double p : row) sum += p;
                for (int s2 = 0; s2 < n; ++s2) tb.set(s, a, s2, row[size_t(s2)] / sum);
            }
        }
    }

    std::vector<double> true_reward(size_t(n), 0.0);
    for (double& r : true_reward) r = rs[size_t(rng.uniform_int(int(rs.size())))];
    std::vector<CorruptionPair> pairs;
    for (int s = 0; s < n; ++s) {
        if (rng.uniform01() < 0.4) {
            double out = rs[size_t(rng.uniform_int(int(rs.size())))];
            pairs.push_back({s, true_reward[size_t(s)], out});
        }
    }
    return Crmdp(n, na, std::move(rs), tb.take(), std::move(true_reward), std::move(pairs));
}

inline StationaryStochastic random_stochastic_policy(const Crmdp& m, Rng& rng) {
    StationaryStochastic pol;
    pol.action_probs.resize(size_t(m.n_states()));
    for (auto& row : pol.action_probs) {
        row.resize(size_t(m.n_actions()), 0.0);
        double total = 0.0;
        for (double& x : row) {
            x = 0.05 + rng.uniform01();
            total += x;
        }
        double acc = 0.0;
        for (size_t i = 0; i + 1 < row.size(); ++i) {
            row[i] /= total;
            acc += row[i];
        }
        row.back() = 1.0 - acc;
    }
    return pol;
}

/**
 * Random easy CRMDP for the stay-in-place quantiliser bound: observed
 * rewards form the exact uniform grid i/n (so the high-reward-prevalence
 * assumption holds with equality), dynamics are deterministic with a stay
 * action, a cycle, and two affine shuffles for fast mixing, and the q
 * corrupt states sit at the top of the observed range with true reward 0.
 */
inline Crmdp planted_easy_crmdp(int n, int q, Rng& rng) {
    std::vector<int> perm(size_t(n), 0);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[size_t(i)], perm[size_t(rng.uniform_int(i + 1))]);

    std::vector<double> observed(size_t(n), 0.0);
    for (int s = 0; s < n; ++s) observed[size_t(s)] = double(perm[size_t(s)] + 1) / double(n);

    int multipliers[2] = {0, 0};
    const int candidates[] = {3, 7, 11, 13, 17, 19, 23, 29};
    int found = 0;
    for (int c : candidates) {
        if (std::gcd(c, n) == 1) {
            multipliers[found++] = c;
            if (found == 2) break;
        }
    }
    if (found < 2) throw std::invalid_argument("planted_easy_crmdp: no coprime shuffle for n");

    TransitionBuilder tb(n, 4);
    for (int s = 0; s < n; ++s) {
        tb.move(s, 0, s);                                      // stay
        tb.move(s, 1, (s + 1) % n);                            // cycle
        tb.move(s, 2, (multipliers[0] * s + 1) % n);           // shuffles
        tb.move(s, 3, (multipliers[1] * s + 5) % n);
    }

    std::vector<double> reward_set{0.0};
    for (int i = 1; i <= n; ++i) reward_set.push_back(double(i) / double(n));

    std::vector<double> true_reward = observed;
    std::vector<CorruptionPair> pairs;
    // Corrupt the q states with the highest observed reward: truth 0.
    for (int rank = n - q; rank < n; ++rank) {
        for (int s = 0; s < n; ++s) {
            if (perm[size_t(s)] == rank) {
                true_reward[size_t(s)] = 0.0;
                pairs.push_back({s, 0.0, observed[size_t(s)]});
            }
        }
    }
    return Crmdp(n, 4, std::move(reward_set), tb.take(), std::move(true_reward), std::move(pairs));
}

/// Random fully-mixing unichain CRMDP with q planted top-observed corrupt
/// states; every deterministic policy induces an irreducible chain.
inline Crmdp random_unichain_crmdp(Rng& rng, int max_states, int max_actions, int q) {
    int n = 3 + rng.uniform_int(max_states - 2);
    int na = 2 + rng.uniform_int(max_actions - 1);
    q = std::min(q, n - 1);

    TransitionBuilder tb(n, na);
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < na; ++a) {
            std::vector<double> row(size_t(n), 0.0);
            double total = 0.0;
            for (double& x : row) {
                x = 0.05 + rng.uniform01();
                total += x;
            }
            double acc = 0.0;
            for (int s2 = 0; s2 < n - 1; ++s2) {
                row[size_t(s2)] /= total;
                acc += row[size_t(s2)];
                tb.set(s, a, s2, row[size_t(s2)]);
            }
            tb.set(s, a, n - 1, 1.0 - acc);
        }
    }

    std::vector<int> perm(size_t(n), 0);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[size_t(i)], perm[size_t(rng.uniform_int(i + 1))]);
    std::vector<double> observed(size_t(n), 0.0);
    for (int s = 0; s < n; ++s) observed[size_t(s)] = double(perm[size_t(s)] + 1) / double(n);

    std::vector<double> reward_set{0.0};
    for (int i = 1; i <= n; ++i) reward_set.push_back(double(i) / double(n));
    std::vector<double> true_reward = observed;
    std::vector<CorruptionPair> pairs;
    for (int rank = n - q; rank < n; ++rank)
        for (int s = 0; s < n; ++s)
            if (perm[size_t(s)] == rank) {
                true_reward[size_t(s)] = 0.0;
                pairs.push_back({s, 0.0, observed[size_t(s)]});
            }
    return Crmdp(n, na, std::move(reward_set), tb.take(), std::move(true_reward), std::move(pairs));
}

/// Best average reward over all deterministic stationary policies, by
/// exhaustive enumeration (the informed optimum on unichain fixtures).
inline double exhaustive_stationary_optimum(const Crmdp& m) {
    int n = m.n_states(), na = m.n_actions();
    std::vector<int> assignment(size_t(n), 0);
    double best = 0.0;
    for (;;) {
        StationaryDeterministic pol{assignment};
        auto d = stationary_distribution(m, pol);
        double gain = 0.0;
        for (int s = 0; s < n; ++s) gain += d[size_t(s)] * m.true_reward(s);
        best = std::max(best, gain);
        int pos = 0;
        while (pos < n && ++assignment[size_t(pos)] == na) assignment[size_t(pos++)] = 0;
        if (pos == n) break;
    }
    return best;
}

struct DecoupledFixture {
    DecoupledCrmdp dm;
    ObservationGraph graph;
    std::vector<double> planted_truth;
    std::vector<int> corrupt_observers;
};

/**
 * Randomized decoupled instance guaranteed to pass the learnability check:
 * every target either has a safe observer or more than 2q observers. Up to
 * q risky observers are corrupt and report wrong values on some edges.
 */
inline DecoupledFixture random_learnable_instance(Rng& rng) {
    int n = 2 + rng.uniform_int(9);  // 2..10 states
    int q = rng.uniform_int(3);      // 0..2

    std::vector<int> safe;
    for (int s = 0; s < n; ++s)
        if (rng.uniform01() < 0.3) safe.push_back(s);
    if (safe.empty() && n <= 2 * q) q = 0;

    std::vector<char> is_safe(size_t(n), 0);
    for (int s : safe) is_safe[size_t(s)] = 1;

    std::vector<int> risky;
    for (int s = 0; s < n; ++s)
        if (!is_safe[size_t(s)]) risky.push_back(s);
    std::vector<int> corrupt;
    for (int s : risky) {
        if (int(corrupt.size()) < q && rng.uniform01() < 0.5) corrupt.push_back(s);
    }

    const double grid[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> truth(size_t(n), 0.0);
    for (double& r : truth) r = grid[rng.uniform_int(9)];

    // Random edges, then force each target learnable.
    std::vector<std::vector<char>> edge(size_t(n), std::vector<char>(size_t(n), 0));
    for (int s = 0; s < n; ++s)
        for (int target = 0; target < n; ++target)
            if (rng.uniform01() < 0.4) edge[size_t(s)][size_t(target)] = 1;
    for (int target = 0; target < n; ++target) {
        int observers = 0;
        bool safe_observer = false;
        for (int s = 0; s < n; ++s) {
            if (!edge[size_t(s)][size_t(target)]) continue;
            ++observers;
            if (is_safe[size_t(s)]) safe_observer = true;
        }
        if (safe_observer || observers > 2 * q) continue;
        if (!safe.empty() && (rng.uniform01() < 0.5 || n <= 2 * q)) {
            edge[size_t(safe[size_t(rng.uniform_int(int(safe.size())))])][size_t(target)] = 1;
        } else {
            for (int s = 0; s < n && observers <= 2 * q; ++s) {
                if (!edge[size_t(s)][size_t(target)]) {
                    edge[size_t(s)][size_t(target)] = 1;
                    ++observers;
                }
            }
        }
    }

    DecoupledFixture fx;
    fx.planted_truth = truth;
    fx.corrupt_observers = corrupt;

    // Teleport dynamics keep the base communicating with a stay action.
    TransitionBuilder tb(n, n);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < n; ++a) tb.move(s, a, a);
    std::vector<double> rs(grid, grid + 9);
    rs.push_back(0.0);
    rs.push_back(1.0);
    std::sort(rs.begin(), rs.end());
    fx.dm.base = Crmdp(n, n, rs, tb.take(), truth, {});

    fx.dm.observed_family.assign(size_t(n), std::vector<std::optional<double>>(size_t(n)));
    std::vector<char> is_corrupt(size_t(n), 0);
    for (int s : corrupt) is_corrupt[size_t(s)] = 1;
    for (int s = 0; s < n; ++s) {
        bool lied = false;
        for (int target = 0; target < n; ++target) {
            if (!edge[size_t(s)][size_t(target)]) continue;
            double value = truth[size_t(target)];
            if (is_corrupt[size_t(s)] && (rng.uniform01() < 0.6 || !lied)) {
                double wrong = value;
                while (std::abs(wrong - value) <= kRewardTol) wrong = grid[rng.uniform_int(9)];
                value = wrong;
                lied = true;
            }
            fx.dm.observed_family[size_t(s)][size_t(target)] = value;
        }
    }
    fx.graph = observation_graph(fx.dm, safe, q);
    return fx;
}

/// Deterministic nine-state fixture with a full observation graph and two
/// corrupt observers; reconstruct-then-plan should reach vanishing regret.
inline DecoupledFixture rich_graph_fixture() {
    const int n = 9;
    TransitionBuilder tb(n, 3);
    for (int s = 0; s < n; ++s) {
        tb.move(s, 0, s);
        tb.move(s, 1, (s + 1) % n);
        tb.move(s, 2, (2 * s + 1) % n);
    }
    std::vector<double> truth{0.1, 0.5, 0.3, 0.9, 0.2, 0.6, 0.4, 0.8, 0.7};
    std::vector<double> rs{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

    DecoupledFixture fx;
    fx.planted_truth = truth;
    fx.corrupt_observers = {2, 6};
    fx.dm.base = Crmdp(n, 3, rs, tb.take(), truth, {});
    fx.dm.observed_family.assign(size_t(n), std::vector<std::optional<double>>(size_t(n)));
    for (int s = 0; s < n; ++s) {
        for (int target = 0; target < n; ++target) {
            double value = truth[size_t(target)];
            if (s == 2) value = 1.0;                       // flatters everything
            if (s == 6) value = std::max(0.0, value - 0.3); // deflates everything
            fx.dm.observed_family[size_t(s)][size_t(target)] = value;
        }
    }
    fx.graph = observation_graph(fx.dm, {}, 2);
    return fx;
}

/// Mean true reward per step of a Def-5.1 commitment: states are drawn
/// uniformly from the observed top quantile.
inline double quantiliser_oracle(const Crmdp& m, double delta) {
    double total = 0.0;
    int count = 0;
    for (int s = 0; s < m.n_states(); ++s) {
        if (m.observed_reward(s) >= delta - kRewardTol) {
            total += m.true_reward(s);
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("quantiliser_oracle: empty threshold set");
    return total / double(count);
}

} // namespace detail

// ---------------------------------------------------------------------------
// nfl: the mirror construction
// ---------------------------------------------------------------------------

inline CheckResult check_nfl() {
    CheckResult res{"nfl", "no-free-lunch mirror identity", true, {}};
    Rng rng(0xF1F0);
    const int n_envs = 50, n_seeds = 20;
    const int64_t t = 100;
    int bad_traj = 0, bad_sum = 0;
    double worst_sum_err = 0.0;
    for (int e = 0; e < n_envs; ++e) {
        Crmdp m = detail::random_symmetric_crmdp(rng);
        Crmdp mm = mirror(m);
        auto policy = detail::random_stochastic_policy(m, rng);
        for (int i = 0; i < n_seeds; ++i) {
            uint64_t seed = derive_seed(17, uint64_t(e * n_seeds + i));
            Trajectory a = simulate(m, StationaryStochastic{policy}, 0, t, seed);
            Trajectory b = simulate(mm, StationaryStochastic{policy}, 0, t, seed);
            bool same = true;
            double sum_a = 0.0, sum_b = 0.0;
            for (size_t k = 0; k < a.steps.size(); ++k) {
                same = same && a.steps[k].state == b.steps[k].state &&
                       a.steps[k].action == b.steps[k].action &&
                       a.steps[k].observed_reward == b.steps[k].observed_reward;
                if (k >= 1) {
                    sum_a += a.steps[k].true_reward;
                    sum_b += b.steps[k].true_reward;
                }
            }
            if (!same) ++bad_traj;
            double err = std::abs(sum_a + sum_b - double(t));
            worst_sum_err = std::max(worst_sum_err, err);
            if (err > 1e-9) ++bad_sum;
        }
    }
    res.require(bad_traj == 0, "observed trajectories identical on all " +
                                   std::to_string(n_envs * n_seeds) + " (env, seed) pairs");
    res.require(bad_sum == 0, "true-reward sums of both environments add to t; worst error " +
                                  detail::fmt(worst_sum_err, 12));
    return res;
}

// ---------------------------------------------------------------------------
// thm11: explore-then-commit agents fail on the adversarial class
// ---------------------------------------------------------------------------

inline CheckResult check_thm11() {
    CheckResult res{"thm11", "high regret of explore-then-commit agents", true, {}};
    AdversarialClassSpec spec;
    spec.n_risky = 8;
    auto cls = adversarial_class(spec);
    const Crmdp& worst = cls.members[size_t(cls.worst_member)];
    const int64_t t = 10'000;
    const double threshold = 1.0 - 1.0 / 8.0 - 0.05;

    for (auto mode : {EtcMode::CR, EtcMode::RL}) {
        BeliefState belief(cls.members, reference_heavy_prior(cls.members.size(), 0.7));
        EtcAgent agent(std::move(belief), mode);
        auto rep = regret(worst, HistoryBased{&agent}, 0, t, 3, 42);
        bool ok = rep.time_averaged >= threshold;
        std::string label = mode == EtcMode::CR ? "etc-cr" : "etc-rl";
        res.require(ok, label + " time-averaged regret " + detail::fmt(rep.time_averaged) +
                            " >= " + detail::fmt(threshold) + " (committed to state " +
                            std::to_string(agent.committed_state()) + ")");
    }

    for (size_t i = 0; i < cls.members.size(); ++i) {
        auto rep = validate_assumptions(cls.members[i], {}, 2);
        if (!(rep.assumption1() && rep.assumption2())) {
            res.require(false, "member " + std::to_string(i) + " violates the assumptions");
            return res;
        }
    }
    res.require(true, "all " + std::to_string(cls.members.size()) +
                          " class members satisfy both assumptions");
    bool shared = true;
    for (const auto& m : cls.members)
        shared = shared && m.observed_rewards() == cls.members[0].observed_rewards();
    res.require(shared, "all members share one observed reward function exactly");
    return res;
}

// ---------------------------------------------------------------------------
// thm16: decoupled reconstruction and exploration
// ---------------------------------------------------------------------------

inline CheckResult check_thm16() {
    CheckResult res{"thm16", "decoupled reward reconstruction", true, {}};
    Rng rng(0xDEC0);

    // Reconstruction exactness on randomized learnable instances.
    const int n_instances = 500;
    int wrong = 0;
    for (int i = 0; i < n_instances; ++i) {
        auto fx = detail::random_learnable_instance(rng);
        auto learn = learnability_check(fx.graph);
        if (!learn.all) {
            ++wrong;
            continue;
        }
        std::vector<RewardObservation> obs;
        for (int s = 0; s < fx.dm.base.n_states(); ++s)
            for (int target = 0; target < fx.dm.base.n_states(); ++target)
                if (auto r = fx.dm.report(s, target)) obs.push_back({s, target, *r});
        auto rec = reconstruct(obs, fx.graph);
        if (!rec.complete) {
            ++wrong;
            continue;
        }
        for (int s = 0; s < fx.dm.base.n_states(); ++s)
            if (std::abs(rec.targets[size_t(s)].value - fx.planted_truth[size_t(s)]) > kRewardTol) {
                ++wrong;
                break;
            }
    }
    res.require(wrong == 0, "reconstruction exact on all " + std::to_string(n_instances) +
                                " randomized learnable instances");

    // Sharpness: exactly 2q observers, q of them corrupt and agreeing,
    // must stay unresolved rather than guess.
    int sharp_bad = 0;
    for (int q = 1; q <= 3; ++q) {
        ObservationGraph g;
        g.n_states = 2 * q + 1;
        g.q = q;
        g.observers_of.assign(size_t(g.n_states), {});
        std::vector<RewardObservation> obs;
        for (int s = 0; s < 2 * q; ++s) {
            g.observers_of[0].push_back(s);
            obs.push_back({s, 0, s < q ? 0.9 : 0.1});  // q liars agree on 0.9; truth is 0.1
        }
        auto rec = reconstruct(obs, g);
        if (rec.targets[0].known) ++sharp_bad;
    }
    res.require(sharp_bad == 0, "2q-observer instances stay unresolvable for q in {1,2,3}");

    // Exploration bound on small-diameter fixtures.
    {
        TransitionBuilder tb(2, 2);
        tb.move(0, 0, 0).move(0, 1, 1).move(1, 0, 0).move(1, 1, 1);
        Crmdp base(2, 2, {0.2, 0.8}, tb.take(), {0.2, 0.8}, {});
        DecoupledCrmdp dm{base, {{0.2, 0.8}, {0.2, 0.8}}};
        double bound = exploration_bound(2, 2, diameter(base));
        double mean_steps = 0.0;
        const int seeds = 100;
        for (int i = 0; i < seeds; ++i) mean_steps += double(explore(dm, derive_seed(7, uint64_t(i))).steps);
        mean_steps /= seeds;
        res.require(mean_steps <= bound, "teleport fixture: mean exploration " +
                                             detail::fmt(mean_steps, 1) + " <= bound " +
                                             detail::fmt(bound, 1));
    }
    {
        // Three-state chain with diameter 2.
        TransitionBuilder tb(3, 2);
        tb.move(0, 0, 0).move(0, 1, 1);
        tb.move(1, 0, 0).move(1, 1, 2);
        tb.move(2, 0, 1).move(2, 1, 2);
        Crmdp base(3, 2, {0.1, 0.5, 0.9}, tb.take(), {0.1, 0.5, 0.9}, {});
        DecoupledCrmdp dm{base, {}};
        dm.observed_family.assign(3, std::vector<std::optional<double>>(3));
        for (int s = 0; s < 3; ++s)
            for (int target = 0; target < 3; ++target)
                dm.observed_family[size_t(s)][size_t(target)] = base.true_reward(target);
        double d = diameter(base);
        double bound = exploration_bound(3, 2, d);
        double mean_steps = 0.0;
        const int seeds = 100;
        for (int i = 0; i < seeds; ++i) mean_steps += double(explore(dm, derive_seed(9, uint64_t(i))).steps);
        mean_steps /= seeds;
        res.require(d == 2.0, "chain fixture diameter is 2");
        res.require(mean_steps <= bound, "chain fixture: mean exploration " +
                                             detail::fmt(mean_steps, 1) + " <= bound " +
                                             detail::fmt(bound, 1));
    }

    // Reconstruct-then-plan on the rich fixture: vanishing regret.
    {
        auto fx = detail::rich_graph_fixture();
        ReconstructThenPlanAgent agent(fx.dm, fx.graph);
        const int64_t t = 100'000;
        const int seeds = 5;
        double informed = 0.9;  // stay on the best true-reward state
        double mean_regret = 0.0;
        bool reconstructed_ok = true;
        for (int i = 0; i < seeds; ++i) {
            double total = simulate_decoupled(fx.dm, agent, 0, t, derive_seed(11, uint64_t(i)));
            mean_regret += informed - total / double(t + 1);
            for (int s = 0; s < fx.dm.base.n_states(); ++s)
                reconstructed_ok =
                    reconstructed_ok && std::abs(agent.reconstructed_rewards()[size_t(s)] -
                                                 fx.planted_truth[size_t(s)]) <= kRewardTol;
        }
        mean_regret /= seeds;
        res.require(reconstructed_ok, "rich fixture: planted rewards reconstructed exactly");
        res.require(mean_regret < 0.05, "rich fixture: time-averaged regret " +
                                            detail::fmt(mean_regret) + " < 0.05 at t=1e5");
    }
    return res;
}

// ---------------------------------------------------------------------------
// thm19: the simple quantiliser bound
// ---------------------------------------------------------------------------

inline CheckResult check_thm19() {
    CheckResult res{"thm19", "stay-in-place quantiliser regret bound", true, {}};
    Rng rng(0x0919);
    const int n_envs = 100;
    const int seeds_per_env = 100;
    const int64_t t = 10'000;
    int violations = 0;
    double worst_gap = -1.0;
    for (int e = 0; e < n_envs; ++e) {
        int q = e % 3 == 0 ? 1 : (e % 3 == 1 ? 2 : 5);
        Crmdp m = detail::planted_easy_crmdp(25, q, rng);
        auto [delta_star, bound] = quantile_bound(q, 25);
        SimpleQuantiliserAgent agent(dynamics_of(m), delta_star);
        CompiledEnv env(m);
        // The stay action makes the best true state attainable forever, so
        // the informed time-averaged value is its reward.
        double informed = *std::max_element(m.true_rewards().begin(), m.true_rewards().end());
        double mean_regret = 0.0;
        for (int i = 0; i < seeds_per_env; ++i) {
            double total = 0.0;
            simulate_visit(env, HistoryBased{&agent}, 0, t, derive_seed(uint64_t(1000 + e), uint64_t(i)),
                           [&](int64_t, int, int, double ir, double) { total += ir; });
            mean_regret += informed - total / double(t + 1);
        }
        mean_regret /= seeds_per_env;
        worst_gap = std::max(worst_gap, mean_regret - bound);
        if (mean_regret > bound + 0.05) ++violations;
    }
    res.require(violations == 0,
                std::to_string(n_envs) + " planted 25-state environments (q in {1,2,5}): regret <= "
                                         "bound + 0.05; worst regret-bound gap " +
                    detail::fmt(worst_gap));

    // Spot family with a 0.1% corruption rate: 1000 states, q = 1.
    {
        Crmdp m = detail::planted_easy_crmdp(1000, 1, rng);
        auto [delta_star, bound] = quantile_bound(1, 1000);
        SimpleQuantiliserAgent agent(dynamics_of(m), delta_star);
        CompiledEnv env(m);
        double informed = *std::max_element(m.true_rewards().begin(), m.true_rewards().end());
        const int seeds = 30;
        const int64_t horizon = 300'000;
        double mean_regret = 0.0;
        for (int i = 0; i < seeds; ++i) {
            double total = 0.0;
            simulate_visit(env, HistoryBased{&agent}, 0, horizon, derive_seed(5150, uint64_t(i)),
                           [&](int64_t, int, int, double ir, double) { total += ir; });
            mean_regret += informed - total / double(horizon + 1);
        }
        mean_regret /= seeds;
        res.require(mean_regret <= 0.11, "q/|S| = 0.001 family: regret " + detail::fmt(mean_regret) +
                                             " <= 0.11 (bound " + detail::fmt(bound) + ")");
    }
    return res;
}

// ---------------------------------------------------------------------------
// thm24: the general quantiliser bound
// ---------------------------------------------------------------------------

inline CheckResult check_thm24() {
    CheckResult res{"thm24", "general quantiliser regret bound", true, {}};
    Rng rng(0x0924);
    const int wanted = 20;
    const int seeds_per_env = 20;
    const int64_t t = 3'000;
    int tested = 0, violations = 0, failed_delta = 0;
    double worst_gap = -1.0;
    int attempts = 0;
    while (tested < wanted && attempts < wanted * 10) {
        ++attempts;
        int q = attempts % 3;
        Crmdp m = detail::random_unichain_crmdp(rng, 6, 3, q);
        double informed = detail::exhaustive_stationary_optimum(m);
        const double deltas[] = {0.5, 0.4, 0.3, 0.2, 0.1};
        bool built = false;
        for (double delta : deltas) {
            try {
                GeneralQuantiliserAgent agent(observed_mdp(m), delta);
                built = true;
                double bound = general_bound(delta, q, int(agent.support_union().size()));
                CompiledEnv env(m);
                double mean_regret = 0.0;
                for (int i = 0; i < seeds_per_env; ++i) {
                    double total = 0.0;
                    simulate_visit(env, HistoryBased{&agent}, 0, t,
                                   derive_seed(uint64_t(2000 + attempts), uint64_t(i)),
                                   [&](int64_t, int, int, double ir, double) { total += ir; });
                    mean_regret += informed - total / double(t + 1);
                }
                mean_regret /= seeds_per_env;
                worst_gap = std::max(worst_gap, mean_regret - std::min(bound, 1.0));
                if (mean_regret > bound + 0.05) ++violations;
                ++tested;
            } catch (const DeltaTooHigh&) {
                continue;
            }
            break;
        }
        if (!built) ++failed_delta;
    }
    res.require(tested >= wanted, std::to_string(tested) + " unichain fixtures evaluated (" +
                                      std::to_string(failed_delta) + " had no feasible delta)");
    res.require(violations == 0, "regret <= 1 - delta(1 - q/|union|) + 0.05 on every fixture; "
                                 "worst regret-bound gap " + detail::fmt(worst_gap));
    return res;
}

// ---------------------------------------------------------------------------
// ce51: the two-state counterexample ordering
// ---------------------------------------------------------------------------

inline CheckResult check_ce51() {
    CheckResult res{"ce51", "counterexample: quantilisation beats undirected randomization", true, {}};
    const int n_actions = 10;
    const double eps = 0.05;
    Crmdp m = softmax_counterexample(n_actions, eps);
    const int64_t t = 100'000;
    const int runs = 30;

    SimpleQuantiliserAgent quant(dynamics_of(m), 0.5);
    auto quant_rep = regret(m, HistoryBased{&quant}, 0, t, runs, 6);
    double target = (1.0 - eps) / 2.0;
    res.require(std::abs(quant_rep.time_averaged - target) <= 0.05,
                "quantiliser(0.5) regret " + detail::fmt(quant_rep.time_averaged) + " within 0.05 of " +
                    detail::fmt(target));

    QLearningAgent greedy(2, n_actions, ExplorationRule::EpsilonGreedy);
    auto greedy_rep = regret(m, HistoryBased{&greedy}, 0, t, runs, 102);
    res.require(greedy_rep.time_averaged >= 1.0 - eps - 0.1,
                "epsilon-greedy regret " + detail::fmt(greedy_rep.time_averaged) + " >= " +
                    detail::fmt(1.0 - eps - 0.1));

    QLearningAgent soft(2, n_actions, ExplorationRule::Softmax);
    auto soft_rep = regret(m, HistoryBased{&soft}, 0, t, runs, 103);
    res.require(soft_rep.time_averaged >= 1.0 - eps - 0.1,
                "softmax regret " + detail::fmt(soft_rep.time_averaged) + " >= " +
                    detail::fmt(1.0 - eps - 0.1));

    // Ordering with pooled-standard-error separation.
    auto sep = [&](const RegretReport& low, const RegretReport& high) {
        double pooled = std::sqrt(low.std_error * low.std_error + high.std_error * high.std_error) /
                        double(low.horizon);
        return (high.time_averaged - low.time_averaged) / std::max(pooled, 1e-12);
    };
    res.require(sep(quant_rep, soft_rep) >= 3.0, "quantiliser beats softmax by >= 3 pooled SE");
    res.require(sep(quant_rep, greedy_rep) >= 3.0, "quantiliser beats epsilon-greedy by >= 3 pooled SE");
    return res;
}

// ---------------------------------------------------------------------------
// ex23: the misperceived-supervisor example
// ---------------------------------------------------------------------------

inline CheckResult check_ex23() {
    CheckResult res{"ex23", "supervisor-misperception indistinguishability", true, {}};
    CirlExample ex = cirl_example();

    int unequal = 0;
    const int n_traj = 1000;
    for (int i = 0; i < n_traj; ++i) {
        const CirlHypothesis& truth = i % 2 == 0 ? ex.h1 : ex.h2;
        int len = 1 + int(derive_seed(33, uint64_t(i)) % 20);
        auto steps = cirl_sample_trajectory(ex, truth, i % 3 == 0 ? 0 : 1, len,
                                            derive_seed(44, uint64_t(i)));
        auto [a, b] = cirl_indistinguishability(ex, steps);
        if (a != b) ++unequal;
    }
    res.require(unequal == 0, "likelihoods exactly equal on " + std::to_string(n_traj) +
                                  " random trajectories (length <= 20)");

    CirlCrAgent agent(ex, 0.6);
    res.require(agent.act(0) == CirlExample::kGo2 && agent.act(1) == CirlExample::kGo2,
                "agent with prior P(honest)=0.6 commits to the corrupt-flattered state");
    double avg_true = cirl_run_cr_agent(ex, ex.h1, 0.6, 0, 10'000, 7);
    res.require(std::abs(avg_true - 0.0) <= 0.02,
                "under the corruption hypothesis its average true reward " + detail::fmt(avg_true) +
                    " equals the environment minimum 0 within 0.02");
    return res;
}

inline CheckResult run_check(const std::string& id) {
    if (id == "nfl") return check_nfl();
    if (id == "thm11") return check_thm11();
    if (id == "thm16") return check_thm16();
    if (id == "thm19") return check_thm19();
    if (id == "thm24") return check_thm24();
    if (id == "ce51") return check_ce51();
    if (id == "ex23") return check_ex23();
    throw std::invalid_argument("unknown check id '" + id +
                                "' (expected nfl|thm11|thm16|thm19|thm24|ce51|ex23)");
}

inline const std::vector<std::string>& check_ids() {
    static const std::vector<std::string> ids{"nfl", "thm11", "thm16", "thm19", "thm24", "ce51", "ex23"};
    return ids;
}

} // namespace crmdp
