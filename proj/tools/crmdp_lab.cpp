// crmdp-lab: command-line front end for the corrupt-reward MDP laboratory.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "crmdp/checks.hpp"
#include "crmdp/cirl.hpp"
#include "crmdp/decoupled.hpp"
#include "crmdp/harness.hpp"
#include "crmdp/serialize.hpp"

namespace {

void write_text(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << text;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

int print_check(const crmdp::CheckResult& res) {
    std::printf("%s %s: %s\n", res.passed ? "PASS" : "FAIL", res.id.c_str(), res.name.c_str());
    for (const auto& line : res.details) std::printf("%s\n", line.c_str());
    return res.passed ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"crmdp-lab: a desk-scale laboratory for reinforcement learning with corrupted "
                 "reward channels"};
    app.require_subcommand(1);

    // --- run ---------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "run one experiment from a JSON config");
    std::string config_path, out_path, curves_path;
    int threads = 0;
    run_cmd->add_option("--config", config_path, "experiment config file")->required();
    run_cmd->add_option("--out", out_path, "summary CSV path (default stdout)");
    run_cmd->add_option("--curves", curves_path, "reward-curve CSV path");
    run_cmd->add_option("--threads", threads, "worker threads (default CRMDP_LAB_THREADS)");

    // --- table1 ------------------------------------------------------------
    auto* table_cmd = app.add_subcommand("table1", "run the full experiment grid");
    std::string scale = "small";
    std::string table_out;
    uint64_t table_seed = 20170705;
    int table_threads = 0;
    table_cmd->add_option("--scale", scale, "small (10 runs x 2e5) or full (100 runs x 1e6)")
        ->check(CLI::IsMember({"small", "full"}));
    table_cmd->add_option("--out", table_out, "CSV path (default stdout)");
    table_cmd->add_option("--seed", table_seed, "base seed");
    table_cmd->add_option("--threads", table_threads, "worker threads");

    // --- check -------------------------------------------------------------
    auto* check_cmd = app.add_subcommand("check", "run a theorem property suite");
    std::string check_id;
    check_cmd->add_option("id", check_id, "one of nfl, thm11, thm16, thm19, thm24, ce51, ex23")
        ->required();

    // --- env ---------------------------------------------------------------
    auto* env_cmd = app.add_subcommand("env", "serialize a named environment (or reprint a file)");
    std::string env_name, env_load, env_out;
    env_cmd->add_option("--name", env_name, "gridworld-1g|gridworld-2g|gridworld-4g|thm11|"
                                            "softmax-ce|loop4|cirl-ex23");
    env_cmd->add_option("--load", env_load, "round-trip an environment JSON file");
    env_cmd->add_option("--out", env_out, "output path (default stdout)");

    // --- check-learnability --------------------------------------------------
    auto* learn_cmd = app.add_subcommand("check-learnability",
                                         "evaluate the per-target learnability condition");
    std::string graph_path;
    learn_cmd->add_option("--graph", graph_path, "observation-graph JSON")->required();

    // --- reconstruct ---------------------------------------------------------
    auto* rec_cmd = app.add_subcommand("reconstruct", "reconstruct rewards from observations");
    std::string rec_graph, rec_obs;
    rec_cmd->add_option("--graph", rec_graph, "observation-graph JSON")->required();
    rec_cmd->add_option("--observations", rec_obs, "JSON array of [observer, target, value]")
        ->required();

    // --- explore-demo ----------------------------------------------------------
    auto* explore_cmd = app.add_subcommand("explore-demo", "random-walk exploration demo");
    std::string fixture = "rich";
    uint64_t explore_seed = 1;
    explore_cmd->add_option("--fixture", fixture, "rich|teleport2")
        ->check(CLI::IsMember({"rich", "teleport2"}));
    explore_cmd->add_option("--seed", explore_seed, "seed");

    // --- cirl-demo ---------------------------------------------------------
    auto* cirl_cmd = app.add_subcommand("cirl-demo", "supervisor-misperception demo");
    double prior_h2 = 0.6;
    int64_t cirl_cycles = 10'000;
    uint64_t cirl_seed = 7;
    cirl_cmd->add_option("--prior-h2", prior_h2, "prior weight on the honest hypothesis");
    cirl_cmd->add_option("--cycles", cirl_cycles, "interaction steps");
    cirl_cmd->add_option("--seed", cirl_seed, "seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            auto cfg = crmdp::config_from_json(read_json(config_path));
            auto result = crmdp::run_experiment(cfg, threads);
            write_text(crmdp::summary_csv({result}), out_path);
            if (!curves_path.empty()) crmdp::emit_curves(result, curves_path);
            return 0;
        }
        if (*table_cmd) {
            auto results = crmdp::run_table1(
                scale == "small" ? crmdp::TableScale::Small : crmdp::TableScale::Full, table_seed,
                table_threads);
            write_text(crmdp::summary_csv(results), table_out);
            return 0;
        }
        if (*check_cmd) return print_check(crmdp::run_check(check_id));
        if (*env_cmd) {
            if (env_name.empty() == env_load.empty())
                throw std::runtime_error("env: pass exactly one of --name / --load");
            nlohmann::json doc;
            if (!env_load.empty()) {
                doc = crmdp::to_json(crmdp::crmdp_from_json(read_json(env_load)));
            } else if (env_name == "cirl-ex23") {
                auto ex = crmdp::cirl_example();
                doc = {{"version", 1},
                       {"kind", "cirl-ex23"},
                       {"hypotheses",
                        {{{"name", "corruption"},
                          {"p", ex.h1.p},
                          {"best_state", ex.h1.best_state},
                          {"s2_corrupt", ex.h1.s2_corrupt},
                          {"crmdp", crmdp::to_json(crmdp::cirl_induced_crmdp(ex, ex.h1))}},
                         {{"name", "honest"},
                          {"p", ex.h2.p},
                          {"best_state", ex.h2.best_state},
                          {"s2_corrupt", ex.h2.s2_corrupt},
                          {"crmdp", crmdp::to_json(crmdp::cirl_induced_crmdp(ex, ex.h2))}}}}};
            } else {
                auto env = crmdp::make_env({env_name, {}});
                doc = crmdp::to_json(env.model);
            }
            write_text(doc.dump(2) + "\n", env_out);
            return 0;
        }
        if (*learn_cmd) {
            auto g = crmdp::observation_graph_from_json(read_json(graph_path));
            auto rep = crmdp::learnability_check(g);
            for (int s = 0; s < g.n_states; ++s)
                std::printf("target %d: %s (%zu observers%s)\n", s,
                            rep.per_target[size_t(s)] ? "learnable" : "NOT learnable",
                            g.observers_of[size_t(s)].size(),
                            rep.per_target[size_t(s)] ? "" : ", no safe observer");
            std::printf("overall: %s\n", rep.all ? "learnable" : "not learnable");
            return rep.all ? 0 : 1;
        }
        if (*rec_cmd) {
            auto g = crmdp::observation_graph_from_json(read_json(rec_graph));
            std::vector<crmdp::RewardObservation> obs;
            for (const auto& e : read_json(rec_obs))
                obs.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
            auto rec = crmdp::reconstruct(obs, g);
            for (int s = 0; s < g.n_states; ++s) {
                const auto& tr = rec.targets[size_t(s)];
                if (tr.known)
                    std::printf("target %d: %.6g (%s)\n", s, tr.value,
                                tr.method == crmdp::ReconstructionMethod::SafeState ? "safe state"
                                                                                    : "majority vote");
                else
                    std::printf("target %d: unresolvable (%s)\n", s, tr.reason.c_str());
            }
            if (!rec.corrupt_observer_candidates.empty()) {
                std::printf("corrupt observer candidates:");
                for (int s : rec.corrupt_observer_candidates) std::printf(" %d", s);
                std::printf("\n");
            }
            return rec.complete ? 0 : 1;
        }
        if (*explore_cmd) {
            crmdp::detail::DecoupledFixture fx;
            if (fixture == "rich") {
                fx = crmdp::detail::rich_graph_fixture();
            } else {
                crmdp::TransitionBuilder tb(2, 2);
                tb.move(0, 0, 0).move(0, 1, 1).move(1, 0, 0).move(1, 1, 1);
                fx.dm.base = crmdp::Crmdp(2, 2, {0.2, 0.8}, tb.take(), {0.2, 0.8}, {});
                fx.dm.observed_family = {{0.2, 0.8}, {0.2, 0.8}};
                fx.graph = crmdp::observation_graph(fx.dm, {}, 1);
            }
            double d = crmdp::diameter(fx.dm.base);
            double bound = crmdp::exploration_bound(fx.dm.base.n_states(),
                                                    fx.dm.base.n_actions(), d);
            auto log = crmdp::explore(fx.dm, explore_seed);
            std::printf("fixture %s: diameter %.3f, %lld exploration steps, %zu observations, "
                        "expected-time bound %.0f\n",
                        fixture.c_str(), d, static_cast<long long>(log.steps),
                        log.observations.size(), bound);
            return 0;
        }
        if (*cirl_cmd) {
            auto ex = crmdp::cirl_example();
            auto steps = crmdp::cirl_sample_trajectory(ex, ex.h1, 1, 12, cirl_seed);
            auto [la, lb] = crmdp::cirl_indistinguishability(ex, steps);
            std::printf("sample trajectory likelihoods: corruption %.6g, honest %.6g (equal: %s)\n",
                        la, lb, la == lb ? "yes" : "no");
            crmdp::CirlCrAgent agent(ex, prior_h2);
            std::printf("agent with prior P(honest)=%.2f plays action %d (commits to s%d)\n",
                        prior_h2, agent.act(1), agent.act(1) == crmdp::CirlExample::kGo1 ? 1 : 2);
            double avg = crmdp::cirl_run_cr_agent(ex, ex.h1, prior_h2, 0, cirl_cycles, cirl_seed);
            std::printf("under the corruption hypothesis, average true reward over %lld cycles: "
                        "%.6f\n",
                        static_cast<long long>(cirl_cycles), avg);
            return 0;
        }
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 2;
    }
    return 0;
}
