#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "agent.hpp"
#include "belief.hpp"
#include "crmdp.hpp"
#include "envs.hpp"
#include "qlearning.hpp"
#include "quantiliser.hpp"
#include "rng.hpp"
#include "sim.hpp"

namespace crmdp {

// ---------------------------------------------------------------------------
// Named environment / agent registries
// ---------------------------------------------------------------------------

struct EnvSpec {
    std::string name;
    nlohmann::json params = nlohmann::json::object();
};

struct AgentSpec {
    std::string name;
    nlohmann::json params = nlohmann::json::object();
};

struct EnvInstance {
    Crmdp model;
    int start_state = 0;
    std::string label;
};

namespace detail {

template <typename T>
T param(const nlohmann::json& j, const std::string& key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

} // namespace detail

inline const std::vector<std::string>& env_names() {
    static const std::vector<std::string> names{"gridworld-1g", "gridworld-2g", "gridworld-4g",
                                                "thm11", "softmax-ce", "loop4"};
    return names;
}

inline EnvInstance make_env(const EnvSpec& spec) {
    using detail::param;
    if (spec.name == "gridworld-1g" || spec.name == "gridworld-2g" || spec.name == "gridworld-4g") {
        int goals = spec.name[10] - '0';
        GridworldSpec gs = gridworld_layout(goals);
        if (spec.params.contains("start"))
            gs.start = {spec.params.at("start").at(0).get<int>(),
                        spec.params.at("start").at(1).get<int>()};
        auto gw = gridworld(gs);
        return {std::move(gw.model), gw.start_state, spec.name};
    }
    if (spec.name == "thm11") {
        AdversarialClassSpec as;
        as.n_risky = param(spec.params, "n_risky", 8);
        as.safe_states = param(spec.params, "safe_states", 0);
        auto cls = adversarial_class(as);
        int member = param(spec.params, "member", cls.worst_member);
        return {cls.members.at(size_t(member)), 0, spec.name};
    }
    if (spec.name == "softmax-ce") {
        int n = param(spec.params, "n_actions", 10);
        double eps = param(spec.params, "eps", 0.05);
        return {softmax_counterexample(n, eps), 0, spec.name};
    }
    if (spec.name == "loop4") return {loop_crmdp(), 0, spec.name};
    throw std::invalid_argument("make_env: unknown environment '" + spec.name + "'");
}

/// Prior over an adversarial class putting `reference_weight` on the
/// identity-corruption member and splitting the rest uniformly.
inline std::vector<double> reference_heavy_prior(size_t n_members, double reference_weight) {
    if (n_members == 1) return {1.0};
    std::vector<double> prior(n_members, (1.0 - reference_weight) / double(n_members - 1));
    prior[0] = reference_weight;
    return prior;
}

inline AgentPtr make_agent(const AgentSpec& spec, const EnvSpec& env_spec, const Crmdp& env) {
    using detail::param;
    if (spec.name == "qlearn" || spec.name == "softmax") {
        auto rule = spec.name == "qlearn" ? ExplorationRule::EpsilonGreedy : ExplorationRule::Softmax;
        return std::make_unique<QLearningAgent>(
            env.n_states(), env.n_actions(), rule, param(spec.params, "alpha", 0.1),
            param(spec.params, "gamma", 0.9), param(spec.params, "epsilon", 0.1),
            param(spec.params, "beta", 2.0));
    }
    if (spec.name == "quantile")
        return std::make_unique<SimpleQuantiliserAgent>(dynamics_of(env),
                                                        param(spec.params, "delta", 0.5));
    if (spec.name == "general-quantile")
        return std::make_unique<GeneralQuantiliserAgent>(
            observed_mdp(env), param(spec.params, "delta", 0.5),
            param(spec.params, "cap", int64_t(1'000'000)));
    if (spec.name == "etc-cr" || spec.name == "etc-rl") {
        if (env_spec.name != "thm11")
            throw std::invalid_argument("make_agent: " + spec.name +
                                        " needs the thm11 environment (a CRMDP class)");
        AdversarialClassSpec as;
        as.n_risky = param(env_spec.params, "n_risky", 8);
        as.safe_states = param(env_spec.params, "safe_states", 0);
        auto cls = adversarial_class(as);
        std::vector<double> prior;
        if (spec.params.contains("prior"))
            prior = spec.params.at("prior").get<std::vector<double>>();
        else
            prior = reference_heavy_prior(cls.members.size(),
                                          param(spec.params, "reference_weight", 0.7));
        BeliefState belief(std::move(cls.members), std::move(prior));
        return std::make_unique<EtcAgent>(std::move(belief),
                                          spec.name == "etc-cr" ? EtcMode::CR : EtcMode::RL);
    }
    if (spec.name == "fixed-action")
        return std::make_unique<FixedActionAgent>(param(spec.params, "action", 0));
    throw std::invalid_argument("make_agent: unknown agent '" + spec.name + "'");
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/**
 * A declarative experiment: one environment, one agent, `runs` seeded
 * repetitions of `cycles` interaction steps each. Run i always uses
 * derive_seed(base_seed, i), so results are independent of scheduling.
 */
struct ExperimentConfig {
    EnvSpec environment;
    AgentSpec agent;
    int64_t cycles = 1'000'000;
    int runs = 100;
    uint64_t base_seed = 1;
    int64_t report_every = 0;  // 0 disables reward curves
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.environment.name = j.at("environment").at("name").get<std::string>();
    cfg.environment.params = j.at("environment");
    cfg.environment.params.erase("name");
    cfg.agent.name = j.at("agent").at("name").get<std::string>();
    cfg.agent.params = j.at("agent");
    cfg.agent.params.erase("name");
    cfg.cycles = detail::param(j, "cycles", int64_t(1'000'000));
    cfg.runs = detail::param(j, "runs", 100);
    cfg.base_seed = detail::param(j, "seed", uint64_t(1));
    cfg.report_every = detail::param(j, "report_every", int64_t(0));
    if (cfg.cycles < 1 || cfg.runs < 1)
        throw std::invalid_argument("config: cycles and runs must be at least 1");
    return cfg;
}

struct CurvePoint {
    int64_t time = 0;  // cycles elapsed at the sample
    double mean_observed = 0, std_observed = 0;
    double mean_true = 0, std_true = 0;
};

struct RunResult {
    std::string env, agent, params;
    int runs = 0;
    int64_t cycles = 0;
    uint64_t base_seed = 0;
    std::vector<double> per_run_observed;  // average observed reward per run
    std::vector<double> per_run_true;      // average true reward per run
    double mean_observed = 0, std_observed = 0;
    double mean_true = 0, std_true = 0;
    std::vector<CurvePoint> curve;
};

namespace detail {

inline std::pair<double, double> mean_and_population_std(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= double(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= double(xs.size());
    return {mean, std::sqrt(var)};
}

inline std::string params_label(const nlohmann::json& params) {
    std::map<std::string, nlohmann::json> sorted;
    for (auto it = params.begin(); it != params.end(); ++it) sorted[it.key()] = it.value();
    std::string out;
    for (const auto& [k, v] : sorted) {
        if (!out.empty()) out += ";";
        out += k + "=" + v.dump();
    }
    return out;
}

inline int thread_count_from_env() {
    if (const char* raw = std::getenv("CRMDP_LAB_THREADS")) {
        int n = std::atoi(raw);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

} // namespace detail

/**
 * Runs the experiment. Per-run work is independent and scheduled across
 * `threads` workers (0 = CRMDP_LAB_THREADS or hardware concurrency);
 * aggregation happens in run order afterwards, so output is bit-identical
 * for every thread count.
 */
inline RunResult run_experiment(const ExperimentConfig& cfg, int threads = 0) {
    EnvInstance env = make_env(cfg.environment);
    CompiledEnv compiled(env.model);

    RunResult result;
    result.env = env.label;
    result.agent = cfg.agent.name;
    result.params = detail::params_label(cfg.agent.params);
    result.runs = cfg.runs;
    result.cycles = cfg.cycles;
    result.base_seed = cfg.base_seed;
    result.per_run_observed.resize(size_t(cfg.runs));
    result.per_run_true.resize(size_t(cfg.runs));

    int64_t n_samples = cfg.report_every > 0 ? cfg.cycles / cfg.report_every : 0;
    std::vector<std::vector<std::pair<double, double>>> curves(
        size_t(cfg.runs), std::vector<std::pair<double, double>>(size_t(n_samples)));

    auto one_run = [&](int i) {
        AgentPtr agent = make_agent(cfg.agent, cfg.environment, env.model);
        PolicyKind policy = HistoryBased{agent.get()};
        double sum_true = 0.0, sum_observed = 0.0;
        auto& curve = curves[size_t(i)];
        simulate_visit(compiled, policy, env.start_state, cfg.cycles - 1,
                       derive_seed(cfg.base_seed, uint64_t(i)),
                       [&](int64_t k, int, int, double ir, double orr) {
                           sum_true += ir;
                           sum_observed += orr;
                           if (cfg.report_every > 0 && (k + 1) % cfg.report_every == 0) {
                               int64_t idx = (k + 1) / cfg.report_every - 1;
                               if (idx < n_samples)
                                   curve[size_t(idx)] = {sum_observed / double(k + 1),
                                                         sum_true / double(k + 1)};
                           }
                       });
        result.per_run_observed[size_t(i)] = sum_observed / double(cfg.cycles);
        result.per_run_true[size_t(i)] = sum_true / double(cfg.cycles);
    };

    int n_threads = threads > 0 ? threads : detail::thread_count_from_env();
    n_threads = std::min<int>(n_threads, cfg.runs);
    if (n_threads <= 1) {
        for (int i = 0; i < cfg.runs; ++i) one_run(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(size_t(n_threads));
        for (int w = 0; w < n_threads; ++w)
            pool.emplace_back([&, w] {
                for (int i = w; i < cfg.runs; i += n_threads) one_run(i);
            });
        for (auto& th : pool) th.join();
    }

    std::tie(result.mean_observed, result.std_observed) =
        detail::mean_and_population_std(result.per_run_observed);
    std::tie(result.mean_true, result.std_true) =
        detail::mean_and_population_std(result.per_run_true);

    for (int64_t idx = 0; idx < n_samples; ++idx) {
        std::vector<double> obs(size_t(cfg.runs), 0.0), tru(size_t(cfg.runs), 0.0);
        for (int i = 0; i < cfg.runs; ++i) {
            obs[size_t(i)] = curves[size_t(i)][size_t(idx)].first;
            tru[size_t(i)] = curves[size_t(i)][size_t(idx)].second;
        }
        CurvePoint pt;
        pt.time = (idx + 1) * cfg.report_every;
        std::tie(pt.mean_observed, pt.std_observed) = detail::mean_and_population_std(obs);
        std::tie(pt.mean_true, pt.std_true) = detail::mean_and_population_std(tru);
        result.curve.push_back(pt);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Summaries and CSV emission
// ---------------------------------------------------------------------------

struct SummaryRow {
    std::string env, agent, params;
    int runs = 0;
    int64_t cycles = 0;
    uint64_t base_seed = 0;
    double mean_observed = 0, std_observed = 0;
    double mean_true = 0, std_true = 0;
};

/// Rows keyed by (environment, agent, params), duplicates merged by pooling
/// the per-key statistics, stable (env, agent, params) ordering.
inline std::vector<SummaryRow> summarize(const std::vector<RunResult>& results) {
    if (results.empty()) throw std::invalid_argument("summarize: need at least one result");
    std::map<std::tuple<std::string, std::string, std::string>, SummaryRow> rows;
    std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, double>> moments;
    for (const auto& r : results) {
        auto key = std::make_tuple(r.env, r.agent, r.params);
        auto& row = rows[key];
        auto& [sum_obs2, sum_true2] = moments[key];
        if (row.runs == 0) {
            row.env = r.env;
            row.agent = r.agent;
            row.params = r.params;
            row.cycles = r.cycles;
            row.base_seed = r.base_seed;
        }
        row.mean_observed = (row.mean_observed * row.runs + r.mean_observed * r.runs) /
                            double(row.runs + r.runs);
        row.mean_true =
            (row.mean_true * row.runs + r.mean_true * r.runs) / double(row.runs + r.runs);
        sum_obs2 += (r.std_observed * r.std_observed + r.mean_observed * r.mean_observed) * r.runs;
        sum_true2 += (r.std_true * r.std_true + r.mean_true * r.mean_true) * r.runs;
        row.runs += r.runs;
    }
    std::vector<SummaryRow> out;
    for (auto& [key, row] : rows) {
        const auto& [sum_obs2, sum_true2] = moments[key];
        row.std_observed =
            std::sqrt(std::max(0.0, sum_obs2 / row.runs - row.mean_observed * row.mean_observed));
        row.std_true =
            std::sqrt(std::max(0.0, sum_true2 / row.runs - row.mean_true * row.mean_true));
        out.push_back(row);
    }
    return out;
}

namespace detail {

inline std::string full_precision(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace detail

inline const char* kSummaryHeader =
    "env,agent,params,runs,cycles,mean_observed,std_observed,mean_true,std_true,seed";

inline std::string summary_csv_line(const RunResult& r) {
    std::ostringstream os;
    os << r.env << ',' << r.agent << ',' << r.params << ',' << r.runs << ',' << r.cycles << ','
       << detail::full_precision(r.mean_observed) << ',' << detail::full_precision(r.std_observed)
       << ',' << detail::full_precision(r.mean_true) << ',' << detail::full_precision(r.std_true)
       << ',' << r.base_seed;
    return os.str();
}

inline std::string summary_csv(const std::vector<RunResult>& results) {
    std::string out = std::string(kSummaryHeader) + "\n";
    for (const auto& r : results) out += summary_csv_line(r) + "\n";
    return out;
}

inline void emit_csv(const std::vector<RunResult>& results, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
    out << summary_csv(results);
    if (!out) throw std::runtime_error("emit_csv: write failed for " + path);
}

inline void emit_csv(const RunResult& result, const std::string& path) {
    emit_csv(std::vector<RunResult>{result}, path);
}

inline void emit_curves(const RunResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_curves: cannot open " + path);
    out << "time,mean_observed,std_observed,mean_true,std_true\n";
    for (const auto& pt : result.curve)
        out << pt.time << ',' << detail::full_precision(pt.mean_observed) << ','
            << detail::full_precision(pt.std_observed) << ','
            << detail::full_precision(pt.mean_true) << ','
            << detail::full_precision(pt.std_true) << "\n";
    if (!out) throw std::runtime_error("emit_curves: write failed for " + path);
}

/// Reads back a summary CSV (format contract round-trip).
inline std::vector<SummaryRow> parse_summary_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_summary_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kSummaryHeader)
        throw std::runtime_error("parse_summary_csv: bad header in " + path);
    std::vector<SummaryRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 10) throw std::runtime_error("parse_summary_csv: bad row: " + line);
        SummaryRow row;
        row.env = fields[0];
        row.agent = fields[1];
        row.params = fields[2];
        row.runs = std::stoi(fields[3]);
        row.cycles = std::stoll(fields[4]);
        row.mean_observed = std::stod(fields[5]);
        row.std_observed = std::stod(fields[6]);
        row.mean_true = std::stod(fields[7]);
        row.std_true = std::stod(fields[8]);
        row.base_seed = std::stoull(fields[9]);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// The experimental table
// ---------------------------------------------------------------------------

enum class TableScale { Small, Full };

/// The 15-cell experiment grid: three gridworld layouts crossed with
/// Q-learning, softmax Q-learning, and three quantiliser thresholds.
inline std::vector<RunResult> run_table1(TableScale scale, uint64_t base_seed = 20170705,
                                         int threads = 0) {
    int runs = scale == TableScale::Small ? 10 : 100;
    int64_t cycles = scale == TableScale::Small ? 200'000 : 1'000'000;
    std::vector<RunResult> results;
    for (const char* env : {"gridworld-1g", "gridworld-2g", "gridworld-4g"}) {
        std::vector<AgentSpec> agents{
            {"qlearn", {}},
            {"softmax", {}},
            {"quantile", {{"delta", 0.2}}},
            {"quantile", {{"delta", 0.5}}},
            {"quantile", {{"delta", 0.8}}},
        };
        for (const auto& agent : agents) {
            ExperimentConfig cfg;
            cfg.environment.name = env;
            cfg.agent = agent;
            cfg.cycles = cycles;
            cfg.runs = runs;
            cfg.base_seed = base_seed;
            results.push_back(run_experiment(cfg, threads));
        }
    }
    return results;
}

} // namespace crmdp
