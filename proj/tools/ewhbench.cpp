#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ewhbench/bench.hpp"
#include "ewhbench/config.hpp"

using namespace ewhbench;

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    std::int64_t seed = -1;
    int workers = -1;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "config file, key = value lines");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", c.seed, "override the experiment seed");
    sub->add_option("--workers", c.workers, "override the worker count");
}

ExperimentConfig make_config(const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
    if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
    if (c.workers >= 0) cfg.workers = static_cast<unsigned>(c.workers);
    validate(cfg);
    return cfg;
}

std::vector<DemandTrace> generate_days(const ExperimentConfig& cfg) {
    return split_days(generate_demand(FixtureModel::household_defaults(), cfg.total_days,
                                      cfg.seed));
}

ScenarioSet build_scenarios(const ExperimentConfig& cfg, const std::vector<DemandTrace>& days) {
    const std::vector<DemandTrace> train(days.begin(), days.begin() + cfg.train_days);
    return cfg.scenario_source == ScenarioSource::kmeans
               ? kmeans_scenarios(train, cfg.num_scenarios, cfg.seed)
               : historical_scenarios(train, cfg.num_scenarios);
}

int cmd_generate(const Common& c) {
    const ExperimentConfig cfg = make_config(c);
    std::filesystem::create_directories(c.out);
    const DemandTrace full =
        generate_demand(FixtureModel::household_defaults(), cfg.total_days, cfg.seed);
    save_trace(full, c.out + "/demand.csv");
    std::string daily = "day,gallons\n";
    const auto days = split_days(full);
    for (std::size_t d = 0; d < days.size(); ++d) {
        double gal = 0.0;
        for (double g : days[d].gpm) gal += g;
        daily += std::to_string(d) + "," + format_double(gal) + "\n";
    }
    write_text_file(c.out + "/daily_gallons.csv", daily);
    std::printf("wrote %d days to %s/demand.csv\n", cfg.total_days, c.out.c_str());
    return 0;
}

int cmd_scenarios(const Common& c) {
    const ExperimentConfig cfg = make_config(c);
    const ScenarioSet set = build_scenarios(cfg, generate_days(cfg));
    save_scenarios(set, c.out, "scenarios");
    std::printf("wrote %d %s scenarios to %s/scenarios.json\n", set.size(),
                to_string(cfg.scenario_source), c.out.c_str());
    return 0;
}

int cmd_train_es(const Common& c) {
    const ExperimentConfig cfg = make_config(c);
    const ScenarioSet set = build_scenarios(cfg, generate_days(cfg));
    const auto [policy, result] =
        es_train(cfg.es, set, cfg.params, cfg.schedule, cfg.env,
                 initial_state(cfg.params, cfg.env), cfg.workers);
    std::filesystem::create_directories(c.out);
    save_policy(policy, c.out + "/policy.json");
    save_history(result.history, c.out + "/history.csv");
    const double prdb = prdb_fitness(cfg, set);
    std::printf("trained %d iterations: policy fitness %.4f, deadband fitness %.4f\n",
                cfg.es.iterations, result.final_fitness, prdb);
    return 0;
}

int cmd_sweep(const Common& c, const std::string& variants_arg, std::vector<int> lookaheads,
              int day_limit) {
    const ExperimentConfig cfg = make_config(c);
    const auto days = generate_days(cfg);
    const ScenarioSet set = build_scenarios(cfg, days);
    std::vector<DemandTrace> eval(days.begin() + cfg.train_days, days.end());
    if (day_limit > 0 && day_limit < static_cast<int>(eval.size()))
        eval.resize(static_cast<std::size_t>(day_limit));
    if (lookaheads.empty()) lookaheads = cfg.sweep_lookaheads;
    std::vector<MpcVariant> variants;
    std::size_t start = 0;
    const std::string& va = variants_arg;
    while (start <= va.size()) {
        std::size_t end = va.find(',', start);
        if (end == std::string::npos) end = va.size();
        if (end > start) variants.push_back(mpc_variant_from(va.substr(start, end - start)));
        if (end == va.size()) break;
        start = end + 1;
    }

    const std::vector<SweepCell> cells =
        horizon_sweep(eval, variants, lookaheads, set, cfg.scenario_source, cfg.params,
                      cfg.schedule, cfg.env, cfg.gap_tol, cfg.mpc_node_limit,
                      cfg.opt_node_limit, cfg.workers);
    std::filesystem::create_directories(c.out);
    write_text_file(c.out + "/sweep.csv", sweep_csv(cells));
    write_text_file(c.out + "/cost_vs_lookahead.csv", lookahead_series_csv(cells));
    std::printf("wrote %zu sweep cells to %s/sweep.csv\n", cells.size(), c.out.c_str());
    return 0;
}

int cmd_evaluate(const Common& c) {
    const ExperimentConfig cfg = make_config(c);
    const EvalReport rep = run_experiment(cfg);
    write_outputs(rep, c.out);
    std::printf("%-10s %12s %12s %16s\n", "controller", "mean_cost", "median_cost",
                "median_act_sec");
    for (const ControllerAggregate& a : aggregate_report(rep))
        std::printf("%-10s %12.4f %12.4f %16.6f\n", a.controller.c_str(), a.mean_cost,
                    a.median_cost, a.median_action_seconds);
    if (rep.trained)
        std::printf("training fitness: policy %.4f vs deadband %.4f\n", rep.es_train_fitness,
                    rep.prdb_train_fitness);
    std::printf("outputs in %s\n", c.out.c_str());
    return 0;
}

int cmd_report(const Common& c) {
    const CsvTable report = read_csv(c.out + "/report.csv");
    const CsvTable speed = read_csv(c.out + "/speed.csv");
    struct Agg {
        std::vector<double> costs;
        std::vector<double> secs;
    };
    std::vector<std::string> order;
    std::vector<Agg> aggs;
    const auto slot = [&](const std::string& name) -> Agg& {
        for (std::size_t i = 0; i < order.size(); ++i)
            if (order[i] == name) return aggs[i];
        order.push_back(name);
        aggs.emplace_back();
        return aggs.back();
    };
    for (const auto& row : report.rows) slot(row[0]).costs.push_back(parse_double(row[2]));
    for (const auto& row : speed.rows) slot(row[0]).secs.push_back(parse_double(row[2]));

    double es_time = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i)
        if (order[i] == "es") es_time = benchdetail::median(aggs[i].secs);
    std::printf("%-10s %12s %12s %16s %10s\n", "controller", "mean_cost", "median_cost",
                "median_act_sec", "vs_es");
    for (std::size_t i = 0; i < order.size(); ++i) {
        double total = 0.0;
        for (double v : aggs[i].costs) total += v;
        const double mean = aggs[i].costs.empty()
                                ? 0.0
                                : total / static_cast<double>(aggs[i].costs.size());
        const double med_secs = benchdetail::median(aggs[i].secs);
        std::printf("%-10s %12.4f %12.4f %16.6f %10.1f\n", order[i].c_str(), mean,
                    benchdetail::median(aggs[i].costs), med_secs,
                    es_time > 0.0 ? med_secs / es_time : 0.0);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"price-responsive electric water heater benchmark"};
    app.require_subcommand(1);
    Common c;

    CLI::App* generate = app.add_subcommand("generate", "generate the demand dataset");
    add_common(generate, c);
    CLI::App* scenarios = app.add_subcommand("scenarios", "build training scenarios");
    add_common(scenarios, c);
    CLI::App* train = app.add_subcommand("train-es", "train the neural policy");
    add_common(train, c);
    CLI::App* sweep = app.add_subcommand("sweep-mpc", "cost versus lookahead sweep");
    add_common(sweep, c);
    std::string sweep_variants = "pf,mf,ts";
    std::vector<int> sweep_lookaheads;
    int sweep_days = 0;
    sweep->add_option("--variants", sweep_variants, "comma list of pf,mf,ts,opt");
    sweep->add_option("--lookaheads", sweep_lookaheads, "lookahead minutes");
    sweep->add_option("--days", sweep_days, "limit evaluation days");
    CLI::App* evaluate = app.add_subcommand("evaluate", "run the full benchmark protocol");
    add_common(evaluate, c);
    CLI::App* report = app.add_subcommand("report", "summarize an existing output directory");
    add_common(report, c);

    CLI11_PARSE(app, argc, argv);

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        if (sub == "generate") return cmd_generate(c);
        if (sub == "scenarios") return cmd_scenarios(c);
        if (sub == "train-es") return cmd_train_es(c);
        if (sub == "sweep-mpc") return cmd_sweep(c, sweep_variants, sweep_lookaheads, sweep_days);
        if (sub == "evaluate") return cmd_evaluate(c);
        if (sub == "report") return cmd_report(c);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "ewhbench %s: error: %s\n", sub.c_str(), e.what());
        return 1;
    }
    return 1;
}
