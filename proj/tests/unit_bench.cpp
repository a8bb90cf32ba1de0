#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ewhbench/bench.hpp"
#include "ewhbench/config.hpp"

using namespace ewhbench;
using Catch::Matchers::ContainsSubstring;

namespace {

// Small protocol that still exercises every stage: six generated days, four
// for training, two held out, historical scenarios so no clustering noise.
ExperimentConfig tiny_config(const std::string& roster) {
    ExperimentConfig cfg;
    cfg.seed = 11;
    cfg.total_days = 6;
    cfg.train_days = 4;
    cfg.num_scenarios = 2;
    cfg.scenario_source = ScenarioSource::historical;
    cfg.roster = parse_roster(roster);
    cfg.es.pairs = 2;
    cfg.es.iterations = 3;
    cfg.mpc_node_limit = 5;
    cfg.opt_node_limit = 5;
    cfg.workers = 1;
    return cfg;
}

std::vector<const EvalRow*> rows_for(const EvalReport& rep, const std::string& name) {
    std::vector<const EvalRow*> out;
    for (const EvalRow& r : rep.rows)
        if (r.controller == name) out.push_back(&r);
    return out;
}

}  // namespace

TEST_CASE("roster grammar round-trips and flags malformed entries") {
    const auto roster = parse_roster("prdb,es,pf:30,pf:480,mf:240,ts:120,opt");
    REQUIRE(roster.size() == 7);
    REQUIRE(roster[0].kind == ControllerKind::prdb);
    REQUIRE(roster[1].kind == ControllerKind::es);
    REQUIRE(roster[2].kind == ControllerKind::pf);
    REQUIRE(roster[2].lookahead_minutes == 30);
    REQUIRE(roster[3].lookahead_minutes == 480);
    REQUIRE(roster[4].kind == ControllerKind::mf);
    REQUIRE(roster[5].kind == ControllerKind::ts);
    REQUIRE(roster[6].kind == ControllerKind::opt);
    REQUIRE(roster[2].name() == "pf-30");
    REQUIRE(roster[6].name() == "opt");
    REQUIRE(roster_string(roster) == "prdb,es,pf:30,pf:480,mf:240,ts:120,opt");

    const auto spaced = parse_roster(" prdb , ts:60 ");
    REQUIRE(spaced.size() == 2);
    REQUIRE(spaced[1].lookahead_minutes == 60);

    REQUIRE_THROWS_WITH(parse_roster("pf"), ContainsSubstring("lookahead"));
    REQUIRE_THROWS_WITH(parse_roster("prdb:30"), ContainsSubstring("no lookahead"));
    REQUIRE_THROWS_WITH(parse_roster("bogus"), ContainsSubstring("unknown controller"));
    REQUIRE_THROWS_WITH(parse_roster("pf:abc"), ContainsSubstring("bad integer"));
}

TEST_CASE("flat config text maps onto every tunable and rejects unknown keys") {
    const std::string text =
        "# benchmark protocol\n"
        "seed = 99\n"
        "total_days = 10\n"
        "train_days = 7\n"
        "scenarios = 3\n"
        "scenario_source = historical\n"
        "roster = prdb,pf:30\n"
        "sweep_lookaheads = 30, 60\n"
        "gap_tol = 0.001\n"
        "mpc_node_limit = 4\n"
        "opt_node_limit = 9\n"
        "workers = 2\n"
        "\n"
        "es_pairs = 8\n"
        "es_sigma = 0.1\n"
        "es_alpha = 0.01\n"
        "es_iterations = 12\n"
        "es_seed = 5\n"
        "deadband_setpoint_f = 122\n"
        "deadband_halfwidth_f = 4\n"
        "rated_power_kw = 5.5   # bigger element\n"
        "block_minutes = 15\n"
        "min_downtime_minutes = 5\n";
    const ExperimentConfig c = parse_config(text);
    REQUIRE(c.seed == 99);
    REQUIRE(c.total_days == 10);
    REQUIRE(c.train_days == 7);
    REQUIRE(c.num_scenarios == 3);
    REQUIRE(c.scenario_source == ScenarioSource::historical);
    REQUIRE(roster_string(c.roster) == "prdb,pf:30");
    REQUIRE(c.sweep_lookaheads == std::vector<int>{30, 60});
    REQUIRE(c.gap_tol == 0.001);
    REQUIRE(c.mpc_node_limit == 4);
    REQUIRE(c.opt_node_limit == 9);
    REQUIRE(c.workers == 2);
    REQUIRE(c.es.pairs == 8);
    REQUIRE(c.es.sigma == 0.1);
    REQUIRE(c.es.alpha == 0.01);
    REQUIRE(c.es.iterations == 12);
    REQUIRE(c.es.seed == 5);
    REQUIRE(c.deadband.setpoint_f == 122.0);
    REQUIRE(c.deadband.halfwidth_f == 4.0);
    REQUIRE(c.params.rated_power_kw == 5.5);
    REQUIRE(c.env.block_minutes == 15);
    REQUIRE(c.env.min_downtime_minutes == 5);

    REQUIRE_THROWS_WITH(parse_config("seed = 1\nbogus_key = 2\n"),
                        ContainsSubstring("line 2"));
    REQUIRE_THROWS_WITH(parse_config("seed = 1\nbogus_key = 2\n"),
                        ContainsSubstring("bogus_key"));
    REQUIRE_THROWS_WITH(parse_config("just some words\n"),
                        ContainsSubstring("key = value"));

    std::filesystem::create_directories("test_tmp");
    write_text_file("test_tmp/cfg.ini", "seed = 3\nroster = prdb\n");
    REQUIRE(load_config("test_tmp/cfg.ini").seed == 3);
}

TEST_CASE("config validation enforces split, scenario, and lookahead rules") {
    ExperimentConfig c = tiny_config("prdb");
    REQUIRE_NOTHROW(validate(c));
    REQUIRE(c.eval_days() == 2);

    ExperimentConfig bad = c;
    bad.train_days = 6;
    REQUIRE_THROWS_WITH(validate(bad), ContainsSubstring("evaluation window"));
    bad = c;
    bad.num_scenarios = 5;
    REQUIRE_THROWS_WITH(validate(bad), ContainsSubstring("scenario count"));
    bad = c;
    bad.roster.clear();
    REQUIRE_THROWS_WITH(validate(bad), ContainsSubstring("empty roster"));
    bad = c;
    bad.roster = parse_roster("pf:30,pf:30");
    REQUIRE_THROWS_WITH(validate(bad), ContainsSubstring("duplicate"));
    bad = c;
    bad.roster = parse_roster("pf:25");
    REQUIRE_THROWS_WITH(validate(bad), ContainsSubstring("lookahead"));
    bad = c;
    bad.roster = parse_roster("ts:120");
    bad.num_scenarios = 1;
    REQUIRE_THROWS_WITH(validate(bad), ContainsSubstring("two scenarios"));
    bad = c;
    bad.mpc_node_limit = 0;
    REQUIRE_THROWS_WITH(validate(bad), ContainsSubstring("budget"));
}

TEST_CASE("stage wrapper tags failures and median handles edge cases") {
    REQUIRE_THROWS_WITH(benchdetail::stage("generate", []() -> int {
                            throw std::runtime_error("boom");
                        }),
                        ContainsSubstring("stage generate: boom"));
    REQUIRE(benchdetail::stage("ok", [] { return 42; }) == 42);

    REQUIRE(benchdetail::median({}) == 0.0);
    REQUIRE(benchdetail::median({3.0}) == 3.0);
    REQUIRE(benchdetail::median({5.0, 1.0, 3.0}) == 3.0);
    REQUIRE(benchdetail::median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}

TEST_CASE("reactive-only experiment mirrors its trajectories exactly") {
    const ExperimentConfig cfg = tiny_config("prdb");
    const EvalReport rep = run_experiment(cfg);

    REQUIRE(rep.rows.size() == 2);
    REQUIRE(rep.trajectories.size() == 2);
    REQUIRE(rep.eval_set.size() == 2);
    REQUIRE_FALSE(rep.trained);
    REQUIRE(rep.scenarios.size() == 2);

    // independent replay of the same protocol, one controller at a time
    const auto days = split_days(
        generate_demand(FixtureModel::household_defaults(), cfg.total_days, cfg.seed));
    const EwhState init = initial_state(cfg.params, cfg.env);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const EvalRow& row = rep.rows[i];
        REQUIRE(row.controller == "prdb");
        REQUIRE(row.day == static_cast<int>(i));
        REQUIRE(row.fallbacks == 0);
        REQUIRE(row.trajectory_file == "traj_prdb_day" + std::to_string(i) + ".csv");
        REQUIRE(row.cost == trajectory_cost(rep.trajectories[i]));
        REQUIRE(row.cost >= 0.0);
        REQUIRE(rep.trajectories[i].states.size() == 1441);

        const auto ctrl = [&](const EwhState& s, int, double) {
            return prdb_act(s, s.minute_of_day, cfg.deadband, cfg.schedule);
        };
        const Trajectory replay = rollout(ctrl, days[4 + i], cfg.params, cfg.schedule,
                                          cfg.env, init);
        REQUIRE(trajectory_cost(replay) == row.cost);
        REQUIRE(replay.actions == rep.trajectories[i].actions);
    }

    const auto aggs = aggregate_report(rep);
    REQUIRE(aggs.size() == 1);
    REQUIRE(aggs[0].controller == "prdb");
    REQUIRE(aggs[0].mean_cost == (rep.rows[0].cost + rep.rows[1].cost) / 2.0);
    REQUIRE(aggs[0].median_cost == aggs[0].mean_cost);

    const std::string report = report_csv(rep);
    REQUIRE(report.rfind("controller,day,cost,fallbacks,trajectory_file\n", 0) == 0);
    REQUIRE(std::count(report.begin(), report.end(), '\n') == 3);

    // one trajectory bundle: 1440 samples, running cost ends at the row cost
    const std::string tcsv = trajectory_csv(rep.trajectories[0], rep.eval_set[0], cfg);
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < tcsv.size()) {
        std::size_t end = tcsv.find('\n', start);
        lines.push_back(std::string_view(tcsv).substr(start, end - start));
        start = end + 1;
    }
    REQUIRE(lines.size() == 1441);
    REQUIRE(lines[0] ==
            "minute,temp_f,heater_on,demand_gpm,price,reward,cum_cost,temp_lower_f,temp_upper_f");
    std::vector<std::string_view> cells;
    split_csv_line(lines.back(), cells);
    REQUIRE(cells.size() == 9);
    REQUIRE(parse_double(cells[6]) == Catch::Approx(rep.rows[0].cost).epsilon(1e-12));
    // price column obeys the peak window: minute 900 is inside, minute 60 outside
    split_csv_line(lines[61], cells);
    REQUIRE(parse_double(cells[4]) == cfg.schedule.offpeak_rate);
    split_csv_line(lines[901], cells);
    REQUIRE(parse_double(cells[4]) == cfg.schedule.onpeak_rate);
}

TEST_CASE("deterministic artifacts are byte-identical across reruns and worker counts") {
    ExperimentConfig cfg = tiny_config("prdb,pf:30");
    const EvalReport a = run_experiment(cfg);
    const EvalReport b = run_experiment(cfg);
    cfg.workers = 2;
    const EvalReport c = run_experiment(cfg);

    REQUIRE(report_csv(a) == report_csv(b));
    REQUIRE(report_csv(a) == report_csv(c));
    REQUIRE(aggregates_csv(aggregate_report(a)) == aggregates_csv(aggregate_report(c)));
    REQUIRE(a.rows.size() == 4);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        REQUIRE(trajectory_csv(a.trajectories[i], a.eval_set[a.rows[i].day], a.config) ==
                trajectory_csv(c.trajectories[i], c.eval_set[c.rows[i].day], c.config));
    }

    std::filesystem::remove_all("test_tmp/out_a");
    std::filesystem::remove_all("test_tmp/out_c");
    write_outputs(a, "test_tmp/out_a");
    write_outputs(c, "test_tmp/out_c");
    for (const char* name : {"report.csv", "aggregates.csv", "cost_per_day.csv",
                             "scenarios.json", "traj_pf-30_day0.csv", "traj_prdb_day1.csv"}) {
        CAPTURE(name);
        REQUIRE(read_text_file(std::string("test_tmp/out_a/") + name) ==
                read_text_file(std::string("test_tmp/out_c/") + name));
    }
    // wall-clock artifacts exist but are not part of the deterministic set
    REQUIRE(std::filesystem::exists("test_tmp/out_a/speed.csv"));
    REQUIRE(std::filesystem::exists("test_tmp/out_a/speed_ratios.csv"));
}

TEST_CASE("changing only the training seed leaves solver rows unchanged") {
    ExperimentConfig cfg = tiny_config("es,pf:30");
    cfg.es.seed = 1;
    const EvalReport a = run_experiment(cfg);
    cfg.es.seed = 2;
    const EvalReport b = run_experiment(cfg);

    REQUIRE(a.trained);
    REQUIRE(a.policy.theta.size() == static_cast<std::size_t>(a.policy.arch.param_count()));
    REQUIRE(a.es_training.history.size() == 3);
    REQUIRE(a.es_train_fitness == a.es_training.final_fitness);

    const auto pf_a = rows_for(a, "pf-30");
    const auto pf_b = rows_for(b, "pf-30");
    REQUIRE(pf_a.size() == 2);
    for (std::size_t i = 0; i < pf_a.size(); ++i) {
        REQUIRE(pf_a[i]->cost == pf_b[i]->cost);
        REQUIRE(pf_a[i]->fallbacks == pf_b[i]->fallbacks);
    }
    // the es rows themselves stay internally consistent under either seed
    for (const EvalReport* rep : {&a, &b})
        for (const auto* row : rows_for(*rep, "es"))
            REQUIRE(row->cost ==
                    trajectory_cost(rep->trajectories[static_cast<std::size_t>(
                        row - rep->rows.data())]));

    const auto ratios = report_speed(a);
    REQUIRE(ratios.size() == 2);
    double es_med = 0.0, pf_med = 0.0;
    for (const SpeedRatio& r : ratios) {
        if (r.controller == "es") es_med = r.median_action_seconds;
        if (r.controller == "pf-30") pf_med = r.median_action_seconds;
    }
    REQUIRE(pf_med > es_med);  // a simplex solve costs more than a forward pass
}

TEST_CASE("one-shot schedule is the per-day minimum of the tiny roster") {
    const ExperimentConfig cfg = tiny_config("prdb,pf:30,opt");
    const EvalReport rep = run_experiment(cfg);
    REQUIRE(rep.rows.size() == 6);

    const auto opt_rows = rows_for(rep, "opt");
    REQUIRE(opt_rows.size() == 2);
    for (int d = 0; d < 2; ++d) {
        const double opt_cost = opt_rows[static_cast<std::size_t>(d)]->cost;
        for (const EvalRow& r : rep.rows)
            if (r.day == d) REQUIRE(opt_cost <= r.cost + 1e-9);
        REQUIRE(opt_rows[static_cast<std::size_t>(d)]->median_action_seconds > 0.0);
    }
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        REQUIRE(downtime_violations(rep.trajectories[i], cfg.env.min_downtime_minutes) == 0);
        REQUIRE(safety_violations(rep.trajectories[i], cfg.params.temp_upper_f) == 0);
    }
}

TEST_CASE("plot bundle writes every advertised file and rejects empty reports") {
    const ExperimentConfig cfg = tiny_config("prdb");
    EvalReport rep = run_experiment(cfg);
    std::filesystem::remove_all("test_tmp/plots");
    emit_plot_data(rep, "test_tmp/plots");
    REQUIRE(std::filesystem::exists("test_tmp/plots/cost_per_day.csv"));
    REQUIRE(std::filesystem::exists("test_tmp/plots/traj_prdb_day0.csv"));
    REQUIRE(std::filesystem::exists("test_tmp/plots/traj_prdb_day1.csv"));
    REQUIRE_FALSE(std::filesystem::exists("test_tmp/plots/cost_vs_lookahead.csv"));

    SweepCell cell;
    cell.variant = MpcVariant::pf;
    cell.lookahead_minutes = 30;
    cell.cost = 10.0;
    cell.mean_action_seconds = 0.25;
    SweepCell cell2 = cell;
    cell2.day_index = 1;
    cell2.cost = 14.0;
    cell2.mean_action_seconds = 0.75;
    SweepCell other = cell;
    other.variant = MpcVariant::ts;
    other.cost = 30.0;
    rep.sweep = {cell, cell2, other};
    emit_plot_data(rep, "test_tmp/plots");
    const std::string series = read_text_file("test_tmp/plots/cost_vs_lookahead.csv");
    REQUIRE(series ==
            "variant,lookahead_min,mean_cost,mean_action_seconds\n"
            "pf,30,12,0.5\n"
            "ts,30,30,0.25\n");

    const EvalReport empty;
    REQUIRE_THROWS_AS(emit_plot_data(empty, "test_tmp/plots"), std::invalid_argument);
    REQUIRE_THROWS_AS(aggregate_report(empty), std::invalid_argument);
}
