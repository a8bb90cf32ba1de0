#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ewhbench/baseline.hpp"
#include "ewhbench/demand.hpp"
#include "ewhbench/ewh.hpp"
#include "ewhbench/milp.hpp"
#include "ewhbench/mpc.hpp"

using namespace ewhbench;

namespace {

DemandTrace zero_day() {
    DemandTrace t;
    t.gpm.assign(kMinutesPerDay, 0.0);
    t.label = "zero";
    return t;
}

EwhState state_with(double temp, bool on, int mso, int minute) {
    EwhState s;
    s.temp_f = temp;
    s.heater_on = on;
    s.minutes_since_off = mso;
    s.minute_of_day = minute;
    s.cold_temp_f = std::max(0.0, 115.0 - temp);
    return s;
}

ScenarioSet lone(const DemandTrace& day) {
    ScenarioSet s;
    s.traces.push_back(day);
    s.probs.push_back(1.0);
    return s;
}

}  // namespace

TEST_CASE("mpc config validation") {
    const EnvConfig env;
    MpcConfig c;
    REQUIRE_NOTHROW(validate(c, env));
    c.lookahead_minutes = 35;
    REQUIRE_THROWS_AS(validate(c, env), std::invalid_argument);
    c = MpcConfig{};
    c.variant = MpcVariant::ts;
    c.scenario_set = lone(zero_day());
    REQUIRE_THROWS_AS(validate(c, env), std::invalid_argument);
    c = MpcConfig{};
    c.variant = MpcVariant::mf;
    REQUIRE_THROWS_AS(validate(c, env), std::invalid_argument);
    c = MpcConfig{};
    c.gap_tol = -1.0;
    REQUIRE_THROWS_AS(validate(c, env), std::invalid_argument);
    c = MpcConfig{};
    c.node_limit = 0;
    REQUIRE_THROWS_AS(validate(c, env), std::invalid_argument);

    REQUIRE(mpc_variant_from("pf") == MpcVariant::pf);
    REQUIRE(std::string(to_string(MpcVariant::ts)) == "ts");
    REQUIRE_THROWS_AS(mpc_variant_from("nope"), std::invalid_argument);
    REQUIRE(scenario_source_from("historical") == ScenarioSource::historical);
    REQUIRE_THROWS_AS(scenario_source_from("nope"), std::invalid_argument);
}

TEST_CASE("perfect forecast slices the evaluation trace exactly") {
    const DemandTrace day = generate_demand(FixtureModel::household_defaults(), 1, 13);
    const ForecastProvider pf = perfect_forecast(day);
    const ScenarioSet s = pf(250, 60);
    REQUIRE(s.size() == 1);
    REQUIRE(s.probs[0] == 1.0);
    REQUIRE(s.traces[0].gpm.size() == 60);
    for (int k = 0; k < 60; ++k)
        REQUIRE(s.traces[0].gpm[static_cast<std::size_t>(k)] ==
                day.gpm[static_cast<std::size_t>(250 + k)]);
    // never reads past the day
    REQUIRE_THROWS_AS(pf(1430, 30), std::out_of_range);
    REQUIRE(pf(1430, 10).traces[0].gpm.size() == 10);
}

TEST_CASE("mean and scenario forecasters align with the source set") {
    const auto days = split_days(generate_demand(FixtureModel::household_defaults(), 6, 19));
    const ScenarioSet set = historical_scenarios(days, 4);
    const DemandTrace mean = mean_forecast(set);

    const ScenarioSet mf = mean_forecaster(set)(700, 40);
    REQUIRE(mf.size() == 1);
    for (int k = 0; k < 40; ++k)
        REQUIRE(mf.traces[0].gpm[static_cast<std::size_t>(k)] ==
                mean.gpm[static_cast<std::size_t>(700 + k)]);

    const ScenarioSet ts = scenario_forecaster(set)(700, 40);
    REQUIRE(ts.size() == set.size());
    REQUIRE(ts.probs == set.probs);
    for (int n = 0; n < set.size(); ++n)
        for (int k = 0; k < 40; ++k)
            REQUIRE(ts.traces[static_cast<std::size_t>(n)].gpm[static_cast<std::size_t>(k)] ==
                    set.traces[static_cast<std::size_t>(n)].gpm[static_cast<std::size_t>(700 + k)]);
}

TEST_CASE("no demand and a warm tank means no heating") {
    const EwhParams params;
    const PriceSchedule sched;
    const EnvConfig env;
    MpcConfig cfg;
    cfg.variant = MpcVariant::pf;
    cfg.lookahead_minutes = 30;
    const ForecastProvider pf = perfect_forecast(zero_day());
    const MpcActResult r =
        mpc_act(state_with(120.0, false, env.min_downtime_minutes, 0), 0, cfg, pf, params, sched,
                env);
    REQUIRE_FALSE(r.on);
    REQUIRE_FALSE(r.fallback);
    REQUIRE(r.status == MilpStatus::optimal);
}

TEST_CASE("horizon truncates at the end of the day and rejects bad minutes") {
    const EwhParams params;
    const PriceSchedule sched;
    const EnvConfig env;
    MpcConfig cfg;
    cfg.variant = MpcVariant::pf;
    cfg.lookahead_minutes = 480;
    const DemandTrace day = generate_demand(FixtureModel::household_defaults(), 1, 23);
    const ForecastProvider pf = perfect_forecast(day);

    // last block of the day: effective horizon is 10 minutes
    REQUIRE_NOTHROW(mpc_act(state_with(121.0, false, 10, 1430), 1430, cfg, pf, params, sched, env));
    REQUIRE_THROWS_AS(mpc_act(state_with(121.0, false, 10, 0), 1440, cfg, pf, params, sched, env),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(mpc_act(state_with(121.0, false, 10, 0), 5, cfg, pf, params, sched, env),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(mpc_act(state_with(121.0, false, 10, 0), -10, cfg, pf, params, sched, env),
                      std::invalid_argument);
}

TEST_CASE("downtime lockout makes the first block off even under heat pressure") {
    const EwhParams params;
    const PriceSchedule sched;
    const EnvConfig env;
    MpcConfig cfg;
    cfg.variant = MpcVariant::pf;
    cfg.lookahead_minutes = 60;
    DemandTrace heavy = zero_day();
    for (int k = 0; k < 60; ++k) heavy.gpm[static_cast<std::size_t>(k)] = 2.5;
    const ForecastProvider pf = perfect_forecast(heavy);

    // free to act: a cold tank under heavy draw heats immediately
    const MpcActResult free_act =
        mpc_act(state_with(116.0, false, env.min_downtime_minutes, 0), 0, cfg, pf, params, sched,
                env);
    REQUIRE(free_act.on);
    // three minutes after a switch-off the lockout still binds
    const MpcActResult locked =
        mpc_act(state_with(116.0, false, 3, 0), 0, cfg, pf, params, sched, env);
    REQUIRE_FALSE(locked.on);
}

TEST_CASE("one-shot schedule on a zero-demand day is all-off at zero cost") {
    const EwhParams params;
    const PriceSchedule sched;
    const EnvConfig env;
    const MpcOptResult r =
        mpc_opt(zero_day(), params, sched, env, initial_state(params, env), 1e-6, 50);
    REQUIRE(r.solution.status == MilpStatus::optimal);
    REQUIRE(r.replay_cost == 0.0);
    for (std::uint8_t a : r.solution.block_actions) REQUIRE(a == 0);
    for (std::uint8_t a : r.trajectory.actions) REQUIRE(a == 0);
}

TEST_CASE("one-shot solve: replay bridge, baseline dominance, receding dominance") {
    const EwhParams params;
    const PriceSchedule sched;
    const EnvConfig env;
    const EwhState init = initial_state(params, env);
    const DemandTrace day = generate_demand(FixtureModel::household_defaults(), 1, 77);

    // receding-horizon perfect-forecast run, commands collected for warm start
    MpcConfig cfg;
    cfg.variant = MpcVariant::pf;
    cfg.lookahead_minutes = 480;
    cfg.node_limit = 5;
    MpcController pf(cfg, perfect_forecast(day), params, sched, env);
    const Trajectory pf_traj = rollout(pf, day, params, sched, env, init);
    const double pf_cost = trajectory_cost(pf_traj);
    REQUIRE(pf.stats().fallbacks == 0);
    REQUIRE(pf.commands().size() == pf_traj.action_seconds.size());

    const MpcOptResult opt =
        mpc_opt(day, params, sched, env, init, 1e-6, 40, 0.0, {pf.commands()});

    // objective and simulator replay are the same arithmetic
    REQUIRE(std::abs(opt.replay_cost - opt.solution.objective) <= 1e-9);
    // the receding run was offered as a warm start, so the one-shot schedule
    // cannot be worse than it
    REQUIRE(opt.replay_cost <= pf_cost + 1e-9);

    // a feasible reactive baseline can never beat the one-shot schedule
    const DeadbandConfig band;
    const auto prdb = [&](const EwhState& s, int minute, double) {
        return prdb_act(s, minute, band, sched);
    };
    const double prdb_cost = trajectory_cost(rollout(prdb, day, params, sched, env, init));
    REQUIRE(opt.replay_cost <= prdb_cost + 1e-6);

    // the one-shot pattern respects downtime and the ceiling in replay
    REQUIRE(downtime_violations(opt.trajectory, env.min_downtime_minutes) == 0);
    REQUIRE(safety_violations(opt.trajectory, params.temp_upper_f) == 0);
}

TEST_CASE("warm starts are adopted on small instances") {
    const EwhParams params;
    const PriceSchedule sched;
    EnvConfig env;
    env.episode_minutes = 60;  // six blocks, exhaustive oracle is cheap
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> temp0(105.0, 125.0);
    std::uniform_real_distribution<double> draw(0.0, 2.0);

    for (int inst = 0; inst < 8; ++inst) {
        DemandTrace t;
        t.gpm.assign(60, 0.0);
        for (auto& g : t.gpm) g = draw(rng);
        EwhState init = initial_state(params, env);
        init.temp_f = temp0(rng);
        init.cold_temp_f = std::max(0.0, params.temp_lower_f - init.temp_f);
        const MilpModel m = build_model(params, sched, env, lone(t), 60, init);
        const MilpSolution exact = brute_force_solve(m);
        REQUIRE(exact.status == MilpStatus::optimal);

        BbOptions opts;
        opts.node_limit = 1;
        opts.extra_seeds.push_back({1, 1});  // wrong length, must be ignored
        opts.extra_seeds.push_back(exact.block_actions);
        const MilpSolution warm = solve_bb(m, opts);
        REQUIRE_FALSE(warm.block_actions.empty());
        REQUIRE(warm.objective <= exact.objective + 1e-12);
    }
}

TEST_CASE("per-action solve time grows with the lookahead") {
    const EwhParams params;
    const PriceSchedule sched;
    const EnvConfig env;
    const auto days = split_days(generate_demand(FixtureModel::household_defaults(), 8, 31));
    const ScenarioSet set = historical_scenarios(
        std::vector<DemandTrace>(days.begin(), days.begin() + 7), 7);
    const DemandTrace& day = days.back();

    const auto one_solve = [&](int lookahead) {
        MpcConfig cfg;
        cfg.variant = MpcVariant::ts;
        cfg.lookahead_minutes = lookahead;
        cfg.scenario_set = set;
        cfg.node_limit = 5;
        const ForecastProvider prov = make_provider(cfg, day);
        return mpc_act(initial_state(params, env), 0, cfg, prov, params, sched, env);
    };
    const MpcActResult short_h = one_solve(30);
    const MpcActResult long_h = one_solve(240);
    REQUIRE(long_h.solve_seconds > short_h.solve_seconds);
}

TEST_CASE("sweep produces one deterministic cell per variant, lookahead, day") {
    const EwhParams params;
    const PriceSchedule sched;
    const EnvConfig env;
    const auto days = split_days(generate_demand(FixtureModel::household_defaults(), 5, 47));
    const ScenarioSet set =
        historical_scenarios(std::vector<DemandTrace>(days.begin(), days.begin() + 4), 4);
    const std::vector<DemandTrace> eval_days{days.back()};

    const std::vector<SweepCell> cells =
        horizon_sweep(eval_days, {MpcVariant::pf, MpcVariant::mf}, {30}, set,
                      ScenarioSource::historical, params, sched, env, 1e-6, 5, 5, 1);
    REQUIRE(cells.size() == 2);

    // the pf cell must equal an independent rollout of the same configuration
    MpcConfig cfg;
    cfg.variant = MpcVariant::pf;
    cfg.lookahead_minutes = 30;
    cfg.scenario_set = set;
    cfg.node_limit = 5;
    MpcController ctrl(cfg, perfect_forecast(eval_days[0]), params, sched, env);
    const Trajectory t =
        rollout(ctrl, eval_days[0], params, sched, env, initial_state(params, env));
    bool found_pf = false;
    for (const SweepCell& c : cells)
        if (c.variant == MpcVariant::pf) {
            found_pf = true;
            REQUIRE(c.cost == trajectory_cost(t));
            REQUIRE(c.lookahead_minutes == 30);
            REQUIRE(c.day_index == 0);
            REQUIRE(c.fallbacks == 0);
        }
    REQUIRE(found_pf);

    // worker count changes timings only, never costs
    const std::vector<SweepCell> again =
        horizon_sweep(eval_days, {MpcVariant::pf, MpcVariant::mf}, {30}, set,
                      ScenarioSource::historical, params, sched, env, 1e-6, 5, 5, 2);
    REQUIRE(again.size() == cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        REQUIRE(again[i].variant == cells[i].variant);
        REQUIRE(again[i].cost == cells[i].cost);
    }
}

TEST_CASE("sweep CSV round-trips its fields") {
    SweepCell c;
    c.variant = MpcVariant::ts;
    c.source = ScenarioSource::kmeans;
    c.lookahead_minutes = 120;
    c.day_index = 3;
    c.cost = 45.125;
    c.mean_action_seconds = 0.25;
    c.fallbacks = 0;
    const std::string csv = sweep_csv({c});
    const std::size_t nl = csv.find('\n');
    REQUIRE(csv.substr(0, nl) ==
            "variant,source,lookahead_min,day,cost,mean_action_seconds,fallbacks");
    const std::string row = csv.substr(nl + 1, csv.rfind('\n') - nl - 1);
    std::vector<std::string_view> cells;
    split_csv_line(row, cells);
    REQUIRE(cells.size() == 7);
    REQUIRE(cells[0] == "ts");
    REQUIRE(cells[1] == "kmeans");
    REQUIRE(cells[2] == "120");
    REQUIRE(cells[3] == "3");
    REQUIRE(parse_double(cells[4]) == 45.125);
}
