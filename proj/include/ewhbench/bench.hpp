#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ewhbench/baseline.hpp"
#include "ewhbench/config.hpp"
#include "ewhbench/csv.hpp"
#include "ewhbench/demand.hpp"
#include "ewhbench/es.hpp"
#include "ewhbench/ewh.hpp"
#include "ewhbench/milp.hpp"
#include "ewhbench/mpc.hpp"
#include "ewhbench/parallel.hpp"

namespace ewhbench {

struct EvalRow {
    std::string controller;
    int day = 0;  // index within the evaluation week
    double cost = 0.0;
    double median_action_seconds = 0.0;
    long fallbacks = 0;
    std::string trajectory_file;
};

struct EvalReport {
    ExperimentConfig config;
    ScenarioSet scenarios;
    std::vector<DemandTrace> eval_set;
    PolicyParams policy;
    EsResult es_training;
    bool trained = false;
    double prdb_train_fitness = 0.0;
    double es_train_fitness = 0.0;
    std::vector<EvalRow> rows;             // roster-major, day-minor
    std::vector<Trajectory> trajectories;  // parallel to rows
    std::vector<SweepCell> sweep;          // filled separately by run_sweep
};

namespace benchdetail {

template <class F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
    }
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace benchdetail

// Scores the reactive deadband through the shared fitness harness, the same
// arithmetic the trainer sees.
inline double prdb_fitness(const ExperimentConfig& cfg, const ScenarioSet& scenarios) {
    const auto ctrl = [&](const EwhState& s, int, double) {
        return prdb_act(s, s.minute_of_day, cfg.deadband, cfg.schedule);
    };
    return controller_fitness(ctrl, scenarios, cfg.params, cfg.schedule, cfg.env,
                              initial_state(cfg.params, cfg.env));
}

// Full protocol: generate the dataset, split train/eval, build scenarios
// from the training window, train the policy, then evaluate the roster on
// the held-out week. The one-shot rows run last so every receding schedule
// can warm-start them. Deterministic given the config; the worker count
// only changes timings.
inline EvalReport run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    EvalReport rep;
    rep.config = cfg;

    const std::vector<DemandTrace> days = benchdetail::stage("generate", [&] {
        return split_days(generate_demand(FixtureModel::household_defaults(), cfg.total_days,
                                          cfg.seed));
    });
    const std::vector<DemandTrace> train(days.begin(), days.begin() + cfg.train_days);
    rep.eval_set.assign(days.begin() + cfg.train_days, days.end());

    rep.scenarios = benchdetail::stage("scenarios", [&] {
        return cfg.scenario_source == ScenarioSource::kmeans
                   ? kmeans_scenarios(train, cfg.num_scenarios, cfg.seed)
                   : historical_scenarios(train, cfg.num_scenarios);
    });

    const bool wants_es =
        std::any_of(cfg.roster.begin(), cfg.roster.end(),
                    [](const RosterEntry& e) { return e.kind == ControllerKind::es; });
    if (wants_es) {
        benchdetail::stage("train-es", [&] {
            auto [policy, result] = es_train(cfg.es, rep.scenarios, cfg.params, cfg.schedule,
                                             cfg.env, initial_state(cfg.params, cfg.env),
                                             cfg.workers);
            rep.policy = std::move(policy);
            rep.es_training = std::move(result);
            rep.trained = true;
            rep.es_train_fitness = rep.es_training.final_fitness;
            rep.prdb_train_fitness = prdb_fitness(cfg, rep.scenarios);
            return 0;
        });
    }

    benchdetail::stage("evaluate", [&] {
        const EwhState init = initial_state(cfg.params, cfg.env);
        const int days_n = cfg.eval_days();

        struct Cell {
            Trajectory traj;
            long fallbacks = 0;
            double one_shot_seconds = -1.0;  // >= 0 marks a one-shot row
            std::vector<std::uint8_t> commands;
        };
        std::vector<RosterEntry> receding;
        for (const RosterEntry& e : cfg.roster)
            if (e.kind != ControllerKind::opt) receding.push_back(e);

        std::vector<Cell> cells(receding.size() * static_cast<std::size_t>(days_n));
        parallel_for(
            cells.size(),
            [&](std::size_t idx) {
                const RosterEntry& entry = receding[idx / static_cast<std::size_t>(days_n)];
                const int d = static_cast<int>(idx % static_cast<std::size_t>(days_n));
                const DemandTrace& day = rep.eval_set[static_cast<std::size_t>(d)];
                Cell& cell = cells[idx];
                switch (entry.kind) {
                    case ControllerKind::prdb: {
                        const auto ctrl = [&](const EwhState& s, int, double) {
                            return prdb_act(s, s.minute_of_day, cfg.deadband, cfg.schedule);
                        };
                        cell.traj = rollout(ctrl, day, cfg.params, cfg.schedule, cfg.env, init);
                        break;
                    }
                    case ControllerKind::es: {
                        const auto ctrl = [&](const EwhState& s, int, double gpm) {
                            return policy_act(rep.policy, s, gpm);
                        };
                        cell.traj = rollout(ctrl, day, cfg.params, cfg.schedule, cfg.env, init);
                        break;
                    }
                    default: {
                        MpcConfig mc;
                        mc.variant = entry.kind == ControllerKind::pf   ? MpcVariant::pf
                                     : entry.kind == ControllerKind::mf ? MpcVariant::mf
                                                                        : MpcVariant::ts;
                        mc.lookahead_minutes = entry.lookahead_minutes;
                        mc.scenario_source = cfg.scenario_source;
                        mc.scenario_set = rep.scenarios;
                        mc.gap_tol = cfg.gap_tol;
                        mc.node_limit = cfg.mpc_node_limit;
                        MpcController ctrl(mc, make_provider(mc, day), cfg.params, cfg.schedule,
                                           cfg.env);
                        cell.traj = rollout(ctrl, day, cfg.params, cfg.schedule, cfg.env, init);
                        cell.fallbacks = ctrl.stats().fallbacks;
                        cell.commands = ctrl.commands();
                        break;
                    }
                }
            },
            cfg.workers);

        const bool wants_opt =
            std::any_of(cfg.roster.begin(), cfg.roster.end(),
                        [](const RosterEntry& e) { return e.kind == ControllerKind::opt; });
        std::vector<Cell> opt_cells(wants_opt ? static_cast<std::size_t>(days_n) : 0);
        if (wants_opt) {
            parallel_for(
                opt_cells.size(),
                [&](std::size_t d) {
                    std::vector<std::vector<std::uint8_t>> warm;
                    for (std::size_t r = 0; r < receding.size(); ++r) {
                        const Cell& c = cells[r * static_cast<std::size_t>(days_n) + d];
                        if (!c.commands.empty()) warm.push_back(c.commands);
                    }
                    MpcOptResult r = mpc_opt(rep.eval_set[d], cfg.params, cfg.schedule,
                                             cfg.env, init, cfg.gap_tol, cfg.opt_node_limit,
                                             0.0, std::move(warm));
                    Cell& cell = opt_cells[d];
                    cell.traj = std::move(r.trajectory);
                    cell.one_shot_seconds = r.solution.solve_seconds;
                },
                cfg.workers);
        }

        for (const RosterEntry& entry : cfg.roster) {
            for (int d = 0; d < days_n; ++d) {
                const Cell* cell = nullptr;
                if (entry.kind == ControllerKind::opt) {
                    cell = &opt_cells[static_cast<std::size_t>(d)];
                } else {
                    const std::size_t r = static_cast<std::size_t>(
                        std::find_if(receding.begin(), receding.end(),
                                     [&](const RosterEntry& e) {
                                         return e.name() == entry.name();
                                     }) -
                        receding.begin());
                    cell = &cells[r * static_cast<std::size_t>(days_n) +
                                  static_cast<std::size_t>(d)];
                }
                EvalRow row;
                row.controller = entry.name();
                row.day = d;
                row.cost = trajectory_cost(cell->traj);
                if (row.cost < 0.0)
                    throw std::runtime_error("negative cost for " + row.controller);
                row.median_action_seconds =
                    cell->one_shot_seconds >= 0.0
                        ? cell->one_shot_seconds
                        : benchdetail::median(cell->traj.action_seconds);
                row.fallbacks = cell->fallbacks;
                row.trajectory_file =
                    "traj_" + row.controller + "_day" + std::to_string(d) + ".csv";
                rep.rows.push_back(std::move(row));
                rep.trajectories.push_back(cell->traj);
            }
        }
        return 0;
    });
    return rep;
}

// The deterministic report: no wall-clock columns, byte-identical across
// reruns and worker counts.
inline std::string report_csv(const EvalReport& rep) {
    std::string out = "controller,day,cost,fallbacks,trajectory_file\n";
    for (const EvalRow& r : rep.rows) {
        out += r.controller;
        out += ',';
        out += std::to_string(r.day);
        out += ',';
        out += format_double(r.cost);
        out += ',';
        out += std::to_string(r.fallbacks);
        out += ',';
        out += r.trajectory_file;
        out += '\n';
    }
    return out;
}

inline std::string speed_csv(const EvalReport& rep) {
    std::string out = "controller,day,median_action_seconds\n";
    for (const EvalRow& r : rep.rows) {
        out += r.controller;
        out += ',';
        out += std::to_string(r.day);
        out += ',';
        out += format_double(r.median_action_seconds);
        out += '\n';
    }
    return out;
}

struct ControllerAggregate {
    std::string controller;
    double mean_cost = 0.0;
    double median_cost = 0.0;
    double median_action_seconds = 0.0;  // pooled per-call median over the week
};

inline std::vector<ControllerAggregate> aggregate_report(const EvalReport& rep) {
    if (rep.rows.empty()) throw std::invalid_argument("aggregate_report: empty report");
    std::vector<ControllerAggregate> out;
    std::vector<std::string> order;
    for (const EvalRow& r : rep.rows)
        if (std::find(order.begin(), order.end(), r.controller) == order.end())
            order.push_back(r.controller);
    for (const std::string& name : order) {
        ControllerAggregate agg;
        agg.controller = name;
        std::vector<double> costs;
        std::vector<double> calls;
        for (std::size_t i = 0; i < rep.rows.size(); ++i) {
            if (rep.rows[i].controller != name) continue;
            costs.push_back(rep.rows[i].cost);
            const Trajectory& t = rep.trajectories[i];
            if (t.action_seconds.empty())
                calls.push_back(rep.rows[i].median_action_seconds);
            else
                calls.insert(calls.end(), t.action_seconds.begin(), t.action_seconds.end());
        }
        double total = 0.0;
        for (double c : costs) total += c;
        agg.mean_cost = total / static_cast<double>(costs.size());
        agg.median_cost = benchdetail::median(costs);
        agg.median_action_seconds = benchdetail::median(calls);
        out.push_back(std::move(agg));
    }
    return out;
}

inline std::string aggregates_csv(const std::vector<ControllerAggregate>& aggs) {
    std::string out = "controller,mean_cost,median_cost\n";
    for (const ControllerAggregate& a : aggs) {
        out += a.controller;
        out += ',';
        out += format_double(a.mean_cost);
        out += ',';
        out += format_double(a.median_cost);
        out += '\n';
    }
    return out;
}

struct SpeedRatio {
    std::string controller;
    double median_action_seconds = 0.0;
    double ratio_vs_es = 0.0;  // this controller's median time over the policy's
};

// Per-action wall time of each controller against the trained policy,
// medians pooled over the whole evaluation week.
inline std::vector<SpeedRatio> report_speed(const EvalReport& rep) {
    const std::vector<ControllerAggregate> aggs = aggregate_report(rep);
    double es_time = 0.0;
    for (const ControllerAggregate& a : aggs)
        if (a.controller == "es") es_time = a.median_action_seconds;
    std::vector<SpeedRatio> out;
    for (const ControllerAggregate& a : aggs) {
        SpeedRatio s;
        s.controller = a.controller;
        s.median_action_seconds = a.median_action_seconds;
        s.ratio_vs_es = es_time > 0.0 ? a.median_action_seconds / es_time : 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

inline std::string speed_ratios_csv(const std::vector<SpeedRatio>& ratios) {
    std::string out = "controller,median_action_seconds,ratio_vs_es\n";
    for (const SpeedRatio& s : ratios) {
        out += s.controller;
        out += ',';
        out += format_double(s.median_action_seconds);
        out += ',';
        out += format_double(s.ratio_vs_es);
        out += '\n';
    }
    return out;
}

// Per-minute series for one evaluation trajectory: enough to redraw the
// temperature band, price window, actions, draws, and running cost.
inline std::string trajectory_csv(const Trajectory& t, const DemandTrace& day,
                                  const ExperimentConfig& cfg) {
    std::string out =
        "minute,temp_f,heater_on,demand_gpm,price,reward,cum_cost,temp_lower_f,temp_upper_f\n";
    double cum = 0.0;
    const int minutes = static_cast<int>(t.actions.size());
    for (int m = 0; m < minutes; ++m) {
        const EwhState& s = t.states[static_cast<std::size_t>(m + 1)];
        const int clock = t.states[static_cast<std::size_t>(m)].minute_of_day;
        cum += -t.rewards[static_cast<std::size_t>(m)];
        out += std::to_string(m);
        out += ',';
        out += format_double(s.temp_f);
        out += ',';
        out += std::to_string(static_cast<int>(t.actions[static_cast<std::size_t>(m)]));
        out += ',';
        out += format_double(day.gpm[static_cast<std::size_t>(m)]);
        out += ',';
        out += format_double(is_on_peak(clock, cfg.schedule) ? cfg.schedule.onpeak_rate
                                                             : cfg.schedule.offpeak_rate);
        out += ',';
        out += format_double(t.rewards[static_cast<std::size_t>(m)]);
        out += ',';
        out += format_double(cum);
        out += ',';
        out += format_double(cfg.params.temp_lower_f);
        out += ',';
        out += format_double(cfg.params.temp_upper_f);
        out += '\n';
    }
    return out;
}

inline std::string lookahead_series_csv(const std::vector<SweepCell>& sweep) {
    // mean over days per (variant, lookahead), cost and per-action time
    struct Key {
        MpcVariant v;
        int la;
        bool operator<(const Key& o) const { return v < o.v || (v == o.v && la < o.la); }
    };
    std::map<Key, std::pair<std::vector<double>, std::vector<double>>> series;
    for (const SweepCell& c : sweep) {
        auto& entry = series[{c.variant, c.lookahead_minutes}];
        entry.first.push_back(c.cost);
        entry.second.push_back(c.mean_action_seconds);
    }
    std::string out = "variant,lookahead_min,mean_cost,mean_action_seconds\n";
    for (const auto& [key, vals] : series) {
        double cost = 0.0, secs = 0.0;
        for (double v : vals.first) cost += v;
        for (double v : vals.second) secs += v;
        out += to_string(key.v);
        out += ',';
        out += std::to_string(key.la);
        out += ',';
        out += format_double(cost / static_cast<double>(vals.first.size()));
        out += ',';
        out += format_double(secs / static_cast<double>(vals.second.size()));
        out += '\n';
    }
    return out;
}

// Plot bundles: per-day cost bars, per-minute trajectory series, and (when a
// sweep was run) the cost-versus-lookahead series.
inline void emit_plot_data(const EvalReport& rep, const std::string& dir) {
    if (rep.rows.empty()) throw std::invalid_argument("emit_plot_data: empty report");
    std::filesystem::create_directories(dir);
    std::string bars = "controller,day,cost\n";
    for (const EvalRow& r : rep.rows) {
        bars += r.controller;
        bars += ',';
        bars += std::to_string(r.day);
        bars += ',';
        bars += format_double(r.cost);
        bars += '\n';
    }
    write_text_file(dir + "/cost_per_day.csv", bars);
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
        write_text_file(dir + "/" + rep.rows[i].trajectory_file,
                        trajectory_csv(rep.trajectories[i],
                                       rep.eval_set[static_cast<std::size_t>(rep.rows[i].day)],
                                       rep.config));
    if (!rep.sweep.empty())
        write_text_file(dir + "/cost_vs_lookahead.csv", lookahead_series_csv(rep.sweep));
}

// Everything an evaluation run leaves on disk. The deterministic artifacts
// (report, aggregates, plot data, policy, history, scenarios) are separated
// from the wall-clock ones (speed, ratios, sweep timings).
inline void write_outputs(const EvalReport& rep, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_text_file(dir + "/report.csv", report_csv(rep));
    write_text_file(dir + "/aggregates.csv", aggregates_csv(aggregate_report(rep)));
    write_text_file(dir + "/speed.csv", speed_csv(rep));
    write_text_file(dir + "/speed_ratios.csv", speed_ratios_csv(report_speed(rep)));
    if (rep.trained) {
        save_policy(rep.policy, dir + "/policy.json");
        save_history(rep.es_training.history, dir + "/history.csv");
    }
    save_scenarios(rep.scenarios, dir, "scenarios");
    emit_plot_data(rep, dir);
    if (!rep.sweep.empty()) write_text_file(dir + "/sweep.csv", sweep_csv(rep.sweep));
}

}  // namespace ewhbench
