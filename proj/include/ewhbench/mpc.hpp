#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ewhbench/baseline.hpp"
#include "ewhbench/csv.hpp"
#include "ewhbench/demand.hpp"
#include "ewhbench/ewh.hpp"
#include "ewhbench/milp.hpp"
#include "ewhbench/parallel.hpp"

namespace ewhbench {

enum class MpcVariant { opt, pf, mf, ts };
enum class ScenarioSource { historical, kmeans };

inline const char* to_string(MpcVariant v) {
    switch (v) {
        case MpcVariant::opt: return "opt";
        case MpcVariant::pf: return "pf";
        case MpcVariant::mf: return "mf";
        default: return "ts";
    }
}

inline MpcVariant mpc_variant_from(const std::string& s) {
    if (s == "opt") return MpcVariant::opt;
    if (s == "pf") return MpcVariant::pf;
    if (s == "mf") return MpcVariant::mf;
    if (s == "ts") return MpcVariant::ts;
    throw std::invalid_argument("unknown mpc variant: " + s);
}

inline const char* to_string(ScenarioSource s) {
    return s == ScenarioSource::historical ? "historical" : "kmeans";
}

inline ScenarioSource scenario_source_from(const std::string& s) {
    if (s == "historical") return ScenarioSource::historical;
    if (s == "kmeans") return ScenarioSource::kmeans;
    throw std::invalid_argument("unknown scenario source: " + s);
}

struct MpcConfig {
    MpcVariant variant = MpcVariant::pf;
    int lookahead_minutes = 480;  // ignored by the one-shot variant
    ScenarioSource scenario_source = ScenarioSource::kmeans;
    ScenarioSet scenario_set;  // used by mf (mean) and ts (all scenarios)
    double gap_tol = 1e-6;
    long node_limit = 50;
    double time_limit = 0.0;  // seconds per solve, 0 disables; node_limit keeps runs deterministic
    DeadbandConfig fallback_band;
};

inline void validate(const MpcConfig& c, const EnvConfig& env) {
    if (c.variant != MpcVariant::opt) {
        if (c.lookahead_minutes < env.block_minutes ||
            c.lookahead_minutes % env.block_minutes != 0)
            throw std::invalid_argument("MpcConfig: lookahead must be a positive block multiple");
    }
    if (c.variant == MpcVariant::ts && c.scenario_set.size() < 2)
        throw std::invalid_argument("MpcConfig: two-stage variant needs at least two scenarios");
    if (c.variant == MpcVariant::mf && c.scenario_set.size() < 1)
        throw std::invalid_argument("MpcConfig: mean-forecast variant needs a scenario set");
    if (c.gap_tol < 0.0) throw std::invalid_argument("MpcConfig: gap_tol must be >= 0");
    if (c.node_limit < 1) throw std::invalid_argument("MpcConfig: node_limit must be >= 1");
    if (c.time_limit < 0.0) throw std::invalid_argument("MpcConfig: time_limit must be >= 0");
}

// A forecast provider maps (episode step, horizon K) to demand slices that
// start at the current minute and hold exactly K entries. Episodes start at
// midnight, so the step index is also the clock window into scenario days.
using ForecastProvider = std::function<ScenarioSet(int minute, int horizon)>;

namespace mpcdetail {

inline DemandTrace slice(const DemandTrace& src, int from, int len, const std::string& label) {
    if (from < 0 || len < 1 || from + len > static_cast<int>(src.gpm.size()))
        throw std::out_of_range("forecast slice [" + std::to_string(from) + ", " +
                                std::to_string(from + len) + ") exceeds the source trace");
    DemandTrace t;
    t.gpm.assign(src.gpm.begin() + from, src.gpm.begin() + from + len);
    t.label = label;
    return t;
}

}  // namespace mpcdetail

// The true evaluation-day demand as the lone scenario.
inline ForecastProvider perfect_forecast(DemandTrace day) {
    return [day = std::move(day)](int minute, int horizon) {
        ScenarioSet s;
        s.traces.push_back(mpcdetail::slice(day, minute, horizon, "pf"));
        s.probs.push_back(1.0);
        return s;
    };
}

// The probability-weighted mean scenario trace as the lone scenario.
inline ForecastProvider mean_forecaster(const ScenarioSet& set) {
    return [mean = mean_forecast(set)](int minute, int horizon) {
        ScenarioSet s;
        s.traces.push_back(mpcdetail::slice(mean, minute, horizon, "mf"));
        s.probs.push_back(1.0);
        return s;
    };
}

// Every scenario day, sliced over the same clock window, probabilities kept.
inline ForecastProvider scenario_forecaster(ScenarioSet set) {
    validate_scenarios(set);
    return [set = std::move(set)](int minute, int horizon) {
        ScenarioSet s;
        s.probs = set.probs;
        s.traces.reserve(set.traces.size());
        for (const DemandTrace& tr : set.traces)
            s.traces.push_back(mpcdetail::slice(tr, minute, horizon, tr.label));
        return s;
    };
}

inline ForecastProvider make_provider(const MpcConfig& cfg, const DemandTrace& evaluation_day) {
    switch (cfg.variant) {
        case MpcVariant::opt:
        case MpcVariant::pf: return perfect_forecast(evaluation_day);
        case MpcVariant::mf: return mean_forecaster(cfg.scenario_set);
        default: return scenario_forecaster(cfg.scenario_set);
    }
}

struct MpcActResult {
    bool on = false;
    MilpStatus status = MilpStatus::limit;
    bool fallback = false;  // no solver schedule available, deadband used
    double solve_seconds = 0.0;
    long nodes = 0;
};

// One receding-horizon step: model the remaining window from the live state
// (temperature, heater flag, downtime history), solve, and return the first
// block's action. A node-limited solve still returns its best schedule; the
// deadband fallback fires only when the solver produced no schedule at all.
inline MpcActResult mpc_act(const EwhState& state, int minute, const MpcConfig& cfg,
                            const ForecastProvider& provider, const EwhParams& params,
                            const PriceSchedule& sched, const EnvConfig& env) {
    validate(cfg, env);
    if (cfg.variant == MpcVariant::opt)
        throw std::invalid_argument("mpc_act: the one-shot variant is driven by mpc_opt");
    if (minute < 0 || minute >= env.episode_minutes || minute % env.block_minutes != 0)
        throw std::invalid_argument("mpc_act: minute must be a block start inside the episode");

    const int horizon = std::min(cfg.lookahead_minutes, env.episode_minutes - minute);
    const ScenarioSet slices = provider(minute, horizon);
    for (const DemandTrace& tr : slices.traces)
        if (static_cast<int>(tr.gpm.size()) != horizon)
            throw std::runtime_error("mpc_act: provider slice length mismatch");

    const MilpModel model = build_model(params, sched, env, slices, horizon, state);
    const MilpSolution sol = solve_bb(model, cfg.gap_tol, cfg.node_limit, cfg.time_limit);

    MpcActResult r;
    r.status = sol.status;
    r.solve_seconds = sol.solve_seconds;
    r.nodes = sol.node_count;
    if (!sol.block_actions.empty()) {
        r.on = sol.block_actions.front() != 0;
    } else {
        r.fallback = true;
        r.on = prdb_act(state, state.minute_of_day, cfg.fallback_band, sched);
        // keep the fallback admissible under the downtime lockout
        if (!state.heater_on && state.minutes_since_off < env.min_downtime_minutes) r.on = false;
    }
    return r;
}

struct MpcStats {
    long solves = 0;
    long optimal = 0;
    long limit = 0;
    long fallbacks = 0;
    long nodes = 0;
    double solve_seconds = 0.0;
};

// Rollout-compatible functor; all cross-block state lives in the trajectory
// itself, the controller only accumulates diagnostics.
class MpcController {
  public:
    MpcController(MpcConfig cfg, ForecastProvider provider, EwhParams params, PriceSchedule sched,
                  EnvConfig env)
        : cfg_(std::move(cfg)),
          provider_(std::move(provider)),
          params_(params),
          sched_(sched),
          env_(env) {
        validate(cfg_, env_);
        if (cfg_.variant == MpcVariant::opt)
            throw std::invalid_argument("MpcController: the one-shot variant is driven by mpc_opt");
    }

    bool operator()(const EwhState& s, int minute, double) {
        const MpcActResult r = mpc_act(s, minute, cfg_, provider_, params_, sched_, env_);
        ++stats_.solves;
        if (r.status == MilpStatus::optimal)
            ++stats_.optimal;
        else if (r.status == MilpStatus::limit)
            ++stats_.limit;
        if (r.fallback) ++stats_.fallbacks;
        stats_.nodes += r.nodes;
        stats_.solve_seconds += r.solve_seconds;
        commands_.push_back(r.on ? 1 : 0);
        return r.on;
    }

    const MpcStats& stats() const { return stats_; }
    // commanded first-block actions, one per solve; a whole-episode run makes
    // this a complete block schedule usable as a warm start elsewhere
    const std::vector<std::uint8_t>& commands() const { return commands_; }

  private:
    MpcConfig cfg_;
    ForecastProvider provider_;
    EwhParams params_;
    PriceSchedule sched_;
    EnvConfig env_;
    MpcStats stats_;
    std::vector<std::uint8_t> commands_;
};

struct MpcOptResult {
    MilpSolution solution;
    Trajectory trajectory;
    double replay_cost = 0.0;
};

// Whole-episode schedule from a single solve with the true day as the lone
// scenario, then replayed open-loop through the simulator. The replayed cost
// must equal the solver objective to within accumulation noise, and it
// lower-bounds every controller on the same day. Block schedules produced by
// other controllers can be handed in as warm starts; the returned schedule
// is then at least as good as every feasible one of them.
inline MpcOptResult mpc_opt(const DemandTrace& day, const EwhParams& params,
                            const PriceSchedule& sched, const EnvConfig& env,
                            const EwhState& initial, double gap_tol = 1e-6,
                            long node_limit = 3000, double time_limit = 0.0,
                            std::vector<std::vector<std::uint8_t>> warm_starts = {}) {
    ScenarioSet lone;
    lone.traces.push_back(mpcdetail::slice(day, 0, env.episode_minutes, day.label));
    lone.probs.push_back(1.0);
    const MilpModel model = build_model(params, sched, env, lone, env.episode_minutes, initial);
    MpcOptResult out;
    BbOptions opts;
    opts.gap_tol = gap_tol;
    opts.node_limit = node_limit;
    opts.time_limit_seconds = time_limit;
    opts.dp_grid = 0.001;  // the one-shot solve is rare, spend more on seed quality
    opts.extra_seeds = std::move(warm_starts);
    out.solution = solve_bb(model, opts);
    if (out.solution.block_actions.empty())
        throw std::runtime_error("mpc_opt: solver returned no schedule");

    const auto replay = [&](const EwhState&, int minute, double) {
        return out.solution.block_actions[static_cast<std::size_t>(minute / env.block_minutes)] !=
               0;
    };
    out.trajectory = rollout(replay, day, params, sched, env, initial);
    out.replay_cost = trajectory_cost(out.trajectory);
    return out;
}

struct SweepCell {
    MpcVariant variant = MpcVariant::pf;
    ScenarioSource source = ScenarioSource::kmeans;
    int lookahead_minutes = 0;
    int day_index = 0;
    double cost = 0.0;
    double mean_action_seconds = 0.0;
    long fallbacks = 0;
};

inline double mean_action_seconds(const Trajectory& t) {
    if (t.action_seconds.empty()) return 0.0;
    double total = 0.0;
    for (double s : t.action_seconds) total += s;
    return total / static_cast<double>(t.action_seconds.size());
}

// Cost matrix over (variant, lookahead, day). The one-shot variant ignores
// the lookahead list and contributes one whole-episode cell per day whose
// action time is its single solve. Cells are independent, so they run
// through parallel_for; costs are deterministic, only timings vary.
inline std::vector<SweepCell> horizon_sweep(const std::vector<DemandTrace>& days,
                                            const std::vector<MpcVariant>& variants,
                                            const std::vector<int>& lookaheads,
                                            const ScenarioSet& scenarios, ScenarioSource source,
                                            const EwhParams& params, const PriceSchedule& sched,
                                            const EnvConfig& env, double gap_tol = 1e-6,
                                            long node_limit = 50, long opt_node_limit = 3000,
                                            unsigned workers = 0) {
    struct Job {
        MpcVariant variant;
        int lookahead;
        int day;
    };
    std::vector<Job> jobs;
    for (MpcVariant v : variants) {
        if (v == MpcVariant::opt) {
            for (int d = 0; d < static_cast<int>(days.size()); ++d)
                jobs.push_back({v, env.episode_minutes, d});
            continue;
        }
        for (int la : lookaheads)
            for (int d = 0; d < static_cast<int>(days.size()); ++d) jobs.push_back({v, la, d});
    }

    std::vector<SweepCell> cells(jobs.size());
    parallel_for(
        jobs.size(),
        [&](std::size_t j) {
            const Job& job = jobs[j];
            const DemandTrace& day = days[static_cast<std::size_t>(job.day)];
            SweepCell cell;
            cell.variant = job.variant;
            cell.source = source;
            cell.lookahead_minutes = job.lookahead;
            cell.day_index = job.day;
            const EwhState init = initial_state(params, env);
            if (job.variant == MpcVariant::opt) {
                const MpcOptResult r =
                    mpc_opt(day, params, sched, env, init, gap_tol, opt_node_limit);
                cell.cost = r.replay_cost;
                cell.mean_action_seconds = r.solution.solve_seconds;
            } else {
                MpcConfig cfg;
                cfg.variant = job.variant;
                cfg.lookahead_minutes = job.lookahead;
                cfg.scenario_source = source;
                cfg.scenario_set = scenarios;
                cfg.gap_tol = gap_tol;
                cfg.node_limit = node_limit;
                MpcController ctrl(cfg, make_provider(cfg, day), params, sched, env);
                const Trajectory t = rollout(ctrl, day, params, sched, env, init);
                cell.cost = trajectory_cost(t);
                cell.mean_action_seconds = mean_action_seconds(t);
                cell.fallbacks = ctrl.stats().fallbacks;
            }
            cells[j] = cell;
        },
        workers);
    return cells;
}

inline std::string sweep_csv(const std::vector<SweepCell>& cells) {
    std::string out = "variant,source,lookahead_min,day,cost,mean_action_seconds,fallbacks\n";
    for (const SweepCell& c : cells) {
        out += to_string(c.variant);
        out += ',';
        out += to_string(c.source);
        out += ',';
        out += std::to_string(c.lookahead_minutes);
        out += ',';
        out += std::to_string(c.day_index);
        out += ',';
        out += format_double(c.cost);
        out += ',';
        out += format_double(c.mean_action_seconds);
        out += ',';
        out += std::to_string(c.fallbacks);
        out += '\n';
    }
    return out;
}

}  // namespace ewhbench
