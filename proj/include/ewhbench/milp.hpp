#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ewhbench/csv.hpp"
#include "ewhbench/demand.hpp"
#include "ewhbench/ewh.hpp"
#include "ewhbench/lp.hpp"

namespace ewhbench {

enum class MilpStatus { optimal, infeasible, limit };

inline const char* to_string(MilpStatus s) {
    switch (s) {
        case MilpStatus::optimal: return "optimal";
        case MilpStatus::infeasible: return "infeasible";
        default: return "limit";
    }
}

// Two-stage stochastic control model over a K-minute horizon: one on/off
// binary per control block shared by all scenarios, per-scenario temperature
// recursions, comfort slacks, switch-off indicators, and a minute-level
// minimum-downtime window that also covers switch-offs from before the
// horizon. Columns: y (blocks), z (minutes), p (minutes), then per scenario
// the temperatures t and comfort slacks tc. Rows: dynamics equalities,
// comfort floors, switch links, downtime windows, and the two power links
// that pin p to rated-power-times-y.
struct MilpModel {
    EwhParams params;
    PriceSchedule schedule;
    int horizon_minutes = 0;
    int block_minutes = 0;
    int min_downtime = 0;
    int num_blocks = 0;
    int start_minute = 0;
    double initial_temp = 0.0;
    bool initial_on = false;
    std::vector<std::uint8_t> recent_off;  // [s-1] nonzero: switch-off s minutes ago
    std::vector<double> probs;
    std::vector<std::vector<double>> demand_gph;  // [scenario][minute]
    std::vector<double> price;                    // [minute]
    // Per-scenario per-minute linear dynamics: t' = decay*t + power_gain*p + drift.
    std::vector<std::vector<double>> decay, power_gain, drift;
    SparseLp lp;

    int num_scenarios() const { return static_cast<int>(probs.size()); }
    int block_of(int k) const { return k / block_minutes; }

    int y_col(int b) const { return b; }
    int z_col(int k) const { return num_blocks + k; }
    int p_col(int k) const { return num_blocks + horizon_minutes + k; }
    // temperature after minute k, so j runs 1..K
    int t_col(int n, int j) const {
        return num_blocks + 2 * horizon_minutes + n * horizon_minutes + (j - 1);
    }
    int tc_col(int n, int k) const {
        return num_blocks + 2 * horizon_minutes + num_scenarios() * horizon_minutes +
               n * horizon_minutes + k;
    }

    int dyn_row(int n, int k) const { return n * horizon_minutes + k; }
    int comfort_row(int n, int k) const {
        return num_scenarios() * horizon_minutes + n * horizon_minutes + k;
    }
    int zlink_row(int k) const { return 2 * num_scenarios() * horizon_minutes + k; }
    int downtime_row(int k) const {
        return 2 * num_scenarios() * horizon_minutes + horizon_minutes + k;
    }
    int big_row(int k) const {
        return 2 * num_scenarios() * horizon_minutes + 2 * horizon_minutes + k;
    }
    int low_row(int k) const {
        return 2 * num_scenarios() * horizon_minutes + 3 * horizon_minutes + k;
    }

    // Count of pre-horizon switch-offs still inside the downtime window of
    // minute k. recent_off[s-1] marks a switch-off s minutes before k=0.
    int zbar_sum(int k) const {
        int total = 0;
        const int max_s = min_downtime - 1 - k;
        for (int s = 1; s <= max_s && s <= static_cast<int>(recent_off.size()); ++s)
            total += recent_off[static_cast<std::size_t>(s - 1)] ? 1 : 0;
        return total;
    }
};

// Switch-off history encoded from a live state: if the heater is off and
// still inside its downtime window, the switch-off happened
// minutes_since_off ago.
inline std::vector<std::uint8_t> recent_switch_off(const EwhState& s, const EnvConfig& cfg) {
    std::vector<std::uint8_t> out(
        cfg.min_downtime_minutes > 0 ? static_cast<std::size_t>(cfg.min_downtime_minutes - 1) : 0,
        0);
    if (!s.heater_on && s.minutes_since_off >= 1 &&
        s.minutes_since_off < cfg.min_downtime_minutes)
        out[static_cast<std::size_t>(s.minutes_since_off - 1)] = 1;
    return out;
}

inline MilpModel build_model(const EwhParams& params, const PriceSchedule& schedule,
                             const EnvConfig& config, const ScenarioSet& scenarios,
                             int horizon_minutes, const EwhState& initial,
                             const std::vector<std::uint8_t>& recent_off) {
    validate(params);
    validate(schedule);
    validate(config);
    if (horizon_minutes <= 0) throw std::invalid_argument("build_model: empty horizon");
    if (horizon_minutes % config.block_minutes != 0)
        throw std::invalid_argument("build_model: horizon not a whole number of blocks");
    const int N = scenarios.size();
    if (N < 1 || static_cast<int>(scenarios.probs.size()) != N)
        throw std::invalid_argument("build_model: bad scenario set");
    for (const DemandTrace& tr : scenarios.traces)
        if (static_cast<int>(tr.gpm.size()) < horizon_minutes)
            throw std::invalid_argument("build_model: scenario shorter than the horizon");

    MilpModel m;
    m.params = params;
    m.schedule = schedule;
    m.horizon_minutes = horizon_minutes;
    m.block_minutes = config.block_minutes;
    m.min_downtime = config.min_downtime_minutes;
    m.num_blocks = horizon_minutes / config.block_minutes;
    m.start_minute = initial.minute_of_day;
    m.initial_temp = initial.temp_f;
    m.initial_on = initial.heater_on;
    m.recent_off = recent_off;
    m.probs = scenarios.probs;

    const int K = horizon_minutes;
    m.demand_gph.assign(static_cast<std::size_t>(N), {});
    m.decay.assign(static_cast<std::size_t>(N), {});
    m.power_gain.assign(static_cast<std::size_t>(N), {});
    m.drift.assign(static_cast<std::size_t>(N), {});
    m.price.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
        m.price[static_cast<std::size_t>(k)] =
            price_rate((m.start_minute + k) % kMinutesPerDay, schedule);

    const double dt_hr = params.dt_minutes / 60.0;
    for (int n = 0; n < N; ++n) {
        auto& dem = m.demand_gph[static_cast<std::size_t>(n)];
        auto& dec = m.decay[static_cast<std::size_t>(n)];
        auto& pg = m.power_gain[static_cast<std::size_t>(n)];
        auto& dr = m.drift[static_cast<std::size_t>(n)];
        dem.resize(static_cast<std::size_t>(K));
        dec.resize(static_cast<std::size_t>(K));
        pg.resize(static_cast<std::size_t>(K));
        dr.resize(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            const double gpm = scenarios.traces[static_cast<std::size_t>(n)]
                                   .gpm[static_cast<std::size_t>(k)];
            if (!(gpm >= 0.0))
                throw std::invalid_argument("build_model: negative or NaN demand");
            const double gph = 60.0 * gpm;
            const double b = 8.34 * gph;
            const double rprime = 1.0 / (params.shell_conductance + b);
            const double decay = std::exp(-dt_hr / (rprime * params.thermal_capacity));
            dem[static_cast<std::size_t>(k)] = gph;
            dec[static_cast<std::size_t>(k)] = decay;
            pg[static_cast<std::size_t>(k)] = (1.0 - decay) * (rprime * 3412.14);
            dr[static_cast<std::size_t>(k)] =
                (1.0 - decay) * (rprime * params.shell_conductance * params.ambient_temp_f +
                                 rprime * params.inlet_temp_f * b);
        }
    }

    // Assemble the sparse LP with binaries already relaxed to [0,1].
    SparseLp& lp = m.lp;
    lp.num_cols = m.num_blocks + 2 * K + 2 * N * K;
    lp.num_rows = 2 * N * K + 4 * K;
    lp.objective.assign(static_cast<std::size_t>(lp.num_cols), 0.0);
    lp.col_lower.assign(static_cast<std::size_t>(lp.num_cols), 0.0);
    lp.col_upper.assign(static_cast<std::size_t>(lp.num_cols), 0.0);
    lp.row_lower.assign(static_cast<std::size_t>(lp.num_rows), -kInf);
    lp.row_upper.assign(static_cast<std::size_t>(lp.num_rows), kInf);

    for (int b = 0; b < m.num_blocks; ++b)
        lp.col_upper[static_cast<std::size_t>(m.y_col(b))] = 1.0;
    for (int k = 0; k < K; ++k) {
        lp.col_upper[static_cast<std::size_t>(m.z_col(k))] = 1.0;
        lp.col_upper[static_cast<std::size_t>(m.p_col(k))] = params.rated_power_kw;
        lp.objective[static_cast<std::size_t>(m.p_col(k))] = m.price[static_cast<std::size_t>(k)];
    }
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            lp.col_upper[static_cast<std::size_t>(m.t_col(n, k + 1))] = params.temp_upper_f;
            lp.col_upper[static_cast<std::size_t>(m.tc_col(n, k))] = params.temp_lower_f;
            lp.objective[static_cast<std::size_t>(m.tc_col(n, k))] =
                m.probs[static_cast<std::size_t>(n)] * schedule.discomfort_rate *
                (m.demand_gph[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] / 60.0);
        }
    }

    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            const int row = m.dyn_row(n, k);
            lp.add_entry(row, m.t_col(n, k + 1), 1.0);
            lp.add_entry(row, m.p_col(k),
                         -m.power_gain[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)]);
            double rhs = m.drift[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
            if (k == 0)
                rhs += m.decay[static_cast<std::size_t>(n)][0] * m.initial_temp;
            else
                lp.add_entry(row, m.t_col(n, k),
                             -m.decay[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)]);
            lp.row_lower[static_cast<std::size_t>(row)] = rhs;
            lp.row_upper[static_cast<std::size_t>(row)] = rhs;
        }
        for (int k = 0; k < K; ++k) {
            const int row = m.comfort_row(n, k);
            lp.add_entry(row, m.t_col(n, k + 1), 1.0);
            lp.add_entry(row, m.tc_col(n, k), 1.0);
            lp.row_lower[static_cast<std::size_t>(row)] = params.temp_lower_f;
        }
    }
    for (int k = 0; k < K; ++k) {
        const int row = m.zlink_row(k);
        lp.add_entry(row, m.z_col(k), 1.0);
        if (k == 0) {
            lp.add_entry(row, m.y_col(0), 1.0);
            lp.row_lower[static_cast<std::size_t>(row)] = m.initial_on ? 1.0 : 0.0;
        } else {
            const int b = m.block_of(k);
            const int bp = m.block_of(k - 1);
            if (b != bp) {
                lp.add_entry(row, m.y_col(b), 1.0);
                lp.add_entry(row, m.y_col(bp), -1.0);
            }
            lp.row_lower[static_cast<std::size_t>(row)] = 0.0;
        }
    }
    for (int k = 0; k < K; ++k) {
        const int row = m.downtime_row(k);
        lp.add_entry(row, m.y_col(m.block_of(k)), 1.0);
        for (int i = std::max(0, k - m.min_downtime + 1); i <= k - 1; ++i)
            lp.add_entry(row, m.z_col(i), 1.0);
        lp.row_upper[static_cast<std::size_t>(row)] = 1.0 - m.zbar_sum(k);
    }
    for (int k = 0; k < K; ++k) {
        lp.add_entry(m.big_row(k), m.p_col(k), 1.0);
        lp.add_entry(m.big_row(k), m.y_col(m.block_of(k)), -params.rated_power_kw);
        lp.row_upper[static_cast<std::size_t>(m.big_row(k))] = 0.0;
        lp.add_entry(m.low_row(k), m.y_col(m.block_of(k)), params.rated_power_kw);
        lp.add_entry(m.low_row(k), m.p_col(k), -1.0);
        lp.row_upper[static_cast<std::size_t>(m.low_row(k))] = 0.0;
    }
    validate(lp);
    return m;
}

inline MilpModel build_model(const EwhParams& params, const PriceSchedule& schedule,
                             const EnvConfig& config, const ScenarioSet& scenarios,
                             int horizon_minutes, const EwhState& initial) {
    return build_model(params, schedule, config, scenarios, horizon_minutes, initial,
                       recent_switch_off(initial, config));
}

// Exact objective of a block schedule: the simulator recursion and reward,
// probability-weighted across scenarios. This is the arithmetic bridge that
// keeps the solver and the environment on one code path.
struct IntegerEval {
    double objective = 0.0;
    bool ceiling_ok = true;
    std::vector<std::vector<double>> temps;   // [scenario][minute], post-step
    std::vector<std::vector<double>> slacks;  // [scenario][minute], cold-water gap
};

inline IntegerEval integer_eval(const MilpModel& m, const std::vector<std::uint8_t>& actions) {
    if (static_cast<int>(actions.size()) != m.num_blocks)
        throw std::invalid_argument("integer_eval: one action per block required");
    const int K = m.horizon_minutes;
    const int N = m.num_scenarios();
    IntegerEval ev;
    ev.temps.assign(static_cast<std::size_t>(N), {});
    ev.slacks.assign(static_cast<std::size_t>(N), {});
    double expected = 0.0;
    for (int n = 0; n < N; ++n) {
        auto& temps = ev.temps[static_cast<std::size_t>(n)];
        auto& slacks = ev.slacks[static_cast<std::size_t>(n)];
        temps.reserve(static_cast<std::size_t>(K));
        slacks.reserve(static_cast<std::size_t>(K));
        double temp = m.initial_temp;
        double reward_sum = 0.0;
        for (int k = 0; k < K; ++k) {
            const bool on = actions[static_cast<std::size_t>(m.block_of(k))] != 0;
            const double power = on ? m.params.rated_power_kw : 0.0;
            const double gph =
                m.demand_gph[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
            const double next = thermal_step(temp, power, gph, m.params);
            if (next > m.params.temp_upper_f + 1e-9) ev.ceiling_ok = false;
            EwhState st;
            st.temp_f = next;
            st.cold_temp_f = std::max(0.0, m.params.temp_lower_f - next);
            reward_sum += step_reward(st, power, gph / 60.0, m.schedule,
                                      (m.start_minute + k) % kMinutesPerDay);
            temps.push_back(next);
            slacks.push_back(st.cold_temp_f);
            temp = next;
        }
        expected += m.probs[static_cast<std::size_t>(n)] * (-reward_sum);
    }
    ev.objective = expected;
    return ev;
}

// Objective-only variant of integer_eval for hot paths; identical arithmetic
// and summation order, no trajectory capture.
struct PatternScore {
    double objective = 0.0;
    bool ceiling_ok = true;
};

inline PatternScore integer_objective(const MilpModel& m,
                                      const std::vector<std::uint8_t>& actions) {
    const int K = m.horizon_minutes;
    const int N = m.num_scenarios();
    PatternScore sc;
    double expected = 0.0;
    for (int n = 0; n < N; ++n) {
        double temp = m.initial_temp;
        double reward_sum = 0.0;
        for (int k = 0; k < K; ++k) {
            const bool on = actions[static_cast<std::size_t>(m.block_of(k))] != 0;
            const double power = on ? m.params.rated_power_kw : 0.0;
            const double gph =
                m.demand_gph[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
            const double next = thermal_step(temp, power, gph, m.params);
            if (next > m.params.temp_upper_f + 1e-9) sc.ceiling_ok = false;
            EwhState st;
            st.temp_f = next;
            st.cold_temp_f = std::max(0.0, m.params.temp_lower_f - next);
            reward_sum += step_reward(st, power, gph / 60.0, m.schedule,
                                      (m.start_minute + k) % kMinutesPerDay);
            temp = next;
        }
        expected += m.probs[static_cast<std::size_t>(n)] * (-reward_sum);
    }
    sc.objective = expected;
    return sc;
}

// Minute-level downtime scan of a block schedule, including pre-horizon
// switch-offs. Mirrors the model's window rows exactly.
inline bool downtime_feasible(const MilpModel& m, const std::vector<std::uint8_t>& actions) {
    if (static_cast<int>(actions.size()) != m.num_blocks) return false;
    const int K = m.horizon_minutes;
    int window = 0;  // count of z's inside [k - DT + 1, k - 1]
    std::vector<std::uint8_t> z(static_cast<std::size_t>(K), 0);
    for (int k = 0; k < K; ++k) {
        const bool on = actions[static_cast<std::size_t>(m.block_of(k))] != 0;
        const bool prev_on =
            k == 0 ? m.initial_on : actions[static_cast<std::size_t>(m.block_of(k - 1))] != 0;
        z[static_cast<std::size_t>(k)] = (prev_on && !on) ? 1 : 0;
        if (k >= 1) window += z[static_cast<std::size_t>(k - 1)];
        const int drop = k - m.min_downtime;  // z index leaving the window
        if (drop >= 0) window -= z[static_cast<std::size_t>(drop)];
        if ((on ? 1 : 0) + window + m.zbar_sum(k) > 1) return false;
    }
    return true;
}

namespace milpdetail {

// Blocks pinned off by pre-horizon switch-offs: any block containing a
// minute whose downtime window still holds a prior switch-off.
inline std::vector<std::uint8_t> forced_off_blocks(const MilpModel& m) {
    std::vector<std::uint8_t> off(static_cast<std::size_t>(m.num_blocks), 0);
    for (int k = 0; k < m.horizon_minutes; ++k)
        if (m.zbar_sum(k) >= 1) off[static_cast<std::size_t>(m.block_of(k))] = 1;
    return off;
}

// Recursion temperatures of a pattern; returns false as soon as any scenario
// breaches the safety cap. Heating is monotone, so a breach under a pattern
// implies a breach under every pattern that is pointwise >= it.
inline bool ceiling_ok(const MilpModel& m, const std::vector<std::uint8_t>& actions) {
    const int K = m.horizon_minutes;
    for (int n = 0; n < m.num_scenarios(); ++n) {
        double temp = m.initial_temp;
        for (int k = 0; k < K; ++k) {
            const bool on = actions[static_cast<std::size_t>(m.block_of(k))] != 0;
            temp = thermal_step(temp, on ? m.params.rated_power_kw : 0.0,
                                m.demand_gph[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)],
                                m.params);
            if (temp > m.params.temp_upper_f + 1e-9) return false;
        }
    }
    return true;
}

// Feasible starting basis for a node whose free binaries are taken off: the
// temperature chain is basic in the dynamics rows, comfort rows carry either
// the slack (when the recursion dips under the floor) or their logical, and
// switch minutes carry z. Triangular by construction, so the first
// factorization strips it without a bump.
inline BasisHint crash_basis(const MilpModel& m, const std::vector<std::uint8_t>& pattern) {
    const int K = m.horizon_minutes;
    const int N = m.num_scenarios();
    BasisHint hint;
    hint.basic.assign(static_cast<std::size_t>(m.lp.num_rows), -1);
    hint.at_upper.assign(static_cast<std::size_t>(m.lp.num_cols + m.lp.num_rows), 0);
    const auto logical = [&](int row) { return m.lp.num_cols + row; };

    for (int n = 0; n < N; ++n) {
        double temp = m.initial_temp;
        for (int k = 0; k < K; ++k) {
            const bool on = pattern[static_cast<std::size_t>(m.block_of(k))] != 0;
            temp = thermal_step(temp, on ? m.params.rated_power_kw : 0.0,
                                m.demand_gph[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)],
                                m.params);
            hint.basic[static_cast<std::size_t>(m.dyn_row(n, k))] = m.t_col(n, k + 1);
            hint.basic[static_cast<std::size_t>(m.comfort_row(n, k))] =
                temp < m.params.temp_lower_f ? m.tc_col(n, k) : logical(m.comfort_row(n, k));
        }
    }
    for (int k = 0; k < K; ++k) {
        const bool on = pattern[static_cast<std::size_t>(m.block_of(k))] != 0;
        const bool prev_on =
            k == 0 ? m.initial_on : pattern[static_cast<std::size_t>(m.block_of(k - 1))] != 0;
        hint.basic[static_cast<std::size_t>(m.zlink_row(k))] =
            (prev_on && !on) ? m.z_col(k) : logical(m.zlink_row(k));
        hint.basic[static_cast<std::size_t>(m.downtime_row(k))] = logical(m.downtime_row(k));
        hint.basic[static_cast<std::size_t>(m.big_row(k))] = logical(m.big_row(k));
        hint.basic[static_cast<std::size_t>(m.low_row(k))] = logical(m.low_row(k));
        if (on) hint.at_upper[static_cast<std::size_t>(m.p_col(k))] = 1;
    }
    // on-blocks ride the binary's upper bound so the power links start tight
    for (int b = 0; b < m.num_blocks; ++b)
        if (pattern[static_cast<std::size_t>(b)] != 0)
            hint.at_upper[static_cast<std::size_t>(m.y_col(b))] = 1;
    return hint;
}

}  // namespace milpdetail

struct LpRelaxResult {
    LpStatus status = LpStatus::iteration_limit;
    double bound = 0.0;
    std::vector<double> y;  // per block, in [0,1]
    LpSolution solution;
};

inline LpRelaxResult lp_relax_solve(const MilpModel& m, const SimplexOptions& options = {}) {
    std::vector<std::uint8_t> all_off(static_cast<std::size_t>(m.num_blocks), 0);
    const BasisHint hint = milpdetail::crash_basis(m, all_off);
    LpRelaxResult res;
    res.solution = solve_lp(m.lp, options, &hint);
    res.status = res.solution.status;
    res.bound = res.solution.objective;
    res.y.resize(static_cast<std::size_t>(m.num_blocks));
    for (int b = 0; b < m.num_blocks; ++b)
        res.y[static_cast<std::size_t>(b)] =
            std::clamp(res.solution.x[static_cast<std::size_t>(m.y_col(b))], 0.0, 1.0);
    return res;
}

// Rounds a fractional block schedule and strips blocks until it clears the
// downtime window and the safety cap. Each pass only turns blocks off, so it
// terminates at all-off in the worst case.
inline std::vector<std::uint8_t> round_and_repair(const MilpModel& m,
                                                  const std::vector<double>& fractional_y) {
    std::vector<std::uint8_t> y(static_cast<std::size_t>(m.num_blocks), 0);
    for (int b = 0; b < m.num_blocks; ++b)
        y[static_cast<std::size_t>(b)] =
            fractional_y[static_cast<std::size_t>(b)] >= 0.5 ? 1 : 0;
    const std::vector<std::uint8_t> forced = milpdetail::forced_off_blocks(m);
    for (int b = 0; b < m.num_blocks; ++b)
        if (forced[static_cast<std::size_t>(b)]) y[static_cast<std::size_t>(b)] = 0;
    for (int pass = 0; pass <= m.num_blocks; ++pass) {
        bool changed = false;
        while (!downtime_feasible(m, y)) {
            // Drop the latest on-block; every drop shortens the schedule.
            int last_on = -1;
            for (int b = 0; b < m.num_blocks; ++b)
                if (y[static_cast<std::size_t>(b)]) last_on = b;
            if (last_on < 0) break;
            y[static_cast<std::size_t>(last_on)] = 0;
            changed = true;
        }
        int hot_block = -1;
        for (int n = 0; n < m.num_scenarios() && hot_block < 0; ++n) {
            double temp = m.initial_temp;
            for (int k = 0; k < m.horizon_minutes; ++k) {
                const bool on = y[static_cast<std::size_t>(m.block_of(k))] != 0;
                temp = thermal_step(
                    temp, on ? m.params.rated_power_kw : 0.0,
                    m.demand_gph[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)],
                    m.params);
                if (on && temp > m.params.temp_upper_f + 1e-9) {
                    hot_block = m.block_of(k);
                    break;
                }
            }
        }
        if (hot_block >= 0) {
            y[static_cast<std::size_t>(hot_block)] = 0;
            changed = true;
        }
        if (!changed) break;
    }
    return y;
}

struct MilpSolution {
    MilpStatus status = MilpStatus::limit;
    double objective = 0.0;
    std::vector<std::uint8_t> block_actions;
    std::vector<std::vector<double>> temps;
    std::vector<std::vector<double>> slacks;
    double best_bound = -kInf;
    long node_count = 0;
    double solve_seconds = 0.0;
};

inline nlohmann::json to_json(const MilpSolution& s) {
    nlohmann::json j;
    j["status"] = to_string(s.status);
    j["objective"] = s.objective;
    j["block_actions"] = s.block_actions;
    j["node_count"] = s.node_count;
    j["solve_seconds"] = s.solve_seconds;
    j["best_bound"] = s.best_bound;
    return j;
}

inline void save_solution(const MilpSolution& s, const std::string& path) {
    write_text_file(path, to_json(s).dump(2) + "\n");
}

namespace milpdetail {

struct BbNode {
    double bound = -kInf;
    int depth = 0;
    long seq = 0;
    std::vector<std::int8_t> fix;  // per block: -1 free, 0, 1
};

struct BbNodeWorse {
    bool operator()(const BbNode& a, const BbNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.seq > b.seq;
    }
};

// Hysteresis schedule against the scenario fan: heat a block whenever the
// coldest scenario is within `margin` of the comfort floor, honoring the
// downtime window and the safety cap. A realistic primal start for the tree.
inline std::vector<std::uint8_t> deadband_pattern(const MilpModel& m, double margin,
                                                  const std::vector<std::uint8_t>& forced) {
    const int N = m.num_scenarios();
    std::vector<double> temp(static_cast<std::size_t>(N), m.initial_temp);
    std::vector<std::uint8_t> y(static_cast<std::size_t>(m.num_blocks), 0);
    bool prev_on = m.initial_on;
    int mso = m.min_downtime;  // minutes since the last switch-off
    if (!m.initial_on)
        for (std::size_t s = 0; s < m.recent_off.size(); ++s)
            if (m.recent_off[s]) mso = static_cast<int>(s) + 1;

    for (int b = 0; b < m.num_blocks; ++b) {
        double coldest = kInf;
        for (int n = 0; n < N; ++n) coldest = std::min(coldest, temp[static_cast<std::size_t>(n)]);
        bool on = coldest <= m.params.temp_lower_f + margin;
        if (on && !prev_on && mso < m.min_downtime) on = false;
        if (forced[static_cast<std::size_t>(b)]) on = false;
        if (on) {
            // refuse blocks that would breach the cap in any scenario
            for (int n = 0; n < N && on; ++n) {
                double t = temp[static_cast<std::size_t>(n)];
                for (int k = b * m.block_minutes; k < (b + 1) * m.block_minutes; ++k) {
                    t = thermal_step(t, m.params.rated_power_kw,
                                     m.demand_gph[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)],
                                     m.params);
                    if (t > m.params.temp_upper_f + 1e-9) {
                        on = false;
                        break;
                    }
                }
            }
        }
        for (int n = 0; n < N; ++n) {
            double t = temp[static_cast<std::size_t>(n)];
            for (int k = b * m.block_minutes; k < (b + 1) * m.block_minutes; ++k)
                t = thermal_step(t, on ? m.params.rated_power_kw : 0.0,
                                 m.demand_gph[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)],
                                 m.params);
            temp[static_cast<std::size_t>(n)] = t;
        }
        y[static_cast<std::size_t>(b)] = on ? 1 : 0;
        if (on) {
            mso = 0;
        } else {
            mso = prev_on ? m.block_minutes
                          : std::min(m.min_downtime, mso + m.block_minutes);
        }
        prev_on = on;
    }
    return y;
}

// Backward dynamic program over block decisions for a single scenario,
// on a temperature grid with a minutes-since-switch-off counter. Purely a
// primal candidate generator: the relaxation bounds never touch it, and
// every pattern it emits is re-scored through the exact recursion before
// it can become an incumbent. Grid coarseness only costs candidate
// quality, never correctness.
inline std::vector<std::uint8_t> dp_pattern_trace(const MilpModel& m,
                                                  const std::vector<double>& gph,
                                                  double grid_step = 0.01) {
    const int B = m.num_blocks;
    const int bm = m.block_minutes;
    const int dt = m.min_downtime;

    const double t_lo = std::min(m.params.inlet_temp_f, m.initial_temp) - 1.0;
    const double t_hi = m.params.temp_upper_f + 0.7;
    const int G = static_cast<int>((t_hi - t_lo) / grid_step) + 2;
    const int S = dt + 1;  // minutes since switch-off, saturated at dt

    // value planes and the action table; V[g*S + s]
    std::vector<double> vnext(static_cast<std::size_t>(G * S), 0.0);
    std::vector<double> vcur(static_cast<std::size_t>(G * S));
    std::vector<std::uint8_t> act(static_cast<std::size_t>(B) * static_cast<std::size_t>(G * S));

    std::vector<double> end_t(static_cast<std::size_t>(G * 2));
    std::vector<double> run_c(static_cast<std::size_t>(G * 2));
    std::vector<std::uint8_t> run_ok(static_cast<std::size_t>(G * 2));

    const auto interp = [&](const std::vector<double>& v, double t, int s) {
        double pos = (t - t_lo) / grid_step;
        if (pos < 0.0) pos = 0.0;
        if (pos > G - 1.0) pos = G - 1.0;
        const int i0 = static_cast<int>(pos);
        const int i1 = std::min(i0 + 1, G - 1);
        const double w = pos - i0;
        return v[static_cast<std::size_t>(i0 * S + s)] * (1.0 - w) +
               v[static_cast<std::size_t>(i1 * S + s)] * w;
    };

    for (int b = B - 1; b >= 0; --b) {
        // block simulation is independent of the downtime counter
        for (int gi = 0; gi < G; ++gi) {
            for (int a = 0; a <= 1; ++a) {
                double t = t_lo + gi * grid_step;
                double c = 0.0;
                bool ok = true;
                for (int j = 0; j < bm; ++j) {
                    const int k = b * bm + j;
                    t = thermal_step(t, a ? m.params.rated_power_kw : 0.0,
                                     gph[static_cast<std::size_t>(k)], m.params);
                    if (a && t > m.params.temp_upper_f + 1e-9) {
                        ok = false;
                        break;
                    }
                    c += m.price[static_cast<std::size_t>(k)] *
                         (a ? m.params.rated_power_kw : 0.0);
                    const double cold =
                        t < m.params.temp_lower_f ? m.params.temp_lower_f - t : 0.0;
                    c += m.schedule.discomfort_rate *
                         (gph[static_cast<std::size_t>(k)] / 60.0) * cold;
                }
                end_t[static_cast<std::size_t>(gi * 2 + a)] = t;
                run_c[static_cast<std::size_t>(gi * 2 + a)] = c;
                run_ok[static_cast<std::size_t>(gi * 2 + a)] = ok ? 1 : 0;
            }
        }
        for (int gi = 0; gi < G; ++gi) {
            for (int s = 0; s < S; ++s) {
                double best = run_c[static_cast<std::size_t>(gi * 2)] +
                              interp(vnext, end_t[static_cast<std::size_t>(gi * 2)],
                                     std::min(dt, s + bm));
                std::uint8_t besta = 0;
                const bool can_on = s == 0 || s >= dt;
                if (can_on && run_ok[static_cast<std::size_t>(gi * 2 + 1)]) {
                    const double von =
                        run_c[static_cast<std::size_t>(gi * 2 + 1)] +
                        interp(vnext, end_t[static_cast<std::size_t>(gi * 2 + 1)], 0);
                    if (von < best) {
                        best = von;
                        besta = 1;
                    }
                }
                vcur[static_cast<std::size_t>(gi * S + s)] = best;
                act[static_cast<std::size_t>(b) * static_cast<std::size_t>(G * S) +
                    static_cast<std::size_t>(gi * S + s)] = besta;
            }
        }
        std::swap(vcur, vnext);
    }

    // walk the table forward with exact temperature and counter
    std::vector<std::uint8_t> y(static_cast<std::size_t>(B), 0);
    double t = m.initial_temp;
    int s = 0;
    if (!m.initial_on) {
        s = dt;
        for (std::size_t q = 0; q < m.recent_off.size(); ++q)
            if (m.recent_off[q]) s = static_cast<int>(q) + 1;
    }
    for (int b = 0; b < B; ++b) {
        double pos = (t - t_lo) / grid_step;
        if (pos < 0.0) pos = 0.0;
        if (pos > G - 1.0) pos = G - 1.0;
        const int gi = static_cast<int>(pos + 0.5);
        int a = act[static_cast<std::size_t>(b) * static_cast<std::size_t>(G * S) +
                    static_cast<std::size_t>(gi * S + s)];
        if (a && !(s == 0 || s >= dt)) a = 0;
        if (a) {
            double probe = t;
            for (int j = 0; j < bm && a; ++j) {
                probe = thermal_step(probe, m.params.rated_power_kw,
                                     gph[static_cast<std::size_t>(b * bm + j)], m.params);
                if (probe > m.params.temp_upper_f + 1e-9) a = 0;
            }
        }
        for (int j = 0; j < bm; ++j)
            t = thermal_step(t, a ? m.params.rated_power_kw : 0.0,
                             gph[static_cast<std::size_t>(b * bm + j)], m.params);
        y[static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(a);
        s = a ? 0 : std::min(dt, s + bm);
    }
    return y;
}

inline std::vector<std::uint8_t> dp_pattern(const MilpModel& m, int n,
                                            double grid_step = 0.01) {
    return dp_pattern_trace(m, m.demand_gph[static_cast<std::size_t>(n)], grid_step);
}

inline std::vector<std::uint8_t> dp_pattern_mean(const MilpModel& m, double grid_step = 0.01) {
    const int K = m.horizon_minutes;
    std::vector<double> mean(static_cast<std::size_t>(K), 0.0);
    for (int n = 0; n < m.num_scenarios(); ++n)
        for (int k = 0; k < K; ++k)
            mean[static_cast<std::size_t>(k)] += m.probs[static_cast<std::size_t>(n)] *
                                                 m.demand_gph[static_cast<std::size_t>(n)]
                                                             [static_cast<std::size_t>(k)];
    return dp_pattern_trace(m, mean, grid_step);
}

// Deterministic first-improvement descent over single-block flips. Keeps
// the schedule feasible throughout; used to sharpen incumbents so that
// best-first pruning has teeth early.
inline void hill_climb(const MilpModel& m, std::vector<std::uint8_t>& y, double& obj) {
    for (int pass = 0; pass < 64; ++pass) {
        bool improved = false;
        for (int b = 0; b < m.num_blocks; ++b) {
            y[static_cast<std::size_t>(b)] ^= 1;
            bool keep = false;
            if (downtime_feasible(m, y)) {
                const PatternScore sc = integer_objective(m, y);
                if (sc.ceiling_ok && sc.objective < obj - 1e-12) {
                    obj = sc.objective;
                    keep = true;
                    improved = true;
                }
            }
            if (!keep) y[static_cast<std::size_t>(b)] ^= 1;
        }
        if (!improved) break;
    }
}

// Fixed-only contradiction: an on-run ending in a fully fixed off-gap
// shorter than the downtime window followed by a fixed on-block can never be
// completed feasibly.
inline bool fixed_downtime_contradiction(const MilpModel& m,
                                         const std::vector<std::int8_t>& fix) {
    for (int b2 = 0; b2 < m.num_blocks; ++b2) {
        if (fix[static_cast<std::size_t>(b2)] != 1) continue;
        for (int b1 = b2 - 2; b1 >= 0; --b1) {
            const int gap_minutes = (b2 - b1 - 1) * m.block_minutes;
            if (gap_minutes >= m.min_downtime) break;
            bool gap_fixed_off = true;
            for (int b = b1 + 1; b < b2 && gap_fixed_off; ++b)
                gap_fixed_off = fix[static_cast<std::size_t>(b)] == 0;
            if (gap_fixed_off && fix[static_cast<std::size_t>(b1)] == 1) return true;
        }
    }
    return false;
}

}  // namespace milpdetail

struct BbOptions {
    double gap_tol = 1e-6;
    long node_limit = 200000;
    double time_limit_seconds = 0.0;  // 0 disables; node_limit keeps runs deterministic
    double dp_grid = 0.01;            // seed recursion resolution, finer helps one-shot solves
    // externally known feasible block patterns, re-scored exactly and offered
    // as incumbents before search starts (warm starts from other controllers)
    std::vector<std::vector<std::uint8_t>> extra_seeds;
};

// Best-first branch-and-bound on the block binaries. Every node restarts the
// simplex from the triangular crash basis of its fixed pattern; bounds come
// from the node relaxations and incumbents from rounding plus repair.
// Integer objectives are always re-evaluated through the simulator
// recursion, never read off the LP.
inline MilpSolution solve_bb(const MilpModel& m, const BbOptions& opts) {
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    };
    const double gap_tol = opts.gap_tol;
    const long node_limit = opts.node_limit;
    const double time_limit_seconds = opts.time_limit_seconds;

    MilpSolution out;
    const std::vector<std::uint8_t> forced = milpdetail::forced_off_blocks(m);

    bool have_incumbent = false;
    double inc_obj = kInf;
    std::vector<std::uint8_t> inc_pattern;
    std::vector<std::uint8_t> last_seed;
    const auto offer_incumbent = [&](const std::vector<std::uint8_t>& seed) {
        if (seed == last_seed) return;  // identical rounding, nothing new
        last_seed = seed;
        if (!downtime_feasible(m, seed)) return;
        const PatternScore base = integer_objective(m, seed);
        if (!base.ceiling_ok) return;
        std::vector<std::uint8_t> y = seed;
        double obj = base.objective;
        milpdetail::hill_climb(m, y, obj);
        if (!have_incumbent || obj < inc_obj) {
            have_incumbent = true;
            inc_obj = obj;
            inc_pattern = y;
        }
    };

    offer_incumbent(std::vector<std::uint8_t>(static_cast<std::size_t>(m.num_blocks), 0));
    for (double margin : {0.0, 1.0, 2.0, 4.0, 8.0})
        offer_incumbent(milpdetail::deadband_pattern(m, margin, forced));
    // dynamic-program candidates: the day optimum per scenario and for the
    // probability-weighted mean draw, each re-scored against the full model
    for (int n = 0; n < m.num_scenarios(); ++n)
        offer_incumbent(milpdetail::dp_pattern(m, n, opts.dp_grid));
    if (m.num_scenarios() > 1) offer_incumbent(milpdetail::dp_pattern_mean(m, opts.dp_grid));
    for (const auto& seed : opts.extra_seeds)
        if (static_cast<int>(seed.size()) == m.num_blocks) offer_incumbent(seed);

    std::priority_queue<milpdetail::BbNode, std::vector<milpdetail::BbNode>,
                        milpdetail::BbNodeWorse>
        open;
    long seq = 0;
    bool hit_limit = false;
    double open_bound_floor = kInf;  // min bound among pruned-by-limit nodes

    {
        milpdetail::BbNode root;
        root.fix.assign(static_cast<std::size_t>(m.num_blocks), -1);
        open.push(std::move(root));
        ++seq;
    }

    while (!open.empty()) {
        if ((node_limit > 0 && out.node_count >= node_limit) ||
            (time_limit_seconds > 0.0 && elapsed() > time_limit_seconds)) {
            hit_limit = true;
            while (!open.empty()) {
                open_bound_floor = std::min(open_bound_floor, open.top().bound);
                open.pop();
            }
            break;
        }
        milpdetail::BbNode node = open.top();
        open.pop();
        if (have_incumbent && node.bound >= inc_obj - gap_tol) continue;
        ++out.node_count;

        bool contradiction = false;
        for (int b = 0; b < m.num_blocks && !contradiction; ++b)
            if (node.fix[static_cast<std::size_t>(b)] == 1 && forced[static_cast<std::size_t>(b)])
                contradiction = true;
        if (!contradiction)
            contradiction = milpdetail::fixed_downtime_contradiction(m, node.fix);
        if (contradiction) continue;

        std::vector<std::uint8_t> minimal(static_cast<std::size_t>(m.num_blocks), 0);
        for (int b = 0; b < m.num_blocks; ++b)
            minimal[static_cast<std::size_t>(b)] =
                node.fix[static_cast<std::size_t>(b)] == 1 ? 1 : 0;
        if (!milpdetail::ceiling_ok(m, minimal)) continue;

        SparseLp node_lp = m.lp;
        for (int b = 0; b < m.num_blocks; ++b) {
            const std::int8_t f = node.fix[static_cast<std::size_t>(b)];
            if (f >= 0) {
                node_lp.col_lower[static_cast<std::size_t>(m.y_col(b))] = f;
                node_lp.col_upper[static_cast<std::size_t>(m.y_col(b))] = f;
            }
        }
        // crash near the incumbent when one exists; a good schedule starts
        // the simplex close to the node optimum
        std::vector<std::uint8_t> crash = minimal;
        if (have_incumbent) {
            crash = inc_pattern;
            for (int b = 0; b < m.num_blocks; ++b) {
                const std::int8_t f = node.fix[static_cast<std::size_t>(b)];
                if (f >= 0) crash[static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(f);
                if (forced[static_cast<std::size_t>(b)]) crash[static_cast<std::size_t>(b)] = 0;
            }
        }
        const BasisHint hint = milpdetail::crash_basis(m, crash);
        const LpSolution lp = solve_lp(node_lp, {}, &hint);
        if (lp.status == LpStatus::infeasible) continue;
        if (lp.status != LpStatus::optimal) {
            hit_limit = true;  // bound unusable; keep the node's inherited bound open
            open_bound_floor = std::min(open_bound_floor, node.bound);
            continue;
        }
        const double bound = std::max(node.bound, lp.objective);
        if (have_incumbent && bound >= inc_obj - gap_tol) continue;

        // reduced-cost fixing: a nonbasic binary whose reduced cost already
        // spans the remaining gap cannot change value in any improving
        // integer point of this subtree, so pin it before branching
        if (have_incumbent) {
            const double cutoff = inc_obj - gap_tol;
            for (int b = 0; b < m.num_blocks; ++b) {
                if (node.fix[static_cast<std::size_t>(b)] >= 0) continue;
                const double xb = lp.x[static_cast<std::size_t>(m.y_col(b))];
                const double rc = lp.reduced_cost[static_cast<std::size_t>(m.y_col(b))];
                if (xb <= 1e-7 && lp.objective + rc >= cutoff)
                    node.fix[static_cast<std::size_t>(b)] = 0;
                else if (xb >= 1.0 - 1e-7 && lp.objective - rc >= cutoff)
                    node.fix[static_cast<std::size_t>(b)] = 1;
            }
        }

        std::vector<double> y(static_cast<std::size_t>(m.num_blocks));
        std::vector<std::pair<double, int>> cands;  // (score, block)
        for (int b = 0; b < m.num_blocks; ++b) {
            y[static_cast<std::size_t>(b)] =
                std::clamp(lp.x[static_cast<std::size_t>(m.y_col(b))], 0.0, 1.0);
            if (node.fix[static_cast<std::size_t>(b)] >= 0) continue;
            const double frac =
                std::min(y[static_cast<std::size_t>(b)], 1.0 - y[static_cast<std::size_t>(b)]);
            if (frac <= 1e-7) continue;
            // weight fractionality by the block's energy price so the
            // expensive peak-window decisions rank first
            double block_price = 0.0;
            for (int k = b * m.block_minutes; k < (b + 1) * m.block_minutes; ++k)
                block_price += m.price[static_cast<std::size_t>(k)];
            cands.emplace_back(frac * (1.0 + block_price), b);
        }

        if (cands.empty()) {
            std::vector<std::uint8_t> pattern(static_cast<std::size_t>(m.num_blocks));
            for (int b = 0; b < m.num_blocks; ++b)
                pattern[static_cast<std::size_t>(b)] =
                    y[static_cast<std::size_t>(b)] >= 0.5 ? 1 : 0;
            offer_incumbent(pattern);
            continue;
        }

        offer_incumbent(round_and_repair(m, y));
        std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& c) {
            return a.first > c.first || (a.first == c.first && a.second < c.second);
        });

        const int branch_block = cands.front().second;
        for (int v = 0; v <= 1; ++v) {
            milpdetail::BbNode child;
            child.bound = bound;
            child.depth = node.depth + 1;
            child.seq = seq++;
            child.fix = node.fix;
            child.fix[static_cast<std::size_t>(branch_block)] = static_cast<std::int8_t>(v);
            if (!(have_incumbent && child.bound >= inc_obj - gap_tol))
                open.push(std::move(child));
        }
    }

    out.solve_seconds = elapsed();
    if (have_incumbent) {
        out.status = hit_limit ? MilpStatus::limit : MilpStatus::optimal;
        out.block_actions = inc_pattern;
        const IntegerEval ev = integer_eval(m, inc_pattern);
        out.objective = ev.objective;
        out.temps = ev.temps;
        out.slacks = ev.slacks;
        out.best_bound = hit_limit ? std::min(open_bound_floor, inc_obj) : inc_obj;
    } else {
        out.status = hit_limit ? MilpStatus::limit : MilpStatus::infeasible;
        out.best_bound = hit_limit ? open_bound_floor : kInf;
    }
    return out;
}

inline MilpSolution solve_bb(const MilpModel& m, double gap_tol = 1e-6,
                             long node_limit = 200000, double time_limit_seconds = 0.0) {
    BbOptions opts;
    opts.gap_tol = gap_tol;
    opts.node_limit = node_limit;
    opts.time_limit_seconds = time_limit_seconds;
    return solve_bb(m, opts);
}

// Exhaustive oracle over all downtime-feasible block patterns, evaluated
// through the same recursion as the solver. Ties keep the pattern that is
// lexicographically smallest, i.e. the one that heats later and less.
inline MilpSolution brute_force_solve(const MilpModel& m) {
    if (m.num_blocks > 20)
        throw std::invalid_argument("brute_force_solve: more than 20 blocks");
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    MilpSolution out;
    if (m.num_blocks == 0) {
        out.status = MilpStatus::optimal;
        out.objective = 0.0;
        out.best_bound = 0.0;
        return out;
    }
    bool found = false;
    std::vector<std::uint8_t> best;
    double best_obj = kInf;
    const int B = m.num_blocks;
    for (long mask = 0; mask < (1L << B); ++mask) {
        std::vector<std::uint8_t> y(static_cast<std::size_t>(B));
        for (int b = 0; b < B; ++b)
            y[static_cast<std::size_t>(b)] =
                static_cast<std::uint8_t>((mask >> (B - 1 - b)) & 1L);
        if (!downtime_feasible(m, y)) continue;
        const IntegerEval ev = integer_eval(m, y);
        if (!ev.ceiling_ok) continue;
        if (!found || ev.objective < best_obj) {
            found = true;
            best_obj = ev.objective;
            best = y;
        }
        ++out.node_count;
    }
    out.solve_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!found) {
        out.status = MilpStatus::infeasible;
        out.best_bound = kInf;
        return out;
    }
    out.status = MilpStatus::optimal;
    out.block_actions = best;
    const IntegerEval ev = integer_eval(m, best);
    out.objective = ev.objective;
    out.temps = ev.temps;
    out.slacks = ev.slacks;
    out.best_bound = ev.objective;
    return out;
}

namespace milpdetail {

inline std::string col_name(const MilpModel& m, int j) {
    const int K = m.horizon_minutes;
    const int N = m.num_scenarios();
    if (j < m.num_blocks) return "y" + std::to_string(j);
    j -= m.num_blocks;
    if (j < K) return "z" + std::to_string(j);
    j -= K;
    if (j < K) return "p" + std::to_string(j);
    j -= K;
    if (j < N * K) return "t" + std::to_string(j / K) + "_" + std::to_string(j % K + 1);
    j -= N * K;
    return "tc" + std::to_string(j / K) + "_" + std::to_string(j % K);
}

inline std::string row_name(const MilpModel& m, int i) {
    const int K = m.horizon_minutes;
    const int N = m.num_scenarios();
    if (i < N * K) return "dyn" + std::to_string(i / K) + "_" + std::to_string(i % K);
    i -= N * K;
    if (i < N * K) return "cmf" + std::to_string(i / K) + "_" + std::to_string(i % K);
    i -= N * K;
    if (i < K) return "swl" + std::to_string(i);
    i -= K;
    if (i < K) return "dtw" + std::to_string(i);
    i -= K;
    if (i < K) return "pub" + std::to_string(i);
    i -= K;
    return "plb" + std::to_string(i);
}

inline void append_term(std::string& out, double coef, const std::string& name) {
    if (coef >= 0.0)
        out += " + " + format_double(coef);
    else
        out += " - " + format_double(-coef);
    out += " " + name;
}

}  // namespace milpdetail

// Writes the model in LP text format: objective, rows, bounds for every
// column, and one binary declaration per block. The format round-trips
// through parse_lp below and loads in standard MILP solvers.
inline void export_lp(const MilpModel& m, const std::string& path) {
    const SparseLp& lp = m.lp;
    std::vector<std::vector<std::pair<int, double>>> by_row(
        static_cast<std::size_t>(lp.num_rows));
    for (std::size_t e = 0; e < lp.entry_row.size(); ++e)
        by_row[static_cast<std::size_t>(lp.entry_row[e])].push_back(
            {lp.entry_col[e], lp.entry_value[e]});

    std::string text;
    text.reserve(1 << 20);
    text += "\\ water heater control, horizon " + std::to_string(m.horizon_minutes) +
            " min, " + std::to_string(m.num_blocks) + " blocks, " +
            std::to_string(m.num_scenarios()) + " scenarios\n";
    text += "Minimize\n obj:";
    bool any = false;
    for (int j = 0; j < lp.num_cols; ++j) {
        const double c = lp.objective[static_cast<std::size_t>(j)];
        if (c == 0.0) continue;
        milpdetail::append_term(text, c, milpdetail::col_name(m, j));
        any = true;
        if (j % 8 == 7) text += "\n     ";
    }
    if (!any) milpdetail::append_term(text, 0.0, milpdetail::col_name(m, 0));
    text += "\nSubject To\n";
    for (int i = 0; i < lp.num_rows; ++i) {
        text += " " + milpdetail::row_name(m, i) + ":";
        for (const auto& [col, val] : by_row[static_cast<std::size_t>(i)])
            milpdetail::append_term(text, val, milpdetail::col_name(m, col));
        const double lo = lp.row_lower[static_cast<std::size_t>(i)];
        const double hi = lp.row_upper[static_cast<std::size_t>(i)];
        if (lo == hi)
            text += " = " + format_double(lo);
        else if (std::isfinite(hi))
            text += " <= " + format_double(hi);
        else
            text += " >= " + format_double(lo);
        text += "\n";
    }
    text += "Bounds\n";
    for (int j = 0; j < lp.num_cols; ++j)
        text += " " + format_double(lp.col_lower[static_cast<std::size_t>(j)]) + " <= " +
                milpdetail::col_name(m, j) + " <= " +
                format_double(lp.col_upper[static_cast<std::size_t>(j)]) + "\n";
    text += "Binaries\n";
    for (int b = 0; b < m.num_blocks; ++b) text += " y" + std::to_string(b);
    text += "\nEnd\n";
    write_text_file(path, text);
}

struct ParsedLp {
    SparseLp lp;
    std::vector<std::string> col_names;
    std::vector<std::string> row_names;
    std::vector<std::string> binaries;
};

// Reads back the export format above (not a general LP reader). Columns are
// numbered by their order in the Bounds section, rows by order of
// appearance.
inline ParsedLp parse_lp(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<std::string> tokens;
    {
        std::string cur;
        bool comment = false;
        for (char ch : text) {
            if (ch == '\\') comment = true;
            if (ch == '\n') comment = false;
            if (comment) continue;
            if (ch == ' ' || ch == '\n' || ch == '\t' || ch == '\r') {
                if (!cur.empty()) tokens.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        if (!cur.empty()) tokens.push_back(cur);
    }

    ParsedLp out;
    std::size_t pos = 0;
    const auto expect = [&](const std::string& kw) {
        if (pos >= tokens.size() || tokens[pos] != kw)
            throw std::runtime_error("parse_lp: expected '" + kw + "'");
        ++pos;
    };
    const auto peek_is = [&](const std::string& kw) {
        return pos < tokens.size() && tokens[pos] == kw;
    };

    // First locate the Bounds section to build the column table.
    std::map<std::string, int> col_id;
    {
        std::size_t p = 0;
        while (p < tokens.size() && tokens[p] != "Bounds") ++p;
        if (p == tokens.size()) throw std::runtime_error("parse_lp: no Bounds section");
        ++p;
        while (p < tokens.size() && tokens[p] != "Binaries" && tokens[p] != "End") {
            // lo <= name <= hi
            if (p + 4 >= tokens.size()) throw std::runtime_error("parse_lp: bad bound line");
            const double lo = parse_double(tokens[p]);
            if (tokens[p + 1] != "<=" || tokens[p + 3] != "<=")
                throw std::runtime_error("parse_lp: bad bound line");
            const std::string& name = tokens[p + 2];
            const double hi = parse_double(tokens[p + 4]);
            if (col_id.count(name)) throw std::runtime_error("parse_lp: duplicate column");
            col_id[name] = static_cast<int>(out.col_names.size());
            out.col_names.push_back(name);
            out.lp.col_lower.push_back(lo);
            out.lp.col_upper.push_back(hi);
            p += 5;
        }
    }
    out.lp.num_cols = static_cast<int>(out.col_names.size());
    out.lp.objective.assign(static_cast<std::size_t>(out.lp.num_cols), 0.0);

    expect("Minimize");
    if (pos >= tokens.size() || tokens[pos].back() != ':')
        throw std::runtime_error("parse_lp: missing objective label");
    ++pos;
    while (pos < tokens.size() && (tokens[pos] == "+" || tokens[pos] == "-")) {
        const double sign = tokens[pos] == "+" ? 1.0 : -1.0;
        const double coef = parse_double(tokens[pos + 1]);
        const auto it = col_id.find(tokens[pos + 2]);
        if (it == col_id.end()) throw std::runtime_error("parse_lp: unknown column");
        out.lp.objective[static_cast<std::size_t>(it->second)] += sign * coef;
        pos += 3;
    }

    expect("Subject");
    expect("To");
    while (pos < tokens.size() && tokens[pos] != "Bounds") {
        std::string label = tokens[pos];
        if (label.back() != ':') throw std::runtime_error("parse_lp: missing row label");
        label.pop_back();
        ++pos;
        const int row = static_cast<int>(out.row_names.size());
        out.row_names.push_back(label);
        while (pos < tokens.size() && (tokens[pos] == "+" || tokens[pos] == "-")) {
            const double sign = tokens[pos] == "+" ? 1.0 : -1.0;
            const double coef = parse_double(tokens[pos + 1]);
            const auto it = col_id.find(tokens[pos + 2]);
            if (it == col_id.end()) throw std::runtime_error("parse_lp: unknown column");
            out.lp.entry_row.push_back(row);
            out.lp.entry_col.push_back(it->second);
            out.lp.entry_value.push_back(sign * coef);
            pos += 3;
        }
        if (pos + 1 >= tokens.size()) throw std::runtime_error("parse_lp: truncated row");
        const std::string sense = tokens[pos];
        const double rhs = parse_double(tokens[pos + 1]);
        pos += 2;
        if (sense == "=") {
            out.lp.row_lower.push_back(rhs);
            out.lp.row_upper.push_back(rhs);
        } else if (sense == "<=") {
            out.lp.row_lower.push_back(-kInf);
            out.lp.row_upper.push_back(rhs);
        } else if (sense == ">=") {
            out.lp.row_lower.push_back(rhs);
            out.lp.row_upper.push_back(kInf);
        } else {
            throw std::runtime_error("parse_lp: bad row sense");
        }
    }
    out.lp.num_rows = static_cast<int>(out.row_names.size());

    // Skip the Bounds block (already consumed in the prescan).
    expect("Bounds");
    while (pos < tokens.size() && tokens[pos] != "Binaries" && tokens[pos] != "End") ++pos;
    if (peek_is("Binaries")) {
        ++pos;
        while (pos < tokens.size() && tokens[pos] != "End") out.binaries.push_back(tokens[pos++]);
    }
    expect("End");
    validate(out.lp);
    return out;
}

}  // namespace ewhbench
