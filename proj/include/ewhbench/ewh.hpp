#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ewhbench/csv.hpp"
#include "ewhbench/demand.hpp"

namespace ewhbench {

// Tank physics. Conductances in BTU/(hr F), capacity in BTU/F, power in kW.
struct EwhParams {
    double tank_volume_gal = 40.0;
    double surface_area_ft2 = 24.0;
    double shell_r_value = 15.0;
    double shell_conductance = 24.0 / 15.0;
    double thermal_capacity = 8.34 * 40.0;
    double inlet_temp_f = 60.0;
    double ambient_temp_f = 70.0;
    double rated_power_kw = 4.5;
    double temp_lower_f = 115.0;
    double temp_upper_f = 140.0;
    double dt_minutes = 1.0;
};

inline void validate(const EwhParams& p) {
    if (!(p.tank_volume_gal > 0.0 && p.surface_area_ft2 > 0.0 && p.shell_r_value > 0.0 &&
          p.shell_conductance > 0.0 && p.thermal_capacity > 0.0 && p.rated_power_kw > 0.0 &&
          p.dt_minutes >= 0.0))
        throw std::invalid_argument("EwhParams: physical constants must be positive");
    if (!(p.inlet_temp_f < p.temp_lower_f && p.temp_lower_f < p.temp_upper_f))
        throw std::invalid_argument("EwhParams: need inlet < comfort threshold < safety cap");
    if (p.thermal_capacity != 8.34 * p.tank_volume_gal)
        throw std::invalid_argument("EwhParams: thermal capacity must equal 8.34 * volume");
    if (p.shell_conductance != p.surface_area_ft2 / p.shell_r_value)
        throw std::invalid_argument("EwhParams: conductance must equal area / R value");
}

struct PriceSchedule {
    double offpeak_rate = 0.1;
    double onpeak_rate = 1.0;
    int peak_start_minute = 840;
    int peak_end_minute = 1140;
    double discomfort_rate = 0.5;
};

inline void validate(const PriceSchedule& s) {
    if (!(s.onpeak_rate > s.offpeak_rate && s.offpeak_rate > 0.0))
        throw std::invalid_argument("PriceSchedule: need onpeak > offpeak > 0");
    if (!(0 <= s.peak_start_minute && s.peak_start_minute < s.peak_end_minute &&
          s.peak_end_minute <= kMinutesPerDay))
        throw std::invalid_argument("PriceSchedule: bad peak window");
    if (s.discomfort_rate < 0.0)
        throw std::invalid_argument("PriceSchedule: discomfort rate must be >= 0");
}

inline bool is_on_peak(int minute_of_day, const PriceSchedule& s) {
    return minute_of_day >= s.peak_start_minute && minute_of_day < s.peak_end_minute;
}

inline double price_rate(int minute_of_day, const PriceSchedule& s) {
    return is_on_peak(minute_of_day, s) ? s.onpeak_rate : s.offpeak_rate;
}

struct EnvConfig {
    int episode_minutes = kMinutesPerDay;
    double discount = 1.0;
    int min_downtime_minutes = 10;
    int block_minutes = 10;
};

inline void validate(const EnvConfig& c) {
    if (c.block_minutes < 1 || c.episode_minutes < 1 ||
        c.episode_minutes % c.block_minutes != 0)
        throw std::invalid_argument("EnvConfig: block length must divide episode length");
    if (c.min_downtime_minutes < 0 || c.min_downtime_minutes > c.episode_minutes)
        throw std::invalid_argument("EnvConfig: downtime out of range");
}

// minutes_since_off counts consecutive off minutes, saturating at the
// minimum downtime; it is kept saturated while the heater runs so a fresh
// switch-off always restarts the count at 1.
struct EwhState {
    double temp_f = 120.0;
    bool heater_on = false;
    int minutes_since_off = 10;
    int minute_of_day = 0;
    double cold_temp_f = 0.0;
};

inline EwhState initial_state(const EwhParams& p, const EnvConfig& c) {
    EwhState s;
    s.temp_f = 120.0;
    s.heater_on = false;
    s.minutes_since_off = c.min_downtime_minutes;
    s.minute_of_day = 0;
    s.cold_temp_f = std::max(0.0, p.temp_lower_f - s.temp_f);
    return s;
}

// One-minute tank temperature update: exponential relaxation toward the
// equilibrium set by shell losses, inlet draw-through, and element power.
// demand is in gal/hr here; 1 gal/min of draw is 60.
inline double thermal_step(double temp_f, double power_kw, double demand_gph,
                           const EwhParams& p) {
    if (demand_gph < 0.0) throw std::domain_error("thermal_step: negative demand");
    if (power_kw < 0.0 || power_kw > p.rated_power_kw)
        throw std::domain_error("thermal_step: power outside [0, rated]");
    const double b = 8.34 * demand_gph;
    const double rprime = 1.0 / (p.shell_conductance + b);
    const double q = 3412.14 * power_kw;
    const double dt_hr = p.dt_minutes / 60.0;
    const double decay = std::exp(-dt_hr / (rprime * p.thermal_capacity));
    const double equilibrium =
        rprime * p.shell_conductance * p.ambient_temp_f + rprime * p.inlet_temp_f * b + rprime * q;
    return temp_f * decay + equilibrium * (1.0 - decay);
}

// Step reward: negative of energy cost plus comfort penalty. Price band is
// the minute at which the step started; the cold-water deficit is taken
// from the post-step state. demand is in gal/min here.
inline double step_reward(const EwhState& next, double power_kw, double demand_gpm,
                          const PriceSchedule& s, int minute_of_day) {
    const double rate = price_rate(minute_of_day, s);
    return -(rate * power_kw + s.discomfort_rate * demand_gpm * next.cold_temp_f);
}

struct StepResult {
    EwhState state;
    double reward = 0.0;
    bool effective_on = false;
};

// Applies the two admissibility masks before simulating: a switch-on is
// suppressed while the minimum downtime is unmet, and whenever running the
// element for this minute would push the temperature past the safety cap.
inline StepResult env_step(const EwhState& s, bool action_on, double demand_gph,
                           const EwhParams& p, const PriceSchedule& sched,
                           const EnvConfig& cfg) {
    bool on = action_on;
    if (on && !s.heater_on && s.minutes_since_off < cfg.min_downtime_minutes) on = false;
    if (on && thermal_step(s.temp_f, p.rated_power_kw, demand_gph, p) > p.temp_upper_f)
        on = false;

    const double power = on ? p.rated_power_kw : 0.0;
    StepResult r;
    r.effective_on = on;
    r.state.temp_f = thermal_step(s.temp_f, power, demand_gph, p);
    r.state.heater_on = on;
    if (on)
        r.state.minutes_since_off = cfg.min_downtime_minutes;
    else if (s.heater_on)
        r.state.minutes_since_off = 1;
    else
        r.state.minutes_since_off = std::min(cfg.min_downtime_minutes, s.minutes_since_off + 1);
    r.state.minute_of_day = (s.minute_of_day + 1) % kMinutesPerDay;
    r.state.cold_temp_f = std::max(0.0, p.temp_lower_f - r.state.temp_f);
    r.reward = step_reward(r.state, power, demand_gph / 60.0, sched, s.minute_of_day);
    return r;
}

struct Trajectory {
    std::vector<EwhState> states;        // episode_minutes + 1, front() is the initial state
    std::vector<std::uint8_t> actions;   // effective on/off per minute
    std::vector<double> rewards;         // per minute
    std::vector<double> action_seconds;  // wall time per controller query (one per block)
};

inline double trajectory_cost(const Trajectory& t) {
    double total = 0.0;
    for (double r : t.rewards) total += r;
    return -total;
}

// Drives one episode. The controller is queried once per control block as
// controller(state, minute, demand_gpm) -> bool and its command is held for
// the whole block; the environment re-masks it each minute.
template <class Controller>
Trajectory rollout(Controller&& controller, const DemandTrace& demand, const EwhParams& p,
                   const PriceSchedule& sched, const EnvConfig& cfg, const EwhState& initial) {
    validate(p);
    validate(sched);
    validate(cfg);
    if (static_cast<int>(demand.gpm.size()) < cfg.episode_minutes)
        throw std::invalid_argument("rollout: demand trace shorter than episode");

    Trajectory traj;
    traj.states.reserve(static_cast<std::size_t>(cfg.episode_minutes) + 1);
    traj.actions.reserve(static_cast<std::size_t>(cfg.episode_minutes));
    traj.rewards.reserve(static_cast<std::size_t>(cfg.episode_minutes));
    traj.action_seconds.reserve(
        static_cast<std::size_t>(cfg.episode_minutes / cfg.block_minutes));
    traj.states.push_back(initial);

    EwhState state = initial;
    bool command = false;
    for (int m = 0; m < cfg.episode_minutes; ++m) {
        const double gpm = demand.gpm[static_cast<std::size_t>(m)];
        if (m % cfg.block_minutes == 0) {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                command = controller(state, m, gpm);
            } catch (const std::exception& e) {
                throw std::runtime_error("controller failed at block " +
                                         std::to_string(m / cfg.block_minutes) + ": " + e.what());
            }
            const auto t1 = std::chrono::steady_clock::now();
            traj.action_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        const StepResult r = env_step(state, command, 60.0 * gpm, p, sched, cfg);
        state = r.state;
        traj.states.push_back(state);
        traj.actions.push_back(r.effective_on ? 1 : 0);
        traj.rewards.push_back(r.reward);
    }
    return traj;
}

// Independent rule checks over a recorded trajectory; used by tests and the
// report stage rather than trusting the environment masks.
inline int downtime_violations(const Trajectory& t, int min_downtime) {
    if (t.states.empty()) return 0;
    int violations = 0;
    int off_run = t.states.front().heater_on ? 0 : t.states.front().minutes_since_off;
    for (std::size_t m = 0; m < t.actions.size(); ++m) {
        const bool on = t.actions[m] != 0;
        const bool prev_on = m == 0 ? t.states.front().heater_on : t.actions[m - 1] != 0;
        if (on && !prev_on && off_run < min_downtime) ++violations;
        if (on)
            off_run = 0;
        else
            ++off_run;
    }
    return violations;
}

inline int safety_violations(const Trajectory& t, double temp_upper_f) {
    int violations = 0;
    for (const auto& s : t.states)
        if (s.temp_f > temp_upper_f + 1e-9) ++violations;
    return violations;
}

inline void write_trajectory_csv(const Trajectory& t, const DemandTrace& demand,
                                 const EwhParams& p, const PriceSchedule& sched,
                                 const std::string& path) {
    std::string out = "minute,temp_F,action,power_kW,demand_gpm,price_band,reward\n";
    for (std::size_t m = 0; m < t.actions.size(); ++m) {
        const int minute = static_cast<int>(m);
        out += std::to_string(minute);
        out += ',';
        out += format_double(t.states[m + 1].temp_f);
        out += ',';
        out += t.actions[m] ? '1' : '0';
        out += ',';
        out += format_double(t.actions[m] ? p.rated_power_kw : 0.0);
        out += ',';
        out += format_double(demand.gpm[m]);
        out += ',';
        out += is_on_peak(minute % kMinutesPerDay, sched) ? '1' : '0';
        out += ',';
        out += format_double(t.rewards[m]);
        out += '\n';
    }
    write_text_file(path, out);
}

}  // namespace ewhbench
