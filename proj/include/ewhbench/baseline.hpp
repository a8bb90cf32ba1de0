#pragma once

#include <stdexcept>

#include "ewhbench/ewh.hpp"

namespace ewhbench {

struct DeadbandConfig {
    double setpoint_f = 120.0;
    double halfwidth_f = 5.0;
};

inline void validate(const DeadbandConfig& c, const EwhParams& p) {
    if (c.halfwidth_f <= 0.0) throw std::invalid_argument("DeadbandConfig: halfwidth must be > 0");
    if (c.setpoint_f - c.halfwidth_f < p.temp_lower_f - 10.0)
        throw std::invalid_argument("DeadbandConfig: band bottom too far below comfort threshold");
    if (c.setpoint_f + c.halfwidth_f > p.temp_upper_f)
        throw std::invalid_argument("DeadbandConfig: band top above safety cap");
}

// Price-responsive deadband: hard off during the peak window, ordinary
// hysteresis around the setpoint otherwise (hold current state inside the
// band).
inline bool prdb_act(const EwhState& s, int minute, const DeadbandConfig& c,
                     const PriceSchedule& sched) {
    if (is_on_peak(minute % kMinutesPerDay, sched)) return false;
    if (s.temp_f < c.setpoint_f - c.halfwidth_f) return true;
    if (s.temp_f > c.setpoint_f + c.halfwidth_f) return false;
    return s.heater_on;
}

}  // namespace ewhbench
