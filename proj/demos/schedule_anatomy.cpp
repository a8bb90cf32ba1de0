// Solves one whole-day schedule with the true draw profile and prints its
// anatomy: the on/off block pattern, what it pays, and how the tank rides
// the comfort band through the afternoon price peak.
#include <cstdio>

#include "ewhbench/milp.hpp"
#include "ewhbench/mpc.hpp"

using namespace ewhbench;

int main() {
    EwhParams params;
    PriceSchedule sched;
    EnvConfig env;
    const DemandTrace day =
        split_days(generate_demand(FixtureModel::household_defaults(), 1, 4)).front();

    const EwhState init = initial_state(params, env);
    const MpcOptResult r = mpc_opt(day, params, sched, env, init);

    std::printf("status %s, objective %.6f, replayed cost %.6f, %ld nodes\n",
                to_string(r.solution.status), r.solution.objective, r.replay_cost,
                r.solution.node_count);
    std::printf("lower bound %.6f\n\n", r.solution.best_bound);

    std::printf("block schedule (one char per %d-minute block, peak marked):\n", env.block_minutes);
    const int blocks = static_cast<int>(r.solution.block_actions.size());
    for (int b = 0; b < blocks; ++b) {
        const int minute = b * env.block_minutes;
        if (minute % 360 == 0) std::printf("%s%02d:00 ", b ? "\n" : "", minute / 60);
        const bool peak = is_on_peak(minute, sched);
        std::printf("%c", r.solution.block_actions[static_cast<std::size_t>(b)]
                              ? (peak ? 'O' : '#')
                              : (peak ? '.' : '_'));
    }
    std::printf("\n\nhourly tank temperature (F):\n");
    for (int h = 0; h < 24; ++h) {
        const auto& t = r.trajectory.states[static_cast<std::size_t>(h * 60)];
        std::printf("%02d:00 %6.2f %s\n", h, t.temp_f, t.heater_on ? "on" : "off");
    }
    return 0;
}
