#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ewhbench/csv.hpp"
#include "ewhbench/demand.hpp"
#include "ewhbench/ewh.hpp"
#include "ewhbench/parallel.hpp"

namespace ewhbench {

// Fixed feed-forward shape: five state features, two tanh hidden layers,
// one linear logit.
struct PolicyArch {
    int input = 5;
    int hidden1 = 64;
    int hidden2 = 64;
    int output = 1;

    int param_count() const {
        return (input + 1) * hidden1 + (hidden1 + 1) * hidden2 + (hidden2 + 1) * output;
    }
    bool operator==(const PolicyArch&) const = default;
};

// Fixed per-feature affine normalization; constants rather than running
// statistics so a policy's behavior never depends on evaluation history.
struct Normalizer {
    std::array<double, 5> shift{0.0, 0.0, 0.0, 0.0, 0.0};
    std::array<double, 5> scale{1.0 / 140.0, 1.0 / 140.0, 1.0, 1.0 / 5.0, 1.0 / 1440.0};

    bool operator==(const Normalizer&) const = default;
};

struct PolicyParams {
    PolicyArch arch;
    Normalizer norm;
    std::vector<double> theta;
};

inline void validate(const PolicyParams& p) {
    if (static_cast<int>(p.theta.size()) != p.arch.param_count())
        throw std::invalid_argument("PolicyParams: parameter vector length mismatch");
    for (double v : p.theta)
        if (!std::isfinite(v)) throw std::invalid_argument("PolicyParams: non-finite parameter");
}

inline PolicyParams zero_policy() {
    PolicyParams p;
    p.theta.assign(static_cast<std::size_t>(p.arch.param_count()), 0.0);
    return p;
}

// Features are (tank temp, cold-water deficit, heater flag, current draw
// in gal/min, minute of day). The logit decides: strictly positive is on,
// zero or below is off.
inline bool policy_act(const PolicyParams& p, const EwhState& s, double demand_gpm) {
    const double raw[5] = {s.temp_f, s.cold_temp_f, s.heater_on ? 1.0 : 0.0, demand_gpm,
                           static_cast<double>(s.minute_of_day)};
    double x[5];
    for (int i = 0; i < 5; ++i)
        x[i] = (raw[i] - p.norm.shift[static_cast<std::size_t>(i)]) *
               p.norm.scale[static_cast<std::size_t>(i)];

    const int in = p.arch.input, h1 = p.arch.hidden1, h2 = p.arch.hidden2;
    const double* w = p.theta.data();
    double a1[64];
    for (int j = 0; j < h1; ++j) {
        double z = 0.0;
        for (int i = 0; i < in; ++i) z += w[j * in + i] * x[i];
        z += w[h1 * in + j];
        a1[j] = std::tanh(z);
    }
    const double* w2 = w + (in + 1) * h1;
    double a2[64];
    for (int j = 0; j < h2; ++j) {
        double z = 0.0;
        for (int i = 0; i < h1; ++i) z += w2[j * h1 + i] * a1[i];
        z += w2[h2 * h1 + j];
        a2[j] = std::tanh(z);
    }
    const double* w3 = w2 + (h1 + 1) * h2;
    double logit = 0.0;
    for (int i = 0; i < h2; ++i) logit += w3[i] * a2[i];
    logit += w3[h2];
    return logit > 0.0;
}

// Probability-weighted mean episode reward of an arbitrary controller over
// a scenario set. The same harness scores trained policies and baselines,
// so comparisons never go through different simulation paths.
template <class Controller>
double controller_fitness(Controller&& controller, const ScenarioSet& scenarios,
                          const EwhParams& params, const PriceSchedule& sched,
                          const EnvConfig& cfg, const EwhState& initial) {
    double total = 0.0;
    for (int n = 0; n < scenarios.size(); ++n) {
        const Trajectory traj = rollout(controller, scenarios.traces[static_cast<std::size_t>(n)],
                                        params, sched, cfg, initial);
        total += scenarios.probs[static_cast<std::size_t>(n)] * (-trajectory_cost(traj));
    }
    return total;
}

inline double policy_fitness(const PolicyParams& p, const ScenarioSet& scenarios,
                             const EwhParams& params, const PriceSchedule& sched,
                             const EnvConfig& cfg, const EwhState& initial) {
    validate(p);
    return controller_fitness(
        [&](const EwhState& s, int, double gpm) { return policy_act(p, s, gpm); }, scenarios,
        params, sched, cfg, initial);
}

struct EsConfig {
    int pairs = 32;        // mirrored perturbation pairs per iteration
    double sigma = 0.05;   // perturbation scale
    double alpha = 0.02;   // step size
    int iterations = 300;
    std::uint64_t seed = 1;
};

inline void validate(const EsConfig& c) {
    if (c.pairs < 1) throw std::invalid_argument("EsConfig: pairs must be >= 1");
    if (!(c.sigma > 0.0)) throw std::invalid_argument("EsConfig: sigma must be > 0");
    if (!(c.alpha > 0.0)) throw std::invalid_argument("EsConfig: alpha must be > 0");
    if (c.iterations < 1) throw std::invalid_argument("EsConfig: iterations must be >= 1");
}

struct EsHistoryRow {
    int iteration = 0;
    double mean_fitness = 0.0;   // population mean this iteration
    double best_fitness = 0.0;   // running best center fitness
};

struct EsResult {
    std::vector<double> theta;
    std::vector<EsHistoryRow> history;
    double final_fitness = 0.0;
};

namespace esdetail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Standard normal draws from a per-(iteration, pair) seed so any worker
// can regenerate any perturbation independently of schedule.
inline void gaussian_fill(std::uint64_t seed, std::vector<double>& out) {
    std::uint64_t s = seed;
    const auto next_unit = [&] {
        s = splitmix64(s);
        // top 53 bits to a uniform in (0, 1]
        return (static_cast<double>(s >> 11) + 1.0) * 0x1.0p-53;
    };
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        out[i] = r * std::cos(kTwoPi * u2);
        if (i + 1 < out.size()) out[i + 1] = r * std::sin(kTwoPi * u2);
    }
}

inline std::uint64_t pair_seed(std::uint64_t base, int iteration, int pair) {
    return splitmix64(splitmix64(base ^ 0x5851F42D4C957F2DULL) +
                      splitmix64(static_cast<std::uint64_t>(iteration) * 0x100000001B3ULL +
                                 static_cast<std::uint64_t>(pair)));
}

// Centered ranks in [-0.5, 0.5] that sum to zero; tied fitnesses share the
// average of their rank span so identical populations produce a null step.
inline std::vector<double> centered_ranks(const std::vector<double>& fitness) {
    const std::size_t n = fitness.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return fitness[a] < fitness[b] || (fitness[a] == fitness[b] && a < b);
    });
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && fitness[order[j + 1]] == fitness[order[i]]) ++j;
        const double shared = 0.5 * (static_cast<double>(i) + static_cast<double>(j));
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = shared;
        i = j + 1;
    }
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = n > 1 ? rank[k] / static_cast<double>(n - 1) - 0.5 : 0.0;
    return out;
}

}  // namespace esdetail

// Mirrored-sampling ES ascent on an arbitrary fitness function. All 2*pairs
// evaluations per iteration run through parallel_for, and the update is a
// fixed-order reduction over pair index, so the trained vector is identical
// for any worker count.
inline EsResult es_optimize(int dim, const std::function<double(const std::vector<double>&)>& fn,
                            const EsConfig& cfg, unsigned workers = 0) {
    validate(cfg);
    if (dim < 1) throw std::invalid_argument("es_optimize: dimension must be >= 1");

    EsResult res;
    res.theta.assign(static_cast<std::size_t>(dim), 0.0);
    res.history.reserve(static_cast<std::size_t>(cfg.iterations));

    const int pop = 2 * cfg.pairs;
    std::vector<std::vector<double>> noise(static_cast<std::size_t>(cfg.pairs));
    std::vector<double> fitness(static_cast<std::size_t>(pop));
    std::vector<double> candidate_store(static_cast<std::size_t>(pop) *
                                        static_cast<std::size_t>(dim));

    double best = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        for (int p = 0; p < cfg.pairs; ++p) {
            auto& eps = noise[static_cast<std::size_t>(p)];
            eps.resize(static_cast<std::size_t>(dim));
            esdetail::gaussian_fill(esdetail::pair_seed(cfg.seed, iter, p), eps);
        }
        parallel_for(
            static_cast<std::size_t>(pop),
            [&](std::size_t idx) {
                const int p = static_cast<int>(idx) / 2;
                const double sign = idx % 2 == 0 ? 1.0 : -1.0;
                double* cand = candidate_store.data() + idx * static_cast<std::size_t>(dim);
                const auto& eps = noise[static_cast<std::size_t>(p)];
                for (int i = 0; i < dim; ++i)
                    cand[i] = res.theta[static_cast<std::size_t>(i)] +
                              sign * cfg.sigma * eps[static_cast<std::size_t>(i)];
                std::vector<double> c(cand, cand + dim);
                fitness[idx] = fn(c);
            },
            workers);
        for (int idx = 0; idx < pop; ++idx)
            if (!std::isfinite(fitness[static_cast<std::size_t>(idx)]))
                throw std::runtime_error("es_optimize: non-finite fitness at iteration " +
                                         std::to_string(iter));

        const std::vector<double> rank = esdetail::centered_ranks(fitness);
        const double scale = cfg.alpha / (static_cast<double>(pop) * cfg.sigma);
        for (int p = 0; p < cfg.pairs; ++p) {
            const double w = rank[static_cast<std::size_t>(2 * p)] -
                             rank[static_cast<std::size_t>(2 * p + 1)];
            const auto& eps = noise[static_cast<std::size_t>(p)];
            for (int i = 0; i < dim; ++i)
                res.theta[static_cast<std::size_t>(i)] +=
                    scale * w * eps[static_cast<std::size_t>(i)];
        }

        double mean = 0.0;
        for (int idx = 0; idx < pop; ++idx) mean += fitness[static_cast<std::size_t>(idx)];
        mean /= static_cast<double>(pop);

        const double center = fn(res.theta);
        if (!std::isfinite(center))
            throw std::runtime_error("es_optimize: non-finite center fitness at iteration " +
                                     std::to_string(iter));
        best = std::max(best, center);
        res.history.push_back({iter, mean, best});
        res.final_fitness = center;
    }
    return res;
}

// Trains the tank policy on a scenario set. Deterministic in
// (config, scenarios); the worker count only changes wall time.
inline std::pair<PolicyParams, EsResult> es_train(const EsConfig& cfg,
                                                  const ScenarioSet& scenarios,
                                                  const EwhParams& params,
                                                  const PriceSchedule& sched, const EnvConfig& env,
                                                  const EwhState& initial, unsigned workers = 0) {
    PolicyParams shape = zero_policy();
    const auto fn = [&](const std::vector<double>& theta) {
        PolicyParams p;
        p.arch = shape.arch;
        p.norm = shape.norm;
        p.theta = theta;
        return policy_fitness(p, scenarios, params, sched, env, initial);
    };
    EsResult res = es_optimize(shape.arch.param_count(), fn, cfg, workers);
    PolicyParams trained;
    trained.arch = shape.arch;
    trained.norm = shape.norm;
    trained.theta = res.theta;
    return {std::move(trained), std::move(res)};
}

inline std::string history_csv(const std::vector<EsHistoryRow>& history) {
    std::string out = "iteration,mean_fitness,best_fitness\n";
    for (const auto& row : history) {
        out += std::to_string(row.iteration);
        out += ',';
        out += format_double(row.mean_fitness);
        out += ',';
        out += format_double(row.best_fitness);
        out += '\n';
    }
    return out;
}

inline void save_history(const std::vector<EsHistoryRow>& history, const std::string& path) {
    write_text_file(path, history_csv(history));
}

inline void save_policy(const PolicyParams& p, const std::string& path) {
    validate(p);
    nlohmann::json j;
    j["architecture"] = {{"input", p.arch.input},
                         {"hidden1", p.arch.hidden1},
                         {"hidden2", p.arch.hidden2},
                         {"output", p.arch.output}};
    j["normalizer"] = {{"shift", p.norm.shift}, {"scale", p.norm.scale}};
    j["theta"] = p.theta;
    write_text_file(path, j.dump(2) + "\n");
}

inline PolicyParams load_policy(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_policy: " + path + ": " + e.what());
    }
    PolicyParams p;
    try {
        const auto& a = j.at("architecture");
        p.arch.input = a.at("input").get<int>();
        p.arch.hidden1 = a.at("hidden1").get<int>();
        p.arch.hidden2 = a.at("hidden2").get<int>();
        p.arch.output = a.at("output").get<int>();
        const auto& n = j.at("normalizer");
        p.norm.shift = n.at("shift").get<std::array<double, 5>>();
        p.norm.scale = n.at("scale").get<std::array<double, 5>>();
        p.theta = j.at("theta").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_policy: " + path + ": " + e.what());
    }
    const PolicyArch expected;
    if (!(p.arch == expected))
        throw std::runtime_error("load_policy: " + path + ": unsupported architecture");
    if (static_cast<int>(p.theta.size()) != p.arch.param_count())
        throw std::runtime_error("load_policy: " + path + ": parameter vector length mismatch");
    for (double v : p.theta)
        if (!std::isfinite(v))
            throw std::runtime_error("load_policy: " + path + ": non-finite parameter");
    return p;
}

}  // namespace ewhbench
