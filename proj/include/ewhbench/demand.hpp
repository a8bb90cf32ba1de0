#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ewhbench/csv.hpp"

namespace ewhbench {

constexpr int kMinutesPerDay = 1440;

// One-minute hot water demand series in gal/min. Length is always a whole
// number of days.
struct DemandTrace {
    std::vector<double> gpm;
    std::string label;

    int days() const { return static_cast<int>(gpm.size()) / kMinutesPerDay; }
};

inline void validate_trace(const DemandTrace& trace) {
    if (trace.gpm.empty() || trace.gpm.size() % kMinutesPerDay != 0)
        throw std::invalid_argument("demand trace length must be a positive multiple of 1440");
    for (double v : trace.gpm) {
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("demand trace values must be finite and non-negative");
    }
}

// A household fixture drawing hot water. Event counts per day are Poisson,
// event start times follow the hourly weight profile, durations and
// intensities are clamped normal draws.
struct FixtureSpec {
    std::string name;
    double events_per_day = 0.0;
    double duration_mean_min = 1.0;
    double duration_sd_min = 0.0;
    double intensity_mean_gpm = 1.0;
    double intensity_sd_gpm = 0.0;
    std::array<double, 24> hour_weights{};
};

struct FixtureModel {
    std::vector<FixtureSpec> fixtures;

    static FixtureModel household_defaults();
};

inline std::array<double, 24> normalized_hours(std::initializer_list<double> raw) {
    std::array<double, 24> w{};
    if (raw.size() != 24) throw std::invalid_argument("hour profile needs 24 weights");
    double total = 0.0;
    std::size_t i = 0;
    for (double v : raw) {
        if (v < 0.0) throw std::invalid_argument("hour weights must be non-negative");
        w[i++] = v;
        total += v;
    }
    if (total <= 0.0) throw std::invalid_argument("hour weights must not all be zero");
    for (double& v : w) v /= total;
    return w;
}

// Two-person household. Parameters are tuned so that 28-day daily-gallon
// statistics land near a 58 gal/day mean with a std above 20.
inline FixtureModel FixtureModel::household_defaults() {
    FixtureModel m;
    const std::array<double, 24> waking = normalized_hours(
        {0.2, 0.1, 0.1, 0.1, 0.3, 1.0, 3.0, 4.0, 3.0, 2.0, 1.5, 1.5,
         1.5, 1.2, 1.0, 1.0, 1.5, 2.5, 3.5, 3.5, 3.0, 2.5, 1.5, 0.6});
    const std::array<double, 24> bathing = normalized_hours(
        {0.1, 0.0, 0.0, 0.0, 0.2, 1.5, 4.0, 5.0, 3.0, 1.0, 0.5, 0.4,
         0.4, 0.3, 0.3, 0.4, 0.6, 1.2, 2.5, 3.5, 3.0, 2.0, 0.8, 0.3});
    const std::array<double, 24> appliance = normalized_hours(
        {0.1, 0.1, 0.1, 0.1, 0.1, 0.3, 1.0, 2.0, 2.5, 2.0, 1.5, 1.5,
         1.5, 1.2, 1.0, 1.0, 1.2, 2.0, 3.0, 3.5, 3.0, 2.0, 1.0, 0.4});
    m.fixtures = {
        {"faucet", 22.0, 0.8, 0.5, 0.8, 0.25, waking},
        {"shower", 1.8, 7.8, 2.5, 1.8, 0.35, bathing},
        {"bathtub", 0.18, 12.0, 3.0, 2.5, 0.5, bathing},
        {"clothes_washer", 0.8, 10.0, 2.0, 1.2, 0.3, appliance},
        {"dish_washer", 0.65, 8.0, 1.5, 0.8, 0.2, appliance},
    };
    return m;
}

// Deterministic given (fixtures, days, seed): one generator, fixed draw
// order (day-major, fixture-major, event-major). Overlapping flows add.
// Events running past the final minute are clipped.
inline DemandTrace generate_demand(const FixtureModel& model, int days, std::uint64_t seed) {
    if (days < 1) throw std::invalid_argument("generate_demand: days must be >= 1");
    DemandTrace trace;
    trace.gpm.assign(static_cast<std::size_t>(days) * kMinutesPerDay, 0.0);
    trace.label = "synthetic_seed" + std::to_string(seed);
    std::mt19937_64 rng(seed);
    const std::size_t total = trace.gpm.size();
    for (int day = 0; day < days; ++day) {
        for (const FixtureSpec& fx : model.fixtures) {
            if (fx.events_per_day <= 0.0) continue;
            std::poisson_distribution<int> count_dist(fx.events_per_day);
            std::discrete_distribution<int> hour_dist(fx.hour_weights.begin(),
                                                      fx.hour_weights.end());
            std::uniform_int_distribution<int> minute_dist(0, 59);
            std::normal_distribution<double> duration_dist(fx.duration_mean_min,
                                                           fx.duration_sd_min);
            std::normal_distribution<double> intensity_dist(fx.intensity_mean_gpm,
                                                            fx.intensity_sd_gpm);
            const int events = count_dist(rng);
            for (int e = 0; e < events; ++e) {
                const int hour = hour_dist(rng);
                const int minute = minute_dist(rng);
                const int duration =
                    std::max(1, static_cast<int>(std::lround(duration_dist(rng))));
                const double intensity = std::max(0.05, intensity_dist(rng));
                const std::size_t start = static_cast<std::size_t>(day) * kMinutesPerDay +
                                          static_cast<std::size_t>(hour) * 60 +
                                          static_cast<std::size_t>(minute);
                for (int t = 0; t < duration; ++t) {
                    const std::size_t idx = start + static_cast<std::size_t>(t);
                    if (idx >= total) break;
                    trace.gpm[idx] += intensity;
                }
            }
        }
    }
    return trace;
}

inline void save_trace(const DemandTrace& trace, const std::string& path) {
    std::string out = "minute_index,gpm\n";
    for (std::size_t i = 0; i < trace.gpm.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_double(trace.gpm[i]);
        out += '\n';
    }
    write_text_file(path, out);
}

inline DemandTrace load_trace(const std::string& path) {
    const CsvTable table = read_csv(path);
    if (table.header.size() != 2)
        throw std::runtime_error("load_trace: expected header minute_index,gpm in " + path);
    DemandTrace trace;
    trace.label = std::filesystem::path(path).stem().string();
    trace.gpm.reserve(table.rows.size());
    std::size_t expect = 0;
    for (const auto& row : table.rows) {
        if (row.size() != 2)
            throw std::runtime_error("load_trace: malformed row in " + path);
        const long long idx = parse_int(row[0]);
        if (idx != static_cast<long long>(expect))
            throw std::runtime_error("load_trace: minute_index gap in " + path);
        trace.gpm.push_back(parse_double(row[1]));
        ++expect;
    }
    validate_trace(trace);
    return trace;
}

inline std::vector<DemandTrace> split_days(const DemandTrace& trace) {
    validate_trace(trace);
    std::vector<DemandTrace> out;
    const int n = trace.days();
    out.reserve(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) {
        DemandTrace day;
        const auto begin = trace.gpm.begin() + static_cast<std::ptrdiff_t>(d) * kMinutesPerDay;
        day.gpm.assign(begin, begin + kMinutesPerDay);
        day.label = trace.label + "_day" + std::to_string(d);
        out.push_back(std::move(day));
    }
    return out;
}

// One-day demand scenarios with probability masses summing to 1.
struct ScenarioSet {
    std::vector<DemandTrace> traces;
    std::vector<double> probs;

    int size() const { return static_cast<int>(traces.size()); }
};

inline void validate_scenarios(const ScenarioSet& set) {
    if (set.traces.empty() || set.traces.size() != set.probs.size())
        throw std::invalid_argument("scenario set needs matching non-empty traces and probs");
    double total = 0.0;
    for (double p : set.probs) {
        if (!(p >= 0.0)) throw std::invalid_argument("scenario probabilities must be >= 0");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("scenario probabilities must sum to 1");
    for (const auto& t : set.traces) validate_trace(t);
}

inline ScenarioSet historical_scenarios(const std::vector<DemandTrace>& days, int n) {
    if (n < 1 || n > static_cast<int>(days.size()))
        throw std::invalid_argument("historical_scenarios: n out of range");
    ScenarioSet set;
    set.traces.assign(days.end() - n, days.end());
    set.probs.assign(static_cast<std::size_t>(n), 1.0 / n);
    return set;
}

namespace detail {

inline double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

}  // namespace detail

// Clustering output with enough internal state for independent checks:
// final centroids, the assignment of every day, and the within-cluster sum
// of squares after each Lloyd assignment pass.
struct KmeansResult {
    ScenarioSet set;
    std::vector<int> assignments;
    std::vector<std::vector<double>> centroids;
    std::vector<double> wcss_history;
};

// Lloyd's algorithm with k-means++ seeding on raw 1440-dim day vectors.
// Representatives are actual member days (closest to each final centroid),
// reported in ascending day order with equal weights. All ties break toward
// the lowest index so the result is deterministic.
inline KmeansResult kmeans_scenarios_detail(const std::vector<DemandTrace>& days, int k,
                                            std::uint64_t seed) {
    const int n = static_cast<int>(days.size());
    if (k < 1 || k > n) throw std::invalid_argument("kmeans_scenarios: k out of range");
    for (const auto& d : days)
        if (d.gpm.size() != kMinutesPerDay)
            throw std::invalid_argument("kmeans_scenarios: each trace must be one day");

    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> centroids;
    centroids.reserve(static_cast<std::size_t>(k));
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);

    // k-means++ seeding: first center uniform, later centers sampled with
    // probability proportional to squared distance to the nearest center.
    {
        std::uniform_int_distribution<int> first(0, n - 1);
        const int f = first(rng);
        centroids.push_back(days[static_cast<std::size_t>(f)].gpm);
        chosen[static_cast<std::size_t>(f)] = true;
    }
    std::vector<double> d2(static_cast<std::size_t>(n), 0.0);
    while (static_cast<int>(centroids.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids)
                best = std::min(best, detail::sq_distance(days[static_cast<std::size_t>(i)].gpm, c));
            d2[static_cast<std::size_t>(i)] = best;
            total += best;
        }
        int pick = -1;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (int i = 0; i < n; ++i) {
                target -= d2[static_cast<std::size_t>(i)];
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) pick = n - 1;
        }
        if (pick < 0 || chosen[static_cast<std::size_t>(pick)]) {
            pick = -1;
            for (int i = 0; i < n; ++i) {
                if (!chosen[static_cast<std::size_t>(i)]) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) throw std::logic_error("kmeans_scenarios: no unchosen point left");
        }
        centroids.push_back(days[static_cast<std::size_t>(pick)].gpm);
        chosen[static_cast<std::size_t>(pick)] = true;
    }

    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    std::vector<double> wcss_history;
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        double wcss_now = 0.0;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = detail::sq_distance(days[static_cast<std::size_t>(i)].gpm, centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double d = detail::sq_distance(days[static_cast<std::size_t>(i)].gpm,
                                                     centroids[static_cast<std::size_t>(c)]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            wcss_now += best_d;
            if (assign[static_cast<std::size_t>(i)] != best) {
                assign[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        wcss_history.push_back(wcss_now);
        if (!changed) break;

        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            const int c = assign[static_cast<std::size_t>(i)];
            ++counts[static_cast<std::size_t>(c)];
            const auto& v = days[static_cast<std::size_t>(i)].gpm;
            auto& cen = centroids[static_cast<std::size_t>(c)];
            for (std::size_t j = 0; j < v.size(); ++j) cen[j] += v[j];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                for (double& v : centroids[static_cast<std::size_t>(c)])
                    v /= counts[static_cast<std::size_t>(c)];
            } else {
                // Empty cluster: restart it from the point farthest from its
                // current centroid assignment.
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const int a = assign[static_cast<std::size_t>(i)];
                    const double d = detail::sq_distance(
                        days[static_cast<std::size_t>(i)].gpm, centroids[static_cast<std::size_t>(a)]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centroids[static_cast<std::size_t>(c)] = days[static_cast<std::size_t>(far)].gpm;
            }
        }
    }

    // Sync assignments with the final centroids in case the loop stopped at
    // the iteration cap right after a centroid update.
    {
        double wcss_now = 0.0;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = detail::sq_distance(days[static_cast<std::size_t>(i)].gpm, centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double d = detail::sq_distance(days[static_cast<std::size_t>(i)].gpm,
                                                     centroids[static_cast<std::size_t>(c)]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            assign[static_cast<std::size_t>(i)] = best;
            wcss_now += best_d;
        }
        if (wcss_history.empty() || wcss_now != wcss_history.back())
            wcss_history.push_back(wcss_now);
    }

    std::vector<int> reps;
    reps.reserve(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (assign[static_cast<std::size_t>(i)] != c) continue;
            const double d = detail::sq_distance(days[static_cast<std::size_t>(i)].gpm,
                                                 centroids[static_cast<std::size_t>(c)]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        if (best < 0) throw std::logic_error("kmeans_scenarios: empty final cluster");
        reps.push_back(best);
    }
    std::sort(reps.begin(), reps.end());

    KmeansResult result;
    for (int r : reps) result.set.traces.push_back(days[static_cast<std::size_t>(r)]);
    result.set.probs.assign(static_cast<std::size_t>(k), 1.0 / k);
    result.assignments = std::move(assign);
    result.centroids = std::move(centroids);
    result.wcss_history = std::move(wcss_history);
    return result;
}

inline ScenarioSet kmeans_scenarios(const std::vector<DemandTrace>& days, int k,
                                    std::uint64_t seed) {
    return kmeans_scenarios_detail(days, k, seed).set;
}

// Within-cluster sum of squares of days against the best of the given
// centers. Used as an independent check of clustering output.
inline double wcss(const std::vector<DemandTrace>& days,
                   const std::vector<std::vector<double>>& centers) {
    double total = 0.0;
    for (const auto& d : days) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) best = std::min(best, detail::sq_distance(d.gpm, c));
        total += best;
    }
    return total;
}

inline DemandTrace mean_forecast(const ScenarioSet& set) {
    validate_scenarios(set);
    const std::size_t len = set.traces[0].gpm.size();
    for (const auto& t : set.traces)
        if (t.gpm.size() != len)
            throw std::invalid_argument("mean_forecast: scenario lengths differ");
    DemandTrace mean;
    mean.label = "mean_forecast";
    mean.gpm.assign(len, 0.0);
    for (std::size_t s = 0; s < set.traces.size(); ++s) {
        const double p = set.probs[s];
        const auto& v = set.traces[s].gpm;
        for (std::size_t i = 0; i < len; ++i) mean.gpm[i] += p * v[i];
    }
    return mean;
}

// Scenario sets persist as a JSON manifest naming per-scenario trace CSVs
// stored next to it.
inline void save_scenarios(const ScenarioSet& set, const std::string& dir,
                           const std::string& stem) {
    validate_scenarios(set);
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["probs"] = set.probs;
    std::vector<std::string> files;
    for (std::size_t i = 0; i < set.traces.size(); ++i) {
        const std::string name = stem + "_s" + std::to_string(i) + ".csv";
        save_trace(set.traces[i], (std::filesystem::path(dir) / name).string());
        files.push_back(name);
    }
    j["traces"] = files;
    write_text_file((std::filesystem::path(dir) / (stem + ".json")).string(), j.dump(2) + "\n");
}

inline ScenarioSet load_scenarios(const std::string& json_path) {
    const nlohmann::json j = nlohmann::json::parse(read_text_file(json_path));
    ScenarioSet set;
    set.probs = j.at("probs").get<std::vector<double>>();
    const auto dir = std::filesystem::path(json_path).parent_path();
    for (const auto& name : j.at("traces").get<std::vector<std::string>>())
        set.traces.push_back(load_trace((dir / name).string()));
    validate_scenarios(set);
    return set;
}

}  // namespace ewhbench
