#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ewhbench/baseline.hpp"
#include "ewhbench/csv.hpp"
#include "ewhbench/demand.hpp"
#include "ewhbench/es.hpp"
#include "ewhbench/ewh.hpp"
#include "ewhbench/mpc.hpp"

namespace ewhbench {

enum class ControllerKind { prdb, es, pf, mf, ts, opt };

inline const char* to_string(ControllerKind k) {
    switch (k) {
        case ControllerKind::prdb: return "prdb";
        case ControllerKind::es: return "es";
        case ControllerKind::pf: return "pf";
        case ControllerKind::mf: return "mf";
        case ControllerKind::ts: return "ts";
        default: return "opt";
    }
}

struct RosterEntry {
    ControllerKind kind = ControllerKind::prdb;
    int lookahead_minutes = 0;  // receding MPC kinds only

    bool is_mpc() const {
        return kind == ControllerKind::pf || kind == ControllerKind::mf ||
               kind == ControllerKind::ts;
    }
    std::string name() const {
        std::string n = to_string(kind);
        if (is_mpc()) n += "-" + std::to_string(lookahead_minutes);
        return n;
    }
};

// Roster syntax: comma-separated entries, receding MPC kinds carry a
// lookahead after a colon, e.g. "prdb,es,pf:30,pf:480,mf:240,ts:120,opt".
inline std::vector<RosterEntry> parse_roster(std::string_view text) {
    std::vector<RosterEntry> roster;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view item = text.substr(start, end - start);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (!item.empty()) {
            RosterEntry e;
            const std::size_t colon = item.find(':');
            const std::string kind(item.substr(0, colon));
            if (kind == "prdb")
                e.kind = ControllerKind::prdb;
            else if (kind == "es")
                e.kind = ControllerKind::es;
            else if (kind == "pf")
                e.kind = ControllerKind::pf;
            else if (kind == "mf")
                e.kind = ControllerKind::mf;
            else if (kind == "ts")
                e.kind = ControllerKind::ts;
            else if (kind == "opt")
                e.kind = ControllerKind::opt;
            else
                throw std::invalid_argument("parse_roster: unknown controller '" + kind + "'");
            if (e.is_mpc()) {
                if (colon == std::string_view::npos)
                    throw std::invalid_argument("parse_roster: '" + kind +
                                                "' needs a lookahead, e.g. " + kind + ":480");
                e.lookahead_minutes =
                    static_cast<int>(parse_int(item.substr(colon + 1)));
            } else if (colon != std::string_view::npos) {
                throw std::invalid_argument("parse_roster: '" + kind + "' takes no lookahead");
            }
            roster.push_back(e);
        }
        if (end == text.size()) break;
        start = end + 1;
    }
    return roster;
}

inline std::string roster_string(const std::vector<RosterEntry>& roster) {
    std::string out;
    for (const RosterEntry& e : roster) {
        if (!out.empty()) out += ',';
        out += to_string(e.kind);
        if (e.is_mpc()) out += ":" + std::to_string(e.lookahead_minutes);
    }
    return out;
}

inline std::vector<int> parse_int_list(std::string_view text) {
    std::vector<int> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view item = text.substr(start, end - start);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (!item.empty()) out.push_back(static_cast<int>(parse_int(item)));
        if (end == text.size()) break;
        start = end + 1;
    }
    return out;
}

// The shipped defaults are the benchmark protocol: a 28-day generated month,
// three training weeks, one evaluation week, seven scenarios, and a roster
// covering the reactive baseline, the trained policy, receding MPC at short
// and long lookaheads, and the one-shot schedule.
struct ExperimentConfig {
    std::uint64_t seed = 7;
    int total_days = 28;
    int train_days = 21;
    int num_scenarios = 7;
    ScenarioSource scenario_source = ScenarioSource::kmeans;
    std::vector<RosterEntry> roster = parse_roster("prdb,es,pf:30,pf:480,mf:240,ts:120,opt");
    std::vector<int> sweep_lookaheads{30, 60, 120, 240, 480};

    EwhParams params;
    PriceSchedule schedule;
    EnvConfig env;
    EsConfig es;
    DeadbandConfig deadband;

    double gap_tol = 1e-6;
    long mpc_node_limit = 10;  // per receding solve
    long opt_node_limit = 50;  // per one-shot solve
    unsigned workers = 0;      // 0 = hardware concurrency

    int eval_days() const { return total_days - train_days; }
};

inline void validate(const ExperimentConfig& c) {
    if (c.train_days < 1 || c.total_days <= c.train_days)
        throw std::invalid_argument(
            "ExperimentConfig: need at least one training day and a later evaluation window");
    if (c.num_scenarios < 1 || c.num_scenarios > c.train_days)
        throw std::invalid_argument(
            "ExperimentConfig: scenario count must be in [1, training days]");
    if (c.roster.empty()) throw std::invalid_argument("ExperimentConfig: empty roster");
    for (std::size_t i = 0; i < c.roster.size(); ++i)
        for (std::size_t j = i + 1; j < c.roster.size(); ++j)
            if (c.roster[i].name() == c.roster[j].name())
                throw std::invalid_argument("ExperimentConfig: duplicate roster entry " +
                                            c.roster[i].name());
    for (const RosterEntry& e : c.roster) {
        if (e.is_mpc() &&
            (e.lookahead_minutes < c.env.block_minutes ||
             e.lookahead_minutes % c.env.block_minutes != 0))
            throw std::invalid_argument("ExperimentConfig: bad lookahead for " + e.name());
        if (e.kind == ControllerKind::ts && c.num_scenarios < 2)
            throw std::invalid_argument(
                "ExperimentConfig: the two-stage controller needs at least two scenarios");
    }
    if (c.gap_tol < 0.0 || c.mpc_node_limit < 1 || c.opt_node_limit < 1)
        throw std::invalid_argument("ExperimentConfig: bad solver budget");
    validate(c.params);
    validate(c.schedule);
    validate(c.env);
    validate(c.es);
    validate(c.deadband, c.params);
}

// Flat declarative config: one `key = value` per line, '#' starts a comment.
// Unknown keys are errors so typos cannot silently fall back to defaults.
inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        ++line_no;
        pos = eol + 1;

        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t' ||
                                 line.front() == '\r'))
            line.remove_prefix(1);
        while (!line.empty() &&
               (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
            line.remove_suffix(1);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        std::string_view key = line.substr(0, eq);
        std::string_view val = line.substr(eq + 1);
        while (!key.empty() && key.back() == ' ') key.remove_suffix(1);
        while (!val.empty() && val.front() == ' ') val.remove_prefix(1);

        if (key == "seed")
            c.seed = static_cast<std::uint64_t>(parse_int(val));
        else if (key == "total_days")
            c.total_days = static_cast<int>(parse_int(val));
        else if (key == "train_days")
            c.train_days = static_cast<int>(parse_int(val));
        else if (key == "scenarios")
            c.num_scenarios = static_cast<int>(parse_int(val));
        else if (key == "scenario_source")
            c.scenario_source = scenario_source_from(std::string(val));
        else if (key == "roster")
            c.roster = parse_roster(val);
        else if (key == "sweep_lookaheads")
            c.sweep_lookaheads = parse_int_list(val);
        else if (key == "gap_tol")
            c.gap_tol = parse_double(val);
        else if (key == "mpc_node_limit")
            c.mpc_node_limit = parse_int(val);
        else if (key == "opt_node_limit")
            c.opt_node_limit = parse_int(val);
        else if (key == "workers")
            c.workers = static_cast<unsigned>(parse_int(val));
        else if (key == "es_pairs")
            c.es.pairs = static_cast<int>(parse_int(val));
        else if (key == "es_sigma")
            c.es.sigma = parse_double(val);
        else if (key == "es_alpha")
            c.es.alpha = parse_double(val);
        else if (key == "es_iterations")
            c.es.iterations = static_cast<int>(parse_int(val));
        else if (key == "es_seed")
            c.es.seed = static_cast<std::uint64_t>(parse_int(val));
        else if (key == "deadband_setpoint_f")
            c.deadband.setpoint_f = parse_double(val);
        else if (key == "deadband_halfwidth_f")
            c.deadband.halfwidth_f = parse_double(val);
        else if (key == "rated_power_kw")
            c.params.rated_power_kw = parse_double(val);
        else if (key == "block_minutes")
            c.env.block_minutes = static_cast<int>(parse_int(val));
        else if (key == "min_downtime_minutes")
            c.env.min_downtime_minutes = static_cast<int>(parse_int(val));
        else
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown key '" + std::string(key) + "'");
    }
    validate(c);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    return parse_config(read_text_file(path));
}

}  // namespace ewhbench
