#pragma once

/**
 * Episode scoring and suite aggregation. Distances are metric (cell count
 * times cell size); rotations are free, so path length counts only cell
 * changes. Time is the modeled backend latency carried on each record.
 */

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridnav/errors.hpp"
#include "gridnav/plan.hpp"
#include "gridnav/search.hpp"
#include "gridnav/world.hpp"

namespace gridnav {

struct EpisodeMetrics {
    std::string episode_id;
    double ne_m = 0.0;        // final-position to goal, straight line
    bool success = false;     // stopped within the success radius
    bool oracle_success = false;  // any point of the path came within it
    double spl = 0.0;             // success weighted by path efficiency
    double path_length_m = 0.0;
    double shortest_path_m = 0.0;
    long steps = 0;
    long backend_calls = 0;
    double total_seconds = 0.0;
    double avg_step_seconds = 0.0;
    double cost_usd = 0.0;
};

inline double cost_accounting(const EpisodeRecord& rec, double price_per_call_usd) {
    return rec.backend_calls * price_per_call_usd;
}

/// Score one record against the ground-truth world. The shortest path is a
/// fewest-translations route over free cells; an unreachable goal is an error
/// in the episode, not a zero.
inline EpisodeMetrics episode_metrics(const EpisodeRecord& rec, const GridWorld& world,
                                      double success_radius_m, double price_per_call_usd = 0.0) {
    if (rec.trajectory.empty()) throw ConsistencyError("episode record has an empty trajectory");
    const double cs = world.cell_size_m;
    const double radius_cells = success_radius_m / cs;

    EpisodeMetrics m;
    m.episode_id = rec.episode_id;
    m.ne_m = euclid_cells(rec.trajectory.back().cell(), rec.goal) * cs;
    m.success = rec.stopped && euclid_cells(rec.trajectory.back().cell(), rec.goal) <=
                                   radius_cells + 1e-9;
    for (const Pose& p : rec.trajectory) {
        if (euclid_cells(p.cell(), rec.goal) <= radius_cells + 1e-9) {
            m.oracle_success = true;
            break;
        }
    }

    long translations = 0;
    for (size_t i = 1; i < rec.trajectory.size(); ++i)
        if (!(rec.trajectory[i].cell() == rec.trajectory[i - 1].cell())) ++translations;
    m.path_length_m = translations * cs;

    auto passable = [&](Cell c) { return world.is_free(c); };
    DistanceField field = cell_bfs(world.width, world.height, passable, {rec.start.cell()});
    if (!world.in_bounds(rec.goal) || !passable(rec.goal) || !field.reached(rec.goal))
        throw UnreachableGoalError("episode '" + rec.episode_id + "': goal (" +
                                   std::to_string(rec.goal.x) + "," + std::to_string(rec.goal.y) +
                                   ") unreachable from start");
    m.shortest_path_m = field.at(rec.goal) * cs;

    if (!m.success)
        m.spl = 0.0;
    else if (m.shortest_path_m == 0.0)
        m.spl = 1.0;
    else
        m.spl = m.shortest_path_m / std::max(m.path_length_m, m.shortest_path_m);

    m.steps = rec.steps;
    m.backend_calls = rec.backend_calls;
    m.total_seconds = rec.total_seconds;
    m.avg_step_seconds = rec.steps > 0 ? rec.total_seconds / rec.steps : 0.0;
    m.cost_usd = cost_accounting(rec, price_per_call_usd);
    return m;
}

inline double percent_reduction(double before, double after) {
    if (before == 0.0) return 0.0;
    return 100.0 * (before - after) / before;
}

inline double round1(double v) { return std::round(v * 10.0) / 10.0; }

struct SuiteMetrics {
    long episodes = 0;
    double mean_ne_m = 0.0;
    double sr_pct = 0.0;
    double os_pct = 0.0;
    double spl_pct = 0.0;
    long steps = 0;
    long backend_calls = 0;
    double total_seconds = 0.0;
    double avg_step_seconds = 0.0;
    double cost_usd = 0.0;
    // Versus a baseline suite, when one is given.
    std::optional<double> call_reduction_pct;
    std::optional<double> time_reduction_pct;
};

inline SuiteMetrics suite_metrics(const std::vector<EpisodeMetrics>& episodes,
                                  const SuiteMetrics* baseline = nullptr) {
    SuiteMetrics s;
    s.episodes = static_cast<long>(episodes.size());
    if (episodes.empty()) return s;
    long sr = 0, os = 0;
    double spl_sum = 0.0;
    for (const EpisodeMetrics& m : episodes) {
        s.mean_ne_m += m.ne_m;
        sr += m.success ? 1 : 0;
        os += m.oracle_success ? 1 : 0;
        spl_sum += m.spl;
        s.steps += m.steps;
        s.backend_calls += m.backend_calls;
        s.total_seconds += m.total_seconds;
        s.cost_usd += m.cost_usd;
    }
    s.mean_ne_m /= s.episodes;
    s.sr_pct = 100.0 * sr / s.episodes;
    s.os_pct = 100.0 * os / s.episodes;
    s.spl_pct = 100.0 * spl_sum / s.episodes;
    s.avg_step_seconds = s.steps > 0 ? s.total_seconds / s.steps : 0.0;
    if (baseline) {
        s.call_reduction_pct = percent_reduction(static_cast<double>(baseline->backend_calls),
                                                 static_cast<double>(s.backend_calls));
        s.time_reduction_pct = percent_reduction(baseline->total_seconds, s.total_seconds);
    }
    return s;
}

inline nlohmann::json episode_metrics_to_json(const EpisodeMetrics& m) {
    return {{"episode_id", m.episode_id},
            {"ne_m", m.ne_m},
            {"success", m.success},
            {"oracle_success", m.oracle_success},
            {"spl", m.spl},
            {"path_length_m", m.path_length_m},
            {"shortest_path_m", m.shortest_path_m},
            {"steps", m.steps},
            {"backend_calls", m.backend_calls},
            {"total_seconds", m.total_seconds},
            {"avg_step_seconds", m.avg_step_seconds},
            {"cost_usd", m.cost_usd}};
}

inline nlohmann::json suite_metrics_to_json(const SuiteMetrics& s) {
    nlohmann::json j = {{"episodes", s.episodes},
                        {"mean_ne_m", s.mean_ne_m},
                        {"sr_pct", s.sr_pct},
                        {"os_pct", s.os_pct},
                        {"spl_pct", s.spl_pct},
                        {"steps", s.steps},
                        {"backend_calls", s.backend_calls},
                        {"total_seconds", s.total_seconds},
                        {"avg_step_seconds", s.avg_step_seconds},
                        {"cost_usd", s.cost_usd}};
    if (s.call_reduction_pct) j["call_reduction_pct"] = *s.call_reduction_pct;
    if (s.time_reduction_pct) j["time_reduction_pct"] = *s.time_reduction_pct;
    return j;
}

namespace detail {

inline std::string fmt(double v, int prec) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

}  // namespace detail

/// Fixed-width text table, one row per labeled suite.
inline std::string render_suite_table(
    const std::vector<std::pair<std::string, SuiteMetrics>>& rows) {
    std::vector<std::string> headers = {"run",     "episodes", "NE(m)",   "SR%",
                                        "OS%",     "SPL%",     "calls",   "time(s)",
                                        "cost($)", "calls-%",  "time-%"};
    std::vector<std::vector<std::string>> cells;
    for (const auto& [label, s] : rows) {
        cells.push_back({label, std::to_string(s.episodes), detail::fmt(s.mean_ne_m, 2),
                         detail::fmt(s.sr_pct, 1), detail::fmt(s.os_pct, 1),
                         detail::fmt(s.spl_pct, 1), std::to_string(s.backend_calls),
                         detail::fmt(s.total_seconds, 3), detail::fmt(s.cost_usd, 3),
                         s.call_reduction_pct ? detail::fmt(round1(*s.call_reduction_pct), 1) : "-",
                         s.time_reduction_pct ? detail::fmt(round1(*s.time_reduction_pct), 1) : "-"});
    }
    std::vector<size_t> widths(headers.size());
    for (size_t c = 0; c < headers.size(); ++c) {
        widths[c] = headers[c].size();
        for (const auto& row : cells) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream os;
    auto emit_row = [&](const std::vector<std::string>& row) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c) os << "  ";
            // Left-align the label column, right-align numbers.
            if (c == 0)
                os << std::left << std::setw(static_cast<int>(widths[c])) << row[c];
            else
                os << std::right << std::setw(static_cast<int>(widths[c])) << row[c];
        }
        os << "\n";
    };
    emit_row(headers);
    for (const auto& row : cells) emit_row(row);
    return os.str();
}

}  // namespace gridnav
