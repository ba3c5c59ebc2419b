#pragma once

/**
 * Deterministic breadth-first search over grids, in two flavours:
 *
 *  - cell BFS: 4-connected moves, counts translations only. Backs the
 *    deployment planner and the shortest-path metric.
 *  - pose BFS: states are (cell, heading), every action costs one step.
 *    Backs the frontier explorer, whose distances are action counts.
 *
 * Tie-breaks are fixed everywhere: action preference MoveForward, then
 * TurnLeft, then TurnRight; equidistant target cells resolve to the
 * smallest (y, x).
 */

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "gridnav/world.hpp"

namespace gridnav {

using PassableFn = std::function<bool(Cell)>;

constexpr int kUnreachable = -1;

inline double euclid_cells(Cell a, Cell b) {
    double dx = a.x - b.x;
    double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

// ---------------------------------------------------------------------------
// Cell BFS (translation distance)
// ---------------------------------------------------------------------------

struct DistanceField {
    int width = 0;
    int height = 0;
    std::vector<int> dist;  // kUnreachable where not reached

    int at(Cell c) const { return dist[static_cast<size_t>(c.y) * width + c.x]; }
    bool reached(Cell c) const { return at(c) != kUnreachable; }
};

inline DistanceField cell_bfs(int width, int height, const PassableFn& passable,
                              const std::vector<Cell>& sources) {
    DistanceField f;
    f.width = width;
    f.height = height;
    f.dist.assign(static_cast<size_t>(width) * height, kUnreachable);
    std::deque<Cell> queue;
    for (const Cell& s : sources) {
        if (s.x < 0 || s.x >= width || s.y < 0 || s.y >= height) continue;
        size_t i = static_cast<size_t>(s.y) * width + s.x;
        if (f.dist[i] == kUnreachable && passable(s)) {
            f.dist[i] = 0;
            queue.push_back(s);
        }
    }
    static constexpr std::array<Cell, 4> kSteps{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};
    while (!queue.empty()) {
        Cell c = queue.front();
        queue.pop_front();
        int d = f.at(c);
        for (const Cell& s : kSteps) {
            Cell n{c.x + s.x, c.y + s.y};
            if (n.x < 0 || n.x >= width || n.y < 0 || n.y >= height) continue;
            size_t i = static_cast<size_t>(n.y) * width + n.x;
            if (f.dist[i] != kUnreachable || !passable(n)) continue;
            f.dist[i] = d + 1;
            queue.push_back(n);
        }
    }
    return f;
}

// First action along a translation-shortest path, given a distance field
// seeded at the goal set. Among next cells at dist-1, prefers straight
// ahead, then left, then right, then behind; a 180-degree turn starts
// with TurnLeft.
inline std::optional<Action> first_action_towards(const DistanceField& goal_dist, const Pose& pose,
                                                  const PassableFn& passable) {
    Cell cur = pose.cell();
    if (!goal_dist.reached(cur)) return std::nullopt;
    int d = goal_dist.at(cur);
    if (d == 0) return Action::Stop;

    struct Option {
        Heading dir;
        Action act;
    };
    const Heading h = pose.heading;
    const std::array<Option, 4> options{{
        {h, Action::MoveForward},
        {turn_left(h), Action::TurnLeft},
        {turn_right(h), Action::TurnRight},
        {turn_left(turn_left(h)), Action::TurnLeft},
    }};
    for (const Option& o : options) {
        Cell delta = heading_delta(o.dir);
        Cell n{cur.x + delta.x, cur.y + delta.y};
        if (n.x < 0 || n.x >= goal_dist.width || n.y < 0 || n.y >= goal_dist.height) continue;
        if (!passable(n)) continue;
        if (goal_dist.at(n) == d - 1) return o.act;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Pose BFS (action distance)
// ---------------------------------------------------------------------------

struct PoseDistanceField {
    int width = 0;
    int height = 0;
    std::vector<int> dist;  // (y*width + x)*4 + heading

    int at(Cell c, Heading h) const {
        return dist[(static_cast<size_t>(c.y) * width + c.x) * 4 + static_cast<size_t>(h)];
    }
    // Action distance to stand on a cell with any heading.
    int at_cell(Cell c) const {
        int best = kUnreachable;
        for (int h = 0; h < 4; ++h) {
            int d = at(c, static_cast<Heading>(h));
            if (d != kUnreachable && (best == kUnreachable || d < best)) best = d;
        }
        return best;
    }
};

namespace detail {

inline size_t pose_index(int width, Cell c, Heading h) {
    return (static_cast<size_t>(c.y) * width + c.x) * 4 + static_cast<size_t>(h);
}

}  // namespace detail

// Forward action-BFS from a pose: dist to every (cell, heading) state over
// passable cells.
inline PoseDistanceField pose_bfs(int width, int height, const PassableFn& passable,
                                  const Pose& start) {
    PoseDistanceField f;
    f.width = width;
    f.height = height;
    f.dist.assign(static_cast<size_t>(width) * height * 4, kUnreachable);

    std::deque<Pose> queue;
    f.dist[detail::pose_index(width, start.cell(), start.heading)] = 0;
    queue.push_back(start);
    while (!queue.empty()) {
        Pose p = queue.front();
        queue.pop_front();
        int d = f.at(p.cell(), p.heading);
        auto visit = [&](const Pose& n) {
            size_t i = detail::pose_index(width, n.cell(), n.heading);
            if (f.dist[i] == kUnreachable) {
                f.dist[i] = d + 1;
                queue.push_back(n);
            }
        };
        visit({p.x, p.y, turn_left(p.heading)});
        visit({p.x, p.y, turn_right(p.heading)});
        Cell delta = heading_delta(p.heading);
        Cell fwd{p.x + delta.x, p.y + delta.y};
        if (fwd.x >= 0 && fwd.x < width && fwd.y >= 0 && fwd.y < height && passable(fwd))
            visit({fwd.x, fwd.y, p.heading});
    }
    return f;
}

// Reverse action-BFS from a target cell (all four arrival headings): dist
// from every state to the target.
inline PoseDistanceField pose_bfs_to_cell(int width, int height, const PassableFn& passable,
                                          Cell target) {
    PoseDistanceField f;
    f.width = width;
    f.height = height;
    f.dist.assign(static_cast<size_t>(width) * height * 4, kUnreachable);

    std::deque<Pose> queue;
    for (int h = 0; h < 4; ++h) {
        Pose p{target.x, target.y, static_cast<Heading>(h)};
        f.dist[detail::pose_index(width, p.cell(), p.heading)] = 0;
        queue.push_back(p);
    }
    while (!queue.empty()) {
        Pose p = queue.front();
        queue.pop_front();
        int d = f.at(p.cell(), p.heading);
        auto visit = [&](const Pose& n) {
            size_t i = detail::pose_index(width, n.cell(), n.heading);
            if (f.dist[i] == kUnreachable) {
                f.dist[i] = d + 1;
                queue.push_back(n);
            }
        };
        // Predecessors by rotation: a TurnRight from left(h) or TurnLeft
        // from right(h) lands in heading h.
        visit({p.x, p.y, turn_left(p.heading)});
        visit({p.x, p.y, turn_right(p.heading)});
        // Predecessor by MoveForward: one cell behind, same heading.
        Cell delta = heading_delta(p.heading);
        Cell back{p.x - delta.x, p.y - delta.y};
        if (back.x >= 0 && back.x < width && back.y >= 0 && back.y < height && passable(back))
            visit({back.x, back.y, p.heading});
    }
    return f;
}

// First action of an action-shortest sequence toward the target the field
// was seeded from. Preference: MoveForward, TurnLeft, TurnRight.
inline std::optional<Action> first_action_pose(const PoseDistanceField& to_target,
                                               const Pose& pose, const PassableFn& passable) {
    int d = to_target.at(pose.cell(), pose.heading);
    if (d == kUnreachable) return std::nullopt;
    if (d == 0) return Action::Stop;

    Cell delta = heading_delta(pose.heading);
    Cell fwd{pose.x + delta.x, pose.y + delta.y};
    if (fwd.x >= 0 && fwd.x < to_target.width && fwd.y >= 0 && fwd.y < to_target.height &&
        passable(fwd) && to_target.at(fwd, pose.heading) == d - 1)
        return Action::MoveForward;
    if (to_target.at(pose.cell(), turn_left(pose.heading)) == d - 1) return Action::TurnLeft;
    if (to_target.at(pose.cell(), turn_right(pose.heading)) == d - 1) return Action::TurnRight;
    return std::nullopt;
}

}  // namespace gridnav
