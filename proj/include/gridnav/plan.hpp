#pragma once

/**
 * Cache-first deployment: decompose an instruction into subtasks, then each
 * tick serve the next action from (in order) the trajectory currently being
 * replayed, the task-level cache, the subtask cache, or the decision backend.
 * Fragments executed for a subtask are stored back and merged into the
 * task-level entry, so repeat runs and recombinations skip the backend.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridnav/backend.hpp"
#include "gridnav/cache.hpp"
#include "gridnav/errors.hpp"
#include "gridnav/render.hpp"
#include "gridnav/scenegraph.hpp"
#include "gridnav/search.hpp"
#include "gridnav/task.hpp"
#include "gridnav/world.hpp"

namespace gridnav {

struct PlanConfig {
    double goal_radius_m = 3.0;       // a subtask completes within this of its target
    int subtask_tolerance_cells = 2;  // location slack for subtask cache lookups
    long max_steps = 1000;
    double fov_deg = 360.0;
    int range_cells = 10;
    double secs_per_backend_call = 1.0;  // modeled latency; keeps runs reproducible
    bool use_cache = true;
};

// ---------------------------------------------------------------------------
// Instruction decomposition
// ---------------------------------------------------------------------------

namespace detail {

struct TargetCandidate {
    std::string match_text;  // normalized name or id to search for
    std::string display;     // name used in the canonical subtask prompt
    std::string id;
    bool is_landmark = false;
};

inline std::vector<TargetCandidate> target_candidates(const SceneGraph& g) {
    std::vector<TargetCandidate> out;
    for (const auto& [id, info] : g.landmarks) {
        out.push_back({normalize_prompt(info.name), info.name, id, true});
        if (normalize_prompt(id) != normalize_prompt(info.name))
            out.push_back({normalize_prompt(id), info.name, id, true});
    }
    for (const auto& [id, info] : g.regions) {
        out.push_back({normalize_prompt(info.name), info.name, id, false});
    }
    return out;
}

}  // namespace detail

/// Split an instruction on sequencing connectives and resolve each piece to
/// the longest-named landmark or region it mentions. Landmarks beat regions
/// on equal-length matches.
inline std::vector<Subtask> decompose(const std::string& instruction, const SceneGraph& graph) {
    std::string text = normalize_prompt(instruction);
    if (text.empty()) throw UnresolvedTargetError("empty instruction");

    static const std::vector<std::string> kConnectives = {" and then ", " and return ", " then "};
    std::vector<std::string> segments;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t best_at = std::string::npos;
        size_t best_len = 0;
        for (const std::string& c : kConnectives) {
            size_t at = text.find(c, pos);
            if (at == std::string::npos) continue;
            if (at < best_at || (at == best_at && c.size() > best_len)) {
                best_at = at;
                best_len = c.size();
            }
        }
        if (best_at == std::string::npos) {
            segments.push_back(text.substr(pos));
            break;
        }
        segments.push_back(text.substr(pos, best_at - pos));
        pos = best_at + best_len;
        // " and return " keeps its verb so "return to the X" still names X.
    }

    auto candidates = detail::target_candidates(graph);
    std::vector<Subtask> out;
    for (const std::string& segment : segments) {
        if (segment.empty()) continue;
        const detail::TargetCandidate* best = nullptr;
        for (const auto& cand : candidates) {
            if (cand.match_text.empty()) continue;
            if (segment.find(cand.match_text) == std::string::npos) continue;
            if (!best || cand.match_text.size() > best->match_text.size() ||
                (cand.match_text.size() == best->match_text.size() &&
                 (cand.is_landmark > best->is_landmark ||
                  (cand.is_landmark == best->is_landmark && cand.display < best->display))))
                best = &cand;
        }
        if (!best)
            throw UnresolvedTargetError("no landmark or region matches '" + segment + "'");
        Subtask st;
        st.prompt = TaskPrompt("go to the " + best->display);
        st.kind = best->is_landmark ? SubtaskKind::RoomToObject : SubtaskKind::RoomToRoom;
        st.target = best->id;
        out.push_back(std::move(st));
    }
    if (out.empty()) throw UnresolvedTargetError("instruction has no resolvable segments");
    return out;
}

/// Goal cells for a subtask, scan-ordered. Landmarks give one cell, regions
/// give every cell labeled so far.
inline std::vector<Cell> resolve_target_cells(const Subtask& st, const SceneGraph& graph) {
    std::vector<Cell> cells;
    if (st.kind == SubtaskKind::RoomToObject) {
        auto it = graph.landmarks.find(st.target);
        if (it == graph.landmarks.end())
            throw UnresolvedTargetError("landmark '" + st.target + "' not in scene graph");
        cells.push_back(it->second.cell);
    } else if (st.kind == SubtaskKind::RoomToRoom) {
        auto it = graph.regions.find(st.target);
        if (it == graph.regions.end() || it->second.cells.empty())
            throw UnresolvedTargetError("region '" + st.target + "' not in scene graph");
        cells.assign(it->second.cells.begin(), it->second.cells.end());
    } else {
        throw UnresolvedTargetError("subtask '" + st.prompt.text + "' has no graph target");
    }
    std::sort(cells.begin(), cells.end(), scan_order_less);
    return cells;
}

// ---------------------------------------------------------------------------
// Shortest-path oracle backend
// ---------------------------------------------------------------------------

/// Moves along a fewest-translations path (rotations free) over the scene
/// graph's Navigable cells; Stop within the goal radius. Deterministic
/// tie-breaks: nearest goal cell, then scan order, then forward > left > right.
class OracleBackend : public DecisionBackend {
  public:
    std::string name() const override { return "oracle"; }

    Action decide(const DecisionContext& ctx) override {
        if (!ctx.subtask || !ctx.graph || !ctx.observation)
            throw BackendError("oracle: incomplete decision context");
        const SceneGraph& g = *ctx.graph;
        const Pose pose = ctx.observation->pose;
        const double radius = ctx.goal_radius_cells;

        std::vector<Cell> goals = resolve_target_cells(*ctx.subtask, g);
        for (Cell gc : goals)
            if (euclid_cells(pose.cell(), gc) <= radius + 1e-9) return Action::Stop;

        auto passable = [&](Cell c) { return g.navigable(c); };

        // Anywhere navigable within the radius of a goal cell satisfies the
        // subtask, so all such cells are candidate destinations.
        std::vector<Cell> candidates;
        for (int y = 0; y < g.height; ++y) {
            for (int x = 0; x < g.width; ++x) {
                Cell c{x, y};
                if (!g.navigable(c)) continue;
                for (Cell gc : goals) {
                    if (euclid_cells(c, gc) <= radius + 1e-9) {
                        candidates.push_back(c);
                        break;
                    }
                }
            }
        }
        if (candidates.empty())
            throw NoPathError("oracle: no navigable cell within goal radius of '" +
                              ctx.subtask->prompt.text + "'");

        DistanceField from_pose = cell_bfs(g.width, g.height, passable, {pose.cell()});
        const Cell* target = nullptr;
        int best = kUnreachable;
        for (const Cell& c : candidates) {
            int d = from_pose.at(c);
            if (d == kUnreachable) continue;
            if (!target || d < best || (d == best && scan_order_less(c, *target))) {
                target = &c;
                best = d;
            }
        }
        if (!target)
            throw NoPathError("oracle: goal for '" + ctx.subtask->prompt.text +
                              "' unreachable from (" + std::to_string(pose.x) + "," +
                              std::to_string(pose.y) + ")");

        DistanceField to_target = cell_bfs(g.width, g.height, passable, {*target});
        auto action = first_action_towards(to_target, pose, passable);
        if (!action) throw NoPathError("oracle: no route to selected goal cell");
        return *action;
    }
};

inline std::unique_ptr<DecisionBackend> oracle_backend() {
    return std::make_unique<OracleBackend>();
}

// ---------------------------------------------------------------------------
// Per-tick planning
// ---------------------------------------------------------------------------

struct TierCounts {
    long task = 0;
    long subtask = 0;
    long backend = 0;

    friend bool operator==(const TierCounts&, const TierCounts&) = default;
};

struct PlanState {
    TaskPrompt task;
    std::vector<Subtask> subtasks;
    ConstraintSet constraints;
    size_t subtask_index = 0;
    std::vector<Pose> executed;  // pose trace including the start
    long backend_calls = 0;
    TierCounts served;  // ticks answered by each source
    bool done = false;

    // Internals of the replay/fragment machinery.
    struct ActiveReplay {
        CacheKey key;
        bool counts_as_task = false;
        std::vector<Pose> waypoints;
        size_t cursor = 0;  // index of the waypoint matching the current cell
    };
    std::optional<ActiveReplay> replay;
    std::vector<Pose> fragment;  // executed since the current subtask began
    // A fragment that finished without satisfying its subtask is ignored
    // until the subtask advances, so replay cannot ping-pong back to it.
    std::optional<CacheKey> stale_subtask_key;
    // The task tier only serves trajectories recorded by earlier episodes.
    // Without this, the partial entry this episode is accumulating would be
    // replayed back towards targets already visited. Resolved at first
    // lookup; cleared for good when a task replay runs dry.
    std::optional<bool> task_tier_usable;
    long corrupt_evictions = 0;
};

inline PlanState make_plan_state(const TaskPrompt& task, std::vector<Subtask> subtasks,
                                 const Pose& start) {
    PlanState s;
    s.task = task;
    s.subtasks = std::move(subtasks);
    s.executed = {start};
    s.fragment = {start};
    return s;
}

namespace detail {

inline bool trajectory_on_graph(const std::vector<Pose>& waypoints, const SceneGraph& g) {
    for (const Pose& p : waypoints)
        if (!g.navigable(p.cell())) return false;
    return true;
}

// One rotation bringing `from` towards `to`; 180 degrees starts left.
inline Action rotation_towards(Heading from, Heading to) {
    if (turn_right(from) == to) return Action::TurnRight;
    return Action::TurnLeft;
}

// Expand a BFS cell path into a legal pose sequence starting at `start`,
// inserting the rotations each direction change needs.
inline std::vector<Pose> expand_cell_path(const Pose& start, const std::vector<Cell>& path) {
    std::vector<Pose> out = {start};
    for (size_t i = 1; i < path.size(); ++i) {
        Cell d{path[i].x - path[i - 1].x, path[i].y - path[i - 1].y};
        Heading need = start.heading;
        for (Heading h : {Heading::North, Heading::East, Heading::South, Heading::West})
            if (heading_delta(h) == d) need = h;
        Pose at = out.back();
        while (at.heading != need) {
            at.heading = rotation_towards(at.heading, need) == Action::TurnLeft
                             ? turn_left(at.heading)
                             : turn_right(at.heading);
            out.push_back(at);
        }
        at.x = path[i].x;
        at.y = path[i].y;
        out.push_back(at);
    }
    return out;
}

// Reconstruct one shortest cell path from `from` to `to` (scan-order
// tie-break on predecessors), or empty if unreachable.
inline std::vector<Cell> shortest_cell_path(const SceneGraph& g, Cell from, Cell to) {
    auto passable = [&](Cell c) { return g.navigable(c); };
    if (!passable(from) || !passable(to)) return {};
    DistanceField field = cell_bfs(g.width, g.height, passable, {to});
    if (!field.reached(from)) return {};
    std::vector<Cell> path = {from};
    Cell cur = from;
    while (cur != to) {
        int d = field.at(cur);
        std::optional<Cell> next;
        for (Cell delta : {Cell{0, -1}, Cell{1, 0}, Cell{0, 1}, Cell{-1, 0}}) {
            Cell n{cur.x + delta.x, cur.y + delta.y};
            if (!g.in_bounds(n) || !passable(n)) continue;
            if (field.at(n) != d - 1) continue;
            if (!next || scan_order_less(n, *next)) next = n;
        }
        if (!next) return {};
        cur = *next;
        path.push_back(cur);
    }
    return path;
}

}  // namespace detail

/// Decide the next action for the current tick. The caller executes it on the
/// world and calls again with the fresh observation; `state` carries the
/// replay cursor and the fragment being recorded between calls.
inline Action plan_step(PlanState& state, const SceneGraph& graph, TrajectoryCache* cache,
                        DecisionBackend& backend, const Observation& obs, const PlanConfig& cfg) {
    const Pose pose = obs.pose;

    // --- Reconcile with what actually happened since the last tick.
    if (state.executed.empty()) {
        state.executed = {pose};
        state.fragment = {pose};
    } else if (!(pose == state.executed.back())) {
        state.executed.push_back(pose);
        state.fragment.push_back(pose);
    }
    if (state.replay) {
        auto& r = *state.replay;
        if (r.cursor + 1 < r.waypoints.size() && r.waypoints[r.cursor + 1] == pose) {
            ++r.cursor;
        } else if (!(r.waypoints[r.cursor].cell() == pose.cell())) {
            // The world disagreed with the cached trajectory (blocked move or
            // external reset): drop the entry and fall back to the backend.
            if (cache) cache->erase(r.key);
            ++state.corrupt_evictions;
            state.replay.reset();
        }
    }

    const double radius_cells = cfg.goal_radius_m / graph.cell_size_m;

    // --- Retire every subtask already satisfied at this pose; store its
    // fragment and fold it into the task-level entry.
    while (state.subtask_index < state.subtasks.size()) {
        const Subtask& st = state.subtasks[state.subtask_index];
        std::vector<Cell> goals = resolve_target_cells(st, graph);
        double best = std::numeric_limits<double>::infinity();
        for (Cell gc : goals) best = std::min(best, euclid_cells(pose.cell(), gc));
        if (best > radius_cells + 1e-9) break;

        if (cache && cfg.use_cache) {
            Trajectory frag{state.fragment, {obs.step_index, TrajectorySource::Backend}};
            cache->store(CacheKey::subtask(st.prompt, frag.start_cell()), frag);
            cache->merge_into_task(state.task, frag);
        }
        ++state.subtask_index;
        state.fragment = {pose};
        state.stale_subtask_key.reset();
        if (state.replay && !state.replay->counts_as_task) state.replay.reset();
    }
    if (state.subtask_index == state.subtasks.size()) {
        state.done = true;
        return Action::Stop;
    }
    const Subtask& subtask = state.subtasks[state.subtask_index];

    // --- Serve from the trajectory already being replayed.
    auto emit_replay = [&]() -> std::optional<Action> {
        auto& r = *state.replay;
        const Pose& here = r.waypoints[r.cursor];
        std::optional<Action> action;
        if (here == pose) {
            if (r.cursor + 1 < r.waypoints.size())
                action = action_between(pose, r.waypoints[r.cursor + 1]);
            // else: replay exhausted without completing the subtask.
        } else if (here.cell() == pose.cell()) {
            action = detail::rotation_towards(pose.heading, here.heading);
        }
        if (!action) {
            if (r.counts_as_task)
                state.task_tier_usable = false;
            else
                state.stale_subtask_key = r.key;
            state.replay.reset();
            return std::nullopt;
        }
        if (r.counts_as_task)
            ++state.served.task;
        else
            ++state.served.subtask;
        return action;
    };

    if (state.replay) {
        if (auto a = emit_replay()) return *a;
    }

    bool skip_to_backend = false;

    // --- Task-level cache: follow the stored trajectory from this cell.
    if (cache && cfg.use_cache && !skip_to_backend &&
        state.task_tier_usable.value_or(true)) {
        auto traj = cache->lookup_task(state.task);
        if (!state.task_tier_usable.has_value()) state.task_tier_usable = traj.has_value();
        if (traj && *state.task_tier_usable) {
            if (!detail::trajectory_on_graph(traj->waypoints, graph)) {
                cache->erase(CacheKey::task(state.task));
                ++state.corrupt_evictions;
                skip_to_backend = true;
            } else {
                for (size_t i = 0; i < traj->waypoints.size(); ++i) {
                    if (traj->waypoints[i].cell() == pose.cell()) {
                        state.replay = PlanState::ActiveReplay{CacheKey::task(state.task), true,
                                                               traj->waypoints, i};
                        break;
                    }
                }
                if (state.replay) {
                    if (auto a = emit_replay()) return *a;
                }
            }
        }
    }

    // --- Subtask cache: replay a fragment stored near here, walking to its
    // start first when it does not begin on this exact cell.
    if (cache && cfg.use_cache && !skip_to_backend) {
        if (auto frag =
                cache->lookup_subtask(subtask.prompt, pose.cell(), cfg.subtask_tolerance_cells)) {
            CacheKey key = CacheKey::subtask(subtask.prompt, frag->start_cell());
            if (state.stale_subtask_key && key == *state.stale_subtask_key) {
                // Already replayed to its end this subtask; the backend must
                // close the remaining distance.
            } else if (!detail::trajectory_on_graph(frag->waypoints, graph)) {
                cache->erase(key);
                ++state.corrupt_evictions;
                skip_to_backend = true;
            } else {
                std::vector<Pose> waypoints;
                if (frag->start_cell() == pose.cell()) {
                    waypoints = frag->waypoints;
                } else {
                    auto approach = detail::shortest_cell_path(graph, pose.cell(), frag->start_cell());
                    if (!approach.empty()) {
                        Trajectory lead{detail::expand_cell_path(pose, approach), frag->meta};
                        waypoints = concat_trajectories(lead, *frag).waypoints;
                    }
                    // Unreachable fragment start: leave the entry alone and
                    // let the backend answer this tick.
                }
                if (!waypoints.empty()) {
                    state.replay = PlanState::ActiveReplay{key, false, std::move(waypoints), 0};
                    if (auto a = emit_replay()) return *a;
                }
            }
        }
    }

    // --- Backend fallback.
    DecisionContext ctx;
    ctx.constraints = &state.constraints;
    ctx.observation = &obs;
    ctx.graph = &graph;
    ctx.task = &state.task;
    ctx.subtask = &subtask;
    ctx.goal_radius_cells = radius_cells;
    std::string graph_ppm, fpv_ppm;
    if (backend.wants_images()) {
        graph_ppm = render_scenegraph_ppm(graph, &state.executed);
        fpv_ppm = render_observation_ppm(obs, cfg.range_cells);
        ctx.graph_image = &graph_ppm;
        ctx.fpv_image = &fpv_ppm;
    }
    Action action;
    try {
        action = backend.decide(ctx);
    } catch (const UnparseableActionError&) {
        action = backend.decide(ctx);  // one retry, then the error propagates
    }
    ++state.backend_calls;
    ++state.served.backend;
    return action;
}

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

struct Episode {
    std::string id;
    std::string instruction;
    std::optional<Pose> start;  // world default when absent
    std::optional<Cell> goal_cell;
    std::optional<std::string> goal_landmark;
    ConstraintSet constraints;
};

inline Episode episode_from_json(const nlohmann::json& j) {
    Episode e;
    try {
        e.id = j.at("id").get<std::string>();
        e.instruction = j.at("instruction").get<std::string>();
        if (j.contains("start")) e.start = pose_from_json(j.at("start"));
        if (j.contains("goal")) {
            const auto& gj = j.at("goal");
            if (gj.contains("landmark"))
                e.goal_landmark = gj.at("landmark").get<std::string>();
            else
                e.goal_cell = Cell{gj.at("x").get<int>(), gj.at("y").get<int>()};
        }
        if (j.contains("constraints"))
            e.constraints.items = j.at("constraints").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("episode JSON: ") + ex.what());
    }
    return e;
}

inline nlohmann::json episode_to_json(const Episode& e) {
    nlohmann::json j;
    j["id"] = e.id;
    j["instruction"] = e.instruction;
    if (e.start) j["start"] = pose_to_json(*e.start);
    if (e.goal_landmark)
        j["goal"] = {{"landmark", *e.goal_landmark}};
    else if (e.goal_cell)
        j["goal"] = {{"x", e.goal_cell->x}, {"y", e.goal_cell->y}};
    if (!e.constraints.items.empty()) j["constraints"] = e.constraints.items;
    return j;
}

inline std::vector<Episode> episodes_from_json(const std::string& bytes) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("episodes JSON: ") + e.what());
    }
    if (!j.is_array()) throw ParseError("episodes JSON: expected a top-level array");
    std::vector<Episode> out;
    for (const auto& ej : j) out.push_back(episode_from_json(ej));
    return out;
}

/// The goal cell an episode is scored against.
inline Cell resolve_goal_cell(const Episode& e, const GridWorld& world) {
    if (e.goal_cell) return *e.goal_cell;
    if (e.goal_landmark) {
        auto it = world.landmarks.find(*e.goal_landmark);
        if (it == world.landmarks.end())
            throw UnresolvedTargetError("goal landmark '" + *e.goal_landmark + "' not in world");
        return it->second.cell;
    }
    throw UnresolvedTargetError("episode '" + e.id + "' has no goal");
}

struct EpisodeRecord {
    std::string episode_id;
    std::string instruction;
    Pose start;
    Cell goal{};
    std::vector<Pose> trajectory;  // start plus every cell actually entered
    bool stopped = false;
    bool step_limit_exceeded = false;
    long steps = 0;  // actions executed, including the final Stop
    long backend_calls = 0;
    TierCounts served;
    long corrupt_evictions = 0;
    double total_seconds = 0.0;  // modeled: backend_calls * secs_per_backend_call
    std::string termination;
};

inline nlohmann::json episode_record_to_json(const EpisodeRecord& r) {
    nlohmann::json j;
    j["episode_id"] = r.episode_id;
    j["instruction"] = r.instruction;
    j["start"] = pose_to_json(r.start);
    j["goal"] = {{"x", r.goal.x}, {"y", r.goal.y}};
    nlohmann::json traj = nlohmann::json::array();
    for (const Pose& p : r.trajectory) traj.push_back(pose_to_json(p));
    j["trajectory"] = traj;
    j["stopped"] = r.stopped;
    j["step_limit_exceeded"] = r.step_limit_exceeded;
    j["steps"] = r.steps;
    j["backend_calls"] = r.backend_calls;
    j["served"] = {{"task", r.served.task},
                   {"subtask", r.served.subtask},
                   {"backend", r.served.backend}};
    j["corrupt_evictions"] = r.corrupt_evictions;
    j["total_seconds"] = r.total_seconds;
    j["termination"] = r.termination;
    return j;
}

/// Execute one episode against the ground-truth world, planning over the
/// (read-only) scene graph. Running out of steps is recorded, not thrown.
inline EpisodeRecord run_episode(const GridWorld& world, const SceneGraph& graph,
                                 const Episode& episode, DecisionBackend& backend,
                                 TrajectoryCache* cache, const PlanConfig& cfg) {
    Pose pose = episode.start.value_or(world.start_pose());
    if (!world.is_free(pose.cell()))
        throw ConsistencyError("episode '" + episode.id + "': start cell is not free");

    EpisodeRecord rec;
    rec.episode_id = episode.id;
    rec.instruction = episode.instruction;
    rec.start = pose;
    rec.goal = resolve_goal_cell(episode, world);
    rec.trajectory = {pose};

    PlanState state = make_plan_state(TaskPrompt(episode.instruction),
                                      decompose(episode.instruction, graph), pose);
    state.constraints = episode.constraints;

    while (true) {
        Observation obs =
            observe(world, pose, cfg.fov_deg, cfg.range_cells, static_cast<int>(rec.steps));
        Action action = plan_step(state, graph, cache, backend, obs, cfg);
        auto [next, outcome] = step(world, pose, action);
        ++rec.steps;
        if (outcome == StepOutcome::Ok && !(next == pose)) rec.trajectory.push_back(next);
        pose = next;
        if (outcome == StepOutcome::Stopped) {
            rec.stopped = true;
            rec.termination = "Stopped";
            break;
        }
        if (rec.steps >= cfg.max_steps) {
            rec.step_limit_exceeded = true;
            rec.termination = "StepLimitExceeded";
            break;
        }
    }

    rec.backend_calls = state.backend_calls;
    rec.served = state.served;
    rec.corrupt_evictions = state.corrupt_evictions;
    rec.total_seconds = state.backend_calls * cfg.secs_per_backend_call;
    return rec;
}

}  // namespace gridnav
