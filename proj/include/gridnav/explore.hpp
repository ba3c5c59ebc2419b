#pragma once

/**
 * Exploration phase: loop observe -> backend decision -> execute -> merge
 * until the budget runs out, coverage is sufficient, or the backend stops.
 * The frontier backend is the deterministic stand-in policy: walk to the
 * nearest known cell that borders unexplored space.
 */

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "gridnav/backend.hpp"
#include "gridnav/render.hpp"
#include "gridnav/scenegraph.hpp"
#include "gridnav/search.hpp"
#include "gridnav/world.hpp"

namespace gridnav {

struct ExplorationBudget {
    std::optional<long> max_steps;
    double wall_clock_s = 3600.0;  // enforced only when max_steps is absent
};

struct ExplorationConfig {
    ExplorationBudget budget;
    double fov_deg = 360.0;
    int range_cells = 10;
    int void_threshold = kDefaultVoidThreshold;
    ConstraintSet constraints;
};

enum class Termination : uint8_t { BudgetExhausted, CoverageSufficient, BackendStopped };

inline std::string termination_name(Termination t) {
    switch (t) {
        case Termination::BudgetExhausted: return "BudgetExhausted";
        case Termination::CoverageSufficient: return "CoverageSufficient";
        case Termination::BackendStopped: return "BackendStopped";
    }
    return "?";
}

struct ExplorationResult {
    SceneGraph graph;
    long steps_taken = 0;
    Termination termination = Termination::BudgetExhausted;
    long backend_calls = 0;
    Pose final_pose;
};

// Propagated backend failure with the partial graph attached; callers may
// resume via explore_from().
struct ExplorationAbortedError : Error {
    ExplorationResult partial;

    ExplorationAbortedError(const std::string& msg, ExplorationResult p)
        : Error(msg), partial(std::move(p)) {}
};

// ---------------------------------------------------------------------------
// Frontier backend
// ---------------------------------------------------------------------------

/// Walks toward the nearest frontier (Navigable cell adjacent to Unknown)
/// by action-count BFS over the current scene graph. Stops when no frontier
/// remains. Tie-breaks: shortest action sequence, MoveForward over TurnLeft
/// over TurnRight, and among equidistant frontiers the smallest (y, x).
class FrontierBackend : public DecisionBackend {
  public:
    Action decide(const DecisionContext& ctx) override {
        const SceneGraph& g = *ctx.graph;
        const Pose pose = ctx.observation->pose;
        auto navigable = [&g](Cell c) { return g.navigable(c); };

        static constexpr std::array<Cell, 4> kSteps{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};
        auto is_frontier = [&](Cell c) {
            if (!g.navigable(c)) return false;
            for (const Cell& s : kSteps) {
                Cell n{c.x + s.x, c.y + s.y};
                if (g.in_bounds(n) && g.at(n) == KnownKind::Unknown) return true;
            }
            return false;
        };

        PoseDistanceField from_here = pose_bfs(g.width, g.height, navigable, pose);

        std::optional<Cell> target;
        int best = kUnreachable;
        bool standing_on_frontier = false;
        for (int y = 0; y < g.height; ++y) {
            for (int x = 0; x < g.width; ++x) {
                Cell c{x, y};
                if (!is_frontier(c)) continue;
                if (c == pose.cell()) {
                    standing_on_frontier = true;
                    continue;
                }
                int d = from_here.at_cell(c);
                if (d == kUnreachable) continue;
                if (best == kUnreachable || d < best) {  // scan order already gives (y,x) tie-break
                    best = d;
                    target = c;
                }
            }
        }

        if (!target) {
            // The cell underfoot borders unexplored space; a turn in place
            // lets the pending observation merge reveal it.
            if (standing_on_frontier) return Action::TurnLeft;
            return Action::Stop;
        }

        PoseDistanceField to_target = pose_bfs_to_cell(g.width, g.height, navigable, *target);
        auto action = first_action_pose(to_target, pose, navigable);
        return action.value_or(Action::Stop);
    }

    std::string name() const override { return "frontier"; }
};

inline std::unique_ptr<DecisionBackend> frontier_backend() {
    return std::make_unique<FrontierBackend>();
}

// ---------------------------------------------------------------------------
// Exploration loop
// ---------------------------------------------------------------------------

/// Continue exploring from an existing graph and pose. Every loop tick
/// issues exactly one backend call and one executed action, so
/// backend_calls == steps_taken on all exit paths.
inline ExplorationResult explore_from(const GridWorld& world, SceneGraph graph, Pose pose,
                                      DecisionBackend& backend, const ExplorationConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    ExplorationResult res;
    res.final_pose = pose;

    // Footprint plus initial sweep before any budget is spent.
    graph = merge(std::move(graph),
                  delta_from_observation(observe(world, pose, cfg.fov_deg, cfg.range_cells, 0)));
    if (graph.trajectory.empty()) graph.trajectory.push_back(pose);

    auto budget_left = [&]() {
        if (cfg.budget.max_steps) return res.steps_taken < *cfg.budget.max_steps;
        double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return elapsed < cfg.budget.wall_clock_s;
    };

    while (true) {
        if (coverage(graph, cfg.void_threshold).sufficient) {
            res.termination = Termination::CoverageSufficient;
            break;
        }
        if (!budget_left()) {
            res.termination = Termination::BudgetExhausted;
            break;
        }

        Observation obs =
            observe(world, pose, cfg.fov_deg, cfg.range_cells, static_cast<int>(res.steps_taken));

        std::string graph_image, fpv_image;
        DecisionContext ctx;
        ctx.constraints = &cfg.constraints;
        ctx.observation = &obs;
        ctx.graph = &graph;
        if (backend.wants_images()) {
            graph_image = render_scenegraph_ppm(graph);
            fpv_image = render_observation_ppm(obs, cfg.range_cells);
            ctx.graph_image = &graph_image;
            ctx.fpv_image = &fpv_image;
        }

        Action action;
        try {
            action = backend.decide(ctx);
        } catch (const UnparseableActionError&) {
            action = Action::Stop;  // a reply with no action ends exploration gracefully
        } catch (const BackendError& e) {
            res.graph = std::move(graph);
            res.final_pose = pose;
            throw ExplorationAbortedError(std::string("exploration backend failed: ") + e.what(),
                                          std::move(res));
        }
        ++res.backend_calls;

        auto [next_pose, outcome] = step(world, pose, action);
        ++res.steps_taken;
        pose = next_pose;

        graph = merge(std::move(graph), delta_from_observation(obs));
        SceneGraphDelta footprint;
        footprint.observed.emplace_back(pose.cell(), KnownKind::Navigable);
        graph = merge(std::move(graph), footprint);
        graph.trajectory.push_back(pose);

        if (outcome == StepOutcome::Stopped) {
            res.termination = Termination::BackendStopped;
            break;
        }
    }

    res.graph = std::move(graph);
    res.final_pose = pose;
    return res;
}

inline ExplorationResult explore(const GridWorld& world, const Pose& start,
                                 DecisionBackend& backend, const ExplorationConfig& cfg) {
    if (!world.is_free(start.cell()))
        throw ConsistencyError("explore: start pose not on a free cell");
    SceneGraph graph = SceneGraph::empty(world.width, world.height, world.cell_size_m, start);
    return explore_from(world, std::move(graph), start, backend, cfg);
}

inline nlohmann::json exploration_result_to_json(const ExplorationResult& r) {
    return {{"steps_taken", r.steps_taken},
            {"termination", termination_name(r.termination)},
            {"backend_calls", r.backend_calls},
            {"final_pose", pose_to_json(r.final_pose)},
            {"known_cells", r.graph.known_cells()},
            {"merge_conflicts", r.graph.merge_conflicts}};
}

}  // namespace gridnav
