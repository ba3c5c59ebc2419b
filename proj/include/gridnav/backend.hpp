#pragma once

/**
 * The decision backend abstraction: anything that maps (constraints,
 * observation, scene graph, task) to one of the four actions. Stand-ins
 * (frontier explorer, shortest-path oracle) read the structured graph;
 * the remote VLM client reads the rendered images instead.
 */

#include <string>

#include "gridnav/scenegraph.hpp"
#include "gridnav/task.hpp"
#include "gridnav/world.hpp"

namespace gridnav {

struct DecisionContext {
    const ConstraintSet* constraints = nullptr;
    const Observation* observation = nullptr;
    const SceneGraph* graph = nullptr;
    // Rendered PPM bytes; filled only when the backend wants_images().
    const std::string* graph_image = nullptr;
    const std::string* fpv_image = nullptr;
    // Deployment only.
    const TaskPrompt* task = nullptr;
    const Subtask* subtask = nullptr;
    double goal_radius_cells = 0.0;
};

class DecisionBackend {
  public:
    virtual ~DecisionBackend() = default;

    virtual Action decide(const DecisionContext& ctx) = 0;

    // Rendering images every tick is wasted work for graph-reading
    // backends, so the loops ask first.
    virtual bool wants_images() const { return false; }

    virtual std::string name() const = 0;
};

}  // namespace gridnav
