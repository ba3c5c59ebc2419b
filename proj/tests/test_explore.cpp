// Exploration loop and the frontier policy.

#include <catch2/catch_amalgamated.hpp>

#include <memory>

#include "gridnav/explore.hpp"
#include "gridnav/scenegraph.hpp"
#include "gridnav/world.hpp"
#include "support/test_oracles.hpp"

using namespace gridnav;

namespace {

// Scripted stand-in backends for exercising the loop's failure paths.
class ScriptedBackend : public DecisionBackend {
  public:
    explicit ScriptedBackend(std::vector<Action> script) : script_(std::move(script)) {}

    Action decide(const DecisionContext&) override {
        if (calls_ < script_.size()) return script_[calls_++];
        ++calls_;
        return Action::Stop;
    }

    std::string name() const override { return "scripted"; }

    size_t calls() const { return calls_; }

  private:
    std::vector<Action> script_;
    size_t calls_ = 0;
};

class FailingBackend : public DecisionBackend {
  public:
    explicit FailingBackend(int ok_calls, bool unparseable = false)
        : ok_calls_(ok_calls), unparseable_(unparseable) {}

    Action decide(const DecisionContext&) override {
        if (calls_++ < ok_calls_) return Action::TurnLeft;
        if (unparseable_) throw UnparseableActionError("no action phrase in reply");
        throw TransportError("connection refused");
    }

    std::string name() const override { return "failing"; }

  private:
    int ok_calls_;
    bool unparseable_;
    int calls_ = 0;
};

ExplorationConfig with_range(int range, std::optional<long> max_steps = std::nullopt) {
    ExplorationConfig cfg;
    cfg.range_cells = range;
    cfg.budget.max_steps = max_steps;
    return cfg;
}

}  // namespace

TEST_CASE("a wide sweep can finish exploration without moving", "[explore]") {
    GridWorld w = testref::load_fixture_world("open_room_11.map");
    auto backend = frontier_backend();
    ExplorationResult r = explore(w, w.start_pose(), *backend, with_range(10));

    CHECK(r.termination == Termination::CoverageSufficient);
    CHECK(r.steps_taken == 0);
    CHECK(r.backend_calls == 0);
    CHECK(covered_fraction(r.graph, w, w.start_pose().cell()) == 1.0);
}

TEST_CASE("short range forces the frontier walk to cover the room", "[explore]") {
    GridWorld w = testref::load_fixture_world("open_room_11.map");
    auto backend = frontier_backend();
    ExplorationResult r = explore(w, w.start_pose(), *backend, with_range(3));

    CHECK(r.termination == Termination::CoverageSufficient);
    CHECK(r.steps_taken > 0);
    CHECK(r.backend_calls == r.steps_taken);
    CHECK(covered_fraction(r.graph, w, w.start_pose().cell()) == 1.0);
    CHECK(r.final_pose == r.graph.trajectory.back());
}

TEST_CASE("a zero step budget exhausts immediately", "[explore]") {
    GridWorld w = testref::load_fixture_world("two_room_15.map");
    auto backend = frontier_backend();
    ExplorationResult r = explore(w, w.start_pose(), *backend, with_range(3, 0));

    CHECK(r.termination == Termination::BudgetExhausted);
    CHECK(r.steps_taken == 0);
    CHECK(r.backend_calls == 0);
    // The initial sweep still happened.
    CHECK(r.graph.known_cells() > 0);
}

TEST_CASE("the frontier policy covers every fixture map", "[explore]") {
    for (const char* name : {"open_room_11.map", "two_room_15.map", "apartment_20.map",
                             "corridors_32.map", "office_48.map", "warehouse_64.map"}) {
        INFO(name);
        GridWorld w = testref::load_fixture_world(name);
        auto backend = frontier_backend();
        ExplorationResult r = explore(w, w.start_pose(), *backend, {});

        CHECK(r.termination == Termination::CoverageSufficient);
        CHECK(covered_fraction(r.graph, w, w.start_pose().cell()) >= 0.95);
        CHECK(r.backend_calls == r.steps_taken);
    }
}

TEST_CASE("a sealed chamber stops the walk with coverage still open", "[explore]") {
    GridWorld w = testref::load_fixture_world("void_13.map");
    auto backend = frontier_backend();
    ExplorationResult r = explore(w, w.start_pose(), *backend, {});

    // Everything reachable was seen, but the sealed 13-cell pocket holds the
    // void threshold (12) open, so the frontier policy ran dry and stopped.
    CHECK(r.termination == Termination::BackendStopped);
    CHECK(covered_fraction(r.graph, w, w.start_pose().cell()) == 1.0);
    CoverageReport cov = coverage(r.graph);
    CHECK(!cov.sufficient);
    REQUIRE(cov.interior_voids.size() == 1);
    CHECK(cov.interior_voids[0].size() == 13);
}

TEST_CASE("exploration trajectories only chain legal actions", "[explore]") {
    for (const char* name : {"two_room_15.map", "apartment_20.map", "corridors_32.map"}) {
        INFO(name);
        GridWorld w = testref::load_fixture_world(name);
        auto backend = frontier_backend();
        ExplorationResult r = explore(w, w.start_pose(), *backend, with_range(4));

        auto actions = testref::ref_actions_for(r.graph.trajectory);
        REQUIRE(actions.has_value());  // no teleports, no wall bumps
        // Every forward move lands on a cell that is actually free.
        for (const Pose& p : r.graph.trajectory) REQUIRE(w.is_free(p.cell()));
    }
}

TEST_CASE("a backend Stop ends the loop after one counted step", "[explore]") {
    GridWorld w = testref::load_fixture_world("two_room_15.map");
    ScriptedBackend backend({Action::Stop});
    ExplorationResult r = explore(w, w.start_pose(), backend, with_range(3));
    CHECK(r.termination == Termination::BackendStopped);
    CHECK(r.steps_taken == 1);
    CHECK(r.backend_calls == 1);
    CHECK(r.final_pose == w.start_pose());
}

TEST_CASE("an unparseable reply degrades to a graceful stop", "[explore]") {
    GridWorld w = testref::load_fixture_world("two_room_15.map");
    FailingBackend backend(2, /*unparseable=*/true);
    ExplorationResult r = explore(w, w.start_pose(), backend, with_range(3));

    CHECK(r.termination == Termination::BackendStopped);
    CHECK(r.steps_taken == 3);  // two turns, then the degraded Stop
    CHECK(r.backend_calls == 3);
}

TEST_CASE("transport failures abort with the partial graph attached", "[explore]") {
    GridWorld w = testref::load_fixture_world("two_room_15.map");
    FailingBackend backend(2, /*unparseable=*/false);
    try {
        explore(w, w.start_pose(), backend, with_range(3));
        FAIL("expected ExplorationAbortedError");
    } catch (const ExplorationAbortedError& e) {
        CHECK(e.partial.steps_taken == 2);
        CHECK(e.partial.backend_calls == 2);
        CHECK(e.partial.graph.known_cells() > 0);
        CHECK(e.partial.final_pose.cell() == w.start_pose().cell());  // only turned
    }
}

TEST_CASE("exploring from a blocked start is rejected", "[explore]") {
    GridWorld w = testref::load_fixture_world("open_room_11.map");
    auto backend = frontier_backend();
    CHECK_THROWS_AS(explore(w, Pose{0, 0, Heading::North}, *backend, {}), ConsistencyError);
}

TEST_CASE("exploration is deterministic end to end", "[explore]") {
    GridWorld w = testref::load_fixture_world("apartment_20.map");
    auto b1 = frontier_backend();
    auto b2 = frontier_backend();
    ExplorationResult r1 = explore(w, w.start_pose(), *b1, with_range(5));
    ExplorationResult r2 = explore(w, w.start_pose(), *b2, with_range(5));

    CHECK(r1.graph == r2.graph);
    CHECK(r1.steps_taken == r2.steps_taken);
    CHECK(scenegraph_save(r1.graph) == scenegraph_save(r2.graph));
    CHECK(exploration_result_to_json(r1) == exploration_result_to_json(r2));
}

TEST_CASE("result summaries serialize their counters", "[explore]") {
    GridWorld w = testref::load_fixture_world("open_room_11.map");
    auto backend = frontier_backend();
    ExplorationResult r = explore(w, w.start_pose(), *backend, with_range(3));
    nlohmann::json j = exploration_result_to_json(r);
    CHECK(j.at("steps_taken").get<long>() == r.steps_taken);
    CHECK(j.at("termination").get<std::string>() == "CoverageSufficient");
    CHECK(j.at("backend_calls").get<long>() == r.backend_calls);
    CHECK(j.at("known_cells").get<long>() == r.graph.known_cells());
}
