// Scene graph construction, merging, coverage analysis, and serialization.

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gridnav/explore.hpp"
#include "gridnav/scenegraph.hpp"
#include "gridnav/world.hpp"
#include "support/test_oracles.hpp"

using namespace gridnav;

namespace {

SceneGraph graph_from(const GridWorld& w, Pose at, int range = 10) {
    SceneGraph g = SceneGraph::empty(w.width, w.height, w.cell_size_m, at);
    g = merge(std::move(g), delta_from_observation(observe(w, at, 360.0, range)));
    return g;
}

}  // namespace

TEST_CASE("observation deltas carry kinds, regions, and landmarks", "[scenegraph]") {
    GridWorld w = testref::load_fixture_world("two_room_15.map");
    SceneGraph g = graph_from(w, w.start_pose());

    CHECK(g.navigable(w.start_pose().cell()));
    CHECK(g.at({0, 0}) == KnownKind::Unknown);  // out of range from the start
    REQUIRE(g.regions.count("a") == 1);
    CHECK(g.regions.at("a").name == "study");
    // The '@' start glyph carries no region letter; its neighbor does.
    CHECK(g.regions.at("a").cells.count(Cell{1, 11}) == 1);
    REQUIRE(g.landmarks.count("desk") == 1);  // clear line of sight inside the room
    CHECK(g.landmarks.at("desk").cell == Cell{3, 3});
    for (const auto& [id, lm] : g.landmarks) CHECK(g.navigable(lm.cell));
}

TEST_CASE("merge keeps existing knowledge and counts conflicts", "[scenegraph]") {
    SceneGraph g = SceneGraph::empty(4, 4, 0.25, Pose{0, 0, Heading::North});
    SceneGraphDelta d1;
    d1.observed = {{{1, 1}, KnownKind::Navigable}, {{2, 1}, KnownKind::Obstacle}};
    g = merge(std::move(g), d1);
    CHECK(g.at({1, 1}) == KnownKind::Navigable);
    CHECK(g.at({2, 1}) == KnownKind::Obstacle);
    CHECK(g.merge_conflicts == 0);

    SceneGraphDelta d2;
    d2.observed = {{{1, 1}, KnownKind::Obstacle},   // conflicting
                   {{2, 1}, KnownKind::Obstacle},   // agreeing
                   {{3, 1}, KnownKind::Navigable}}; // new
    g = merge(std::move(g), d2);
    CHECK(g.at({1, 1}) == KnownKind::Navigable);  // existing knowledge wins
    CHECK(g.at({3, 1}) == KnownKind::Navigable);
    CHECK(g.merge_conflicts == 1);
}

TEST_CASE("merge upserts landmarks and fills region names", "[scenegraph]") {
    SceneGraph g = SceneGraph::empty(4, 4, 0.25, Pose{0, 0, Heading::North});
    SceneGraphDelta d;
    d.observed = {{{1, 1}, KnownKind::Navigable}, {{2, 2}, KnownKind::Navigable}};
    d.region_hints = {{{1, 1}, "a"}};
    d.region_names = {{"a", "study"}};
    d.landmark_hints = {{"lamp", "lamp", {1, 1}}};
    g = merge(std::move(g), d);
    CHECK(g.regions.at("a").cells.count({1, 1}) == 1);
    CHECK(g.regions.at("a").name == "study");
    CHECK(g.landmarks.at("lamp").cell == Cell{1, 1});

    SceneGraphDelta d2;
    d2.region_hints = {{{2, 2}, "a"}};
    d2.region_names = {{"a", "renamed"}};  // first display name sticks
    d2.landmark_hints = {{"lamp", "desk lamp", {1, 1}}};
    g = merge(std::move(g), d2);
    CHECK(g.regions.at("a").cells.size() == 2);
    CHECK(g.regions.at("a").name == "study");
    CHECK(g.landmarks.at("lamp").name == "desk lamp");  // landmarks upsert
}

TEST_CASE("knowledge only grows across exploration merges", "[scenegraph]") {
    GridWorld w = testref::load_fixture_world("corridors_32.map");
    SceneGraph g = SceneGraph::empty(w.width, w.height, w.cell_size_m, w.start_pose());
    auto backend = frontier_backend();

    // Drive exploration manually so every intermediate graph is checkable.
    long known = 0;
    Pose pose = w.start_pose();
    for (int i = 0; i < 40; ++i) {
        Observation obs = observe(w, pose, 360.0, 10, i);
        g = merge(std::move(g), delta_from_observation(obs));
        long now = g.known_cells();
        REQUIRE(now >= known);
        known = now;
        DecisionContext ctx;
        ctx.observation = &obs;
        ctx.graph = &g;
        Action a = backend->decide(ctx);
        if (a == Action::Stop) break;
        pose = step(w, pose, a).first;
    }
    CHECK(known > 0);
}

TEST_CASE("run-length codec round-trips knowledge rows", "[scenegraph]") {
    CHECK(rle_encode({KnownKind::Unknown, KnownKind::Unknown, KnownKind::Navigable,
                      KnownKind::Obstacle}) == "2U1N1O");
    CHECK(rle_decode("2U1N1O", 4) ==
          std::vector<KnownKind>{KnownKind::Unknown, KnownKind::Unknown, KnownKind::Navigable,
                                 KnownKind::Obstacle});

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<KnownKind> v(std::uniform_int_distribution<size_t>(1, 200)(rng));
        for (auto& k : v) k = static_cast<KnownKind>(rng() % 3);
        REQUIRE(rle_decode(rle_encode(v), v.size()) == v);
    }
    CHECK_THROWS_AS(rle_decode("3U", 4), ParseError);   // too short
    CHECK_THROWS_AS(rle_decode("5U", 4), ParseError);   // too long
    CHECK_THROWS_AS(rle_decode("2X", 2), ParseError);   // bad glyph
}

TEST_CASE("coverage closes on a fully observed room", "[scenegraph]") {
    GridWorld w = testref::load_fixture_world("open_room_11.map");
    SceneGraph g = graph_from(w, w.start_pose(), 10);  // sees the whole room

    CoverageReport r = coverage(g);
    CHECK(r.periphery_closed);
    CHECK(r.interior_voids.empty());
    CHECK(r.sufficient);
    CHECK(covered_fraction(g, w, w.start_pose().cell()) == 1.0);
}

TEST_CASE("an open frontier keeps the periphery open", "[scenegraph]") {
    GridWorld w = testref::load_fixture_world("two_room_15.map");
    SceneGraph g = graph_from(w, w.start_pose(), 3);  // sees only part of the study

    CoverageReport r = coverage(g);
    CHECK(!r.periphery_closed);
    CHECK(!r.sufficient);
    CHECK(covered_fraction(g, w, w.start_pose().cell()) < 1.0);
}

TEST_CASE("sealed pockets count as interior voids with a size threshold", "[scenegraph]") {
    GridWorld w = testref::load_fixture_world("void_13.map");
    auto backend = frontier_backend();
    ExplorationResult res = explore(w, w.start_pose(), *backend, {});

    // Exploration walked everything reachable; the sealed chamber stays dark.
    CoverageReport r = coverage(res.graph, 12);
    CHECK(r.periphery_closed);
    REQUIRE(r.interior_voids.size() == 1);
    CHECK(r.interior_voids[0].size() == 13);
    CHECK(!r.sufficient);                       // 13 >= threshold 12
    CHECK(coverage(res.graph, 14).sufficient);  // 13 < threshold 14

    // Against ground truth, every cell reachable from the start is known.
    CHECK(covered_fraction(res.graph, w, w.start_pose().cell()) == 1.0);
}

TEST_CASE("interior void detection matches a component-count oracle", "[scenegraph]") {
    GridWorld w = testref::load_fixture_world("void_13.map");
    auto backend = frontier_backend();
    SceneGraph g = explore(w, w.start_pose(), *backend, {}).graph;

    auto unknown = [&](Cell c) { return g.at(c) == KnownKind::Unknown; };
    auto comps = testref::ref_components(g.width, g.height, unknown);
    // Separate border-touching components (exterior) from sealed ones.
    size_t interior = 0, interior_cells = 0;
    for (const auto& comp : comps) {
        bool touches_border = false;
        for (const auto& c : comp)
            if (c.x == 0 || c.y == 0 || c.x == g.width - 1 || c.y == g.height - 1)
                touches_border = true;
        if (!touches_border) {
            ++interior;
            interior_cells += comp.size();
        }
    }
    CoverageReport r = coverage(g);
    REQUIRE(r.interior_voids.size() == interior);
    size_t got_cells = 0;
    for (const auto& v : r.interior_voids) got_cells += v.cells.size();
    REQUIRE(got_cells == interior_cells);
}

TEST_CASE("double-labeling a cell across regions is a conflict", "[scenegraph]") {
    SceneGraph g = SceneGraph::empty(3, 3, 0.25, Pose{0, 0, Heading::North});
    SceneGraphDelta d;
    d.observed = {{{1, 1}, KnownKind::Navigable}};
    d.region_hints = {{{1, 1}, "a"}};
    g = merge(std::move(g), d);
    CHECK_THROWS_AS(label_regions(g, {{{1, 1}, "b"}}), ConflictError);
}

TEST_CASE("scene graphs round-trip through JSON byte-identically", "[scenegraph]") {
    GridWorld w = testref::load_fixture_world("apartment_20.map");
    auto backend = frontier_backend();
    SceneGraph g = explore(w, w.start_pose(), *backend, {}).graph;

    std::string bytes = scenegraph_save(g);
    SceneGraph back = scenegraph_load(bytes);
    CHECK(back == g);
    CHECK(scenegraph_save(back) == bytes);
    CHECK_THROWS_AS(scenegraph_load("{"), ParseError);
    CHECK_THROWS_AS(scenegraph_load("{}"), ParseError);
}

TEST_CASE("a complete graph mirrors the ground-truth world", "[scenegraph]") {
    GridWorld w = testref::load_fixture_world("apartment_20.map");
    SceneGraph g = complete_scenegraph(w, w.start_pose());
    for (int y = 0; y < w.height; ++y) {
        for (int x = 0; x < w.width; ++x) {
            Cell c{x, y};
            REQUIRE(g.at(c) == (w.is_free(c) ? KnownKind::Navigable : KnownKind::Obstacle));
        }
    }
    CHECK(g.landmarks.size() == w.landmarks.size());
    CHECK(g.regions.size() == 3);
    CHECK(covered_fraction(g, w, w.start_pose().cell()) == 1.0);
}
