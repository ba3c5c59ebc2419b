// Top-down and egocentric raster rendering.

#include <catch2/catch_amalgamated.hpp>

#include "gridnav/render.hpp"
#include "gridnav/world.hpp"
#include "support/test_oracles.hpp"

using namespace gridnav;

namespace {

// 4x3 room: navigable interior column 0..2 of rows 0..1, rest unknown.
SceneGraph tiny_graph() {
    SceneGraph g = SceneGraph::empty(4, 3, 0.25, Pose{0, 0, Heading::North});
    SceneGraphDelta d;
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) d.observed.push_back({{x, y}, KnownKind::Navigable});
    d.observed.push_back({{3, 0}, KnownKind::Obstacle});
    return merge(std::move(g), d);
}

Rgb sample(const Image& img, Cell cell, int px, int py) {
    return img.get(cell.x * kPixelsPerCell + px, cell.y * kPixelsPerCell + py);
}

}  // namespace

TEST_CASE("ppm header and payload size follow the P6 format", "[render]") {
    SceneGraph g = tiny_graph();
    std::string ppm = render_scenegraph_ppm(g);
    std::string header = "P6\n32 24\n255\n";  // 4x3 cells at 8 px/cell
    REQUIRE(ppm.substr(0, header.size()) == header);
    CHECK(ppm.size() == header.size() + 32 * 24 * 3);
}

TEST_CASE("palette separates floor, walls, unknown, start, and heading", "[render]") {
    SceneGraph g = tiny_graph();
    Image img = render_scenegraph(g);

    CHECK(sample(img, {1, 0}, 0, 0) == kFloorGray);   // navigable
    CHECK(sample(img, {3, 0}, 0, 0) == kWallWhite);   // obstacle
    CHECK(sample(img, {0, 2}, 0, 0) == kWallWhite);   // unknown renders like walls
    CHECK(sample(img, {0, 0}, 1, 1) == kStartBlack);  // start square ring corner
    // North arrow tip at the start cell (trajectory empty, pose = start).
    CHECK(sample(img, {0, 0}, 3, 0) == kPathBlue);
    CHECK(sample(img, {0, 0}, 0, 0) == kFloorGray);   // glyph corner left clear
}

TEST_CASE("trajectory draws blue segments between cell centers", "[render]") {
    SceneGraph g = tiny_graph();
    g.trajectory = {Pose{0, 0, Heading::East}, Pose{1, 0, Heading::East},
                    Pose{2, 0, Heading::East}};
    Image img = render_scenegraph(g);

    int mid = kPixelsPerCell / 2;
    // Horizontal line through the centers of (0,0) -> (2,0). The first cell's
    // pixels are skipped: the start-square ring is drawn on top of the line.
    CHECK(img.get(mid, mid) == kPathBlue);
    for (int x = kPixelsPerCell; x <= 2 * kPixelsPerCell + mid; ++x)
        REQUIRE(img.get(x, mid) == kPathBlue);
    // Off the line, floor color survives.
    CHECK(sample(img, {1, 0}, 0, 0) == kFloorGray);
    // Arrow sits on the last pose, pointing east: tip in the rightmost column.
    CHECK(sample(img, {2, 0}, kPixelsPerCell - 1, 3) == kPathBlue);
}

TEST_CASE("pure rotations draw no path pixels", "[render]") {
    SceneGraph g = tiny_graph();
    g.trajectory = {Pose{1, 0, Heading::North}, Pose{1, 0, Heading::West}};
    Image img = render_scenegraph(g);
    CHECK(sample(img, {1, 0}, 0, 0) == kFloorGray);
    CHECK(sample(img, {0, 0}, kPixelsPerCell / 2, kPixelsPerCell / 2) == kFloorGray);
}

TEST_CASE("an overlay path relocates the start square and arrow", "[render]") {
    SceneGraph g = tiny_graph();
    g.trajectory = {Pose{0, 0, Heading::North}};  // would draw start at (0,0)
    std::vector<Pose> overlay{Pose{2, 0, Heading::South}, Pose{2, 1, Heading::South}};
    Image img = render_scenegraph(g, &overlay);

    CHECK(sample(img, {2, 0}, 1, 1) == kStartBlack);  // overlay start
    CHECK(sample(img, {0, 0}, 1, 1) == kFloorGray);   // graph start untouched
    // South arrow on the overlay's last pose: tip in the bottom row.
    CHECK(sample(img, {2, 1}, 3, kPixelsPerCell - 1) == kPathBlue);
}

TEST_CASE("rendering is deterministic and matches the pinned golden", "[render]") {
    GridWorld w = testref::load_fixture_world("two_room_15.map");
    SceneGraph g = SceneGraph::empty(w.width, w.height, w.cell_size_m, w.start_pose());
    g = merge(std::move(g), delta_from_observation(observe(w, w.start_pose(), 360.0, 10)));
    g.trajectory = {w.start_pose(), Pose{2, 10, Heading::North}, Pose{2, 9, Heading::North},
                    Pose{2, 9, Heading::East}, Pose{3, 9, Heading::East}};

    std::string a = render_scenegraph_ppm(g);
    std::string b = render_scenegraph_ppm(g);
    REQUIRE(a == b);
    CHECK(testref::golden_matches("two_room_partial.ppm", a));
}

TEST_CASE("egocentric view rotates the world so the agent faces up", "[render]") {
    GridWorld w = testref::load_fixture_world("open_room_11.map");
    // Stand at (5,5) facing East; (6,5) is ahead, (5,6) is to the right.
    Pose pose{5, 5, Heading::East};
    int range = 3;
    Observation obs = observe(w, pose, 360.0, range);
    Image img = render_observation(obs, range);

    int side = 2 * range + 1;
    CHECK(img.width == side * kPixelsPerCell);
    CHECK(img.height == side * kPixelsPerCell);

    Cell center{range, range};
    Cell above{range, range - 1};
    Cell right_of{range + 1, range};
    CHECK(sample(img, above, 0, 0) == kFloorGray);     // world-east drawn upward
    CHECK(sample(img, right_of, 0, 0) == kFloorGray);  // world-south drawn right
    CHECK(sample(img, center, 3, 0) == kPathBlue);     // agent arrow always points up
    // The image corner maps to a world cell outside the radius: white.
    CHECK(img.get(0, 0) == kWallWhite);
}
