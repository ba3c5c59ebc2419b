// BFS distance fields over cells and poses, and the greedy action choosers.

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gridnav/search.hpp"
#include "gridnav/world.hpp"
#include "support/test_oracles.hpp"

using namespace gridnav;

namespace {

GridWorld random_world(uint64_t seed, int w = 14, int h = 12, int obstacles = 20) {
    return load_map(testref::ref_random_connected_map(w, h, obstacles, seed), "{}");
}

std::vector<Cell> free_cells(const GridWorld& w) {
    std::vector<Cell> out;
    for (int y = 0; y < w.height; ++y)
        for (int x = 0; x < w.width; ++x)
            if (w.is_free({x, y})) out.push_back({x, y});
    return out;
}

}  // namespace

TEST_CASE("cell distances agree with the relaxation oracle", "[search]") {
    for (uint64_t seed = 1; seed <= 40; ++seed) {
        GridWorld w = random_world(seed);
        auto passable = [&](Cell c) { return w.is_free(c); };
        auto free = free_cells(w);
        Cell src = free[seed % free.size()];

        DistanceField got = cell_bfs(w.width, w.height, passable, {src});
        auto want = testref::ref_distances(w.width, w.height, passable, {src});
        for (int y = 0; y < w.height; ++y)
            for (int x = 0; x < w.width; ++x)
                REQUIRE(got.at({x, y}) == want[static_cast<size_t>(y) * w.width + x]);
    }
}

TEST_CASE("multi-source distances take the nearest source", "[search]") {
    GridWorld w = random_world(77);
    auto passable = [&](Cell c) { return w.is_free(c); };
    auto free = free_cells(w);
    std::vector<Cell> sources = {free.front(), free.back(), free[free.size() / 2]};

    DistanceField got = cell_bfs(w.width, w.height, passable, sources);
    auto want = testref::ref_distances(w.width, w.height, passable, sources);
    for (int y = 0; y < w.height; ++y)
        for (int x = 0; x < w.width; ++x)
            REQUIRE(got.at({x, y}) == want[static_cast<size_t>(y) * w.width + x]);
}

TEST_CASE("walls are unreachable", "[search]") {
    GridWorld w = load_map("..#..\n", "{}");
    auto passable = [&](Cell c) { return w.is_free(c); };
    DistanceField f = cell_bfs(5, 1, passable, {Cell{0, 0}});
    CHECK(f.at({1, 0}) == 1);
    CHECK(f.at({2, 0}) == kUnreachable);  // the wall itself
    CHECK(f.at({3, 0}) == kUnreachable);  // and everything behind it
}

TEST_CASE("greedy steps towards the goal always shrink the distance", "[search]") {
    for (uint64_t seed = 50; seed < 70; ++seed) {
        GridWorld w = random_world(seed);
        auto passable = [&](Cell c) { return w.is_free(c); };
        auto free = free_cells(w);
        Cell goal = free[(seed * 3) % free.size()];
        DistanceField f = cell_bfs(w.width, w.height, passable, {goal});

        Pose pose{free[0].x, free[0].y, Heading::East};
        int guard = 0;
        while (f.at(pose.cell()) > 0 && guard++ < 500) {
            auto a = first_action_towards(f, pose, passable);
            REQUIRE(a.has_value());
            REQUIRE(*a != Action::Stop);
            int before = f.at(pose.cell());
            pose = step(w, pose, *a).first;
            // Rotations keep the distance; moves must reduce it.
            REQUIRE(f.at(pose.cell()) <= before);
        }
        REQUIRE(f.at(pose.cell()) == 0);
        CHECK(first_action_towards(f, pose, passable) == Action::Stop);
    }
}

TEST_CASE("action choice prefers ahead, then left, then right", "[search]") {
    // Open 3x3 room, goal reached equally well by several first moves.
    GridWorld w = load_map("...\n...\n...\n", "{}");
    auto passable = [&](Cell c) { return w.is_free(c); };

    // Goal straight ahead: move.
    DistanceField north = cell_bfs(3, 3, passable, {Cell{1, 0}});
    CHECK(first_action_towards(north, Pose{1, 1, Heading::North}, passable) ==
          Action::MoveForward);
    // Goal to the left: turn left.
    CHECK(first_action_towards(north, Pose{1, 1, Heading::East}, passable) == Action::TurnLeft);
    // Goal to the right: turn right.
    CHECK(first_action_towards(north, Pose{1, 1, Heading::West}, passable) == Action::TurnRight);
    // Goal behind: a 180 starts with a left turn.
    CHECK(first_action_towards(north, Pose{1, 1, Heading::South}, passable) == Action::TurnLeft);
}

TEST_CASE("pose distances count rotations and agree with reverse search", "[search]") {
    GridWorld w = load_map(".....\n.....\n.....\n", "{}");
    auto passable = [&](Cell c) { return w.is_free(c); };

    PoseDistanceField f = pose_bfs(5, 3, passable, Pose{0, 1, Heading::East});
    CHECK(f.at({0, 1}, Heading::East) == 0);
    CHECK(f.at({2, 1}, Heading::East) == 2);    // two forward moves
    CHECK(f.at({0, 1}, Heading::North) == 1);   // one rotation
    CHECK(f.at({0, 1}, Heading::West) == 2);    // two rotations for a 180
    CHECK(f.at({0, 0}, Heading::North) == 2);   // turn, move
    CHECK(f.at_cell({2, 1}) == 2);

    for (uint64_t seed = 5; seed < 25; ++seed) {
        GridWorld rw = random_world(seed, 10, 8, 12);
        auto rpass = [&](Cell c) { return rw.is_free(c); };
        auto free = free_cells(rw);
        Pose start{free[1].x, free[1].y, Heading::South};
        Cell target = free[(seed * 7) % free.size()];

        PoseDistanceField fwd = pose_bfs(rw.width, rw.height, rpass, start);
        PoseDistanceField rev = pose_bfs_to_cell(rw.width, rw.height, rpass, target);
        REQUIRE(fwd.at_cell(target) == rev.at(start.cell(), start.heading));
    }
}

TEST_CASE("pose-level greedy walk reaches the target in optimal actions", "[search]") {
    for (uint64_t seed = 30; seed < 45; ++seed) {
        GridWorld w = random_world(seed, 12, 10, 16);
        auto passable = [&](Cell c) { return w.is_free(c); };
        auto free = free_cells(w);
        Pose pose{free[0].x, free[0].y, Heading::North};
        Cell target = free[free.size() - 1];

        PoseDistanceField rev = pose_bfs_to_cell(w.width, w.height, passable, target);
        int expected = rev.at(pose.cell(), pose.heading);
        REQUIRE(expected != kUnreachable);

        int taken = 0;
        while (!(pose.cell() == target)) {
            auto a = first_action_pose(rev, pose, passable);
            REQUIRE(a.has_value());
            pose = step(w, pose, *a).first;
            ++taken;
            REQUIRE(taken <= expected);  // never worse than the field's promise
        }
        REQUIRE(taken == expected);
    }
}
