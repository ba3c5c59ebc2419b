// Run one episode suite twice against a single trajectory cache. The first
// pass pays a backend call for every action; the second replays whole tasks
// from the cache and the table shows the resulting call and time reductions.
//
// Usage: demo_cache <map-file> <episodes.json>
// Region names and landmarks are read from "<map-file>.json" when present.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gridnav/metrics.hpp"
#include "gridnav/plan.hpp"

using namespace gridnav;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: demo_cache <map-file> <episodes.json>\n";
        return 2;
    }
    try {
        const fs::path map_path = argv[1];
        fs::path sidecar = map_path;
        sidecar += ".json";
        GridWorld world = load_map(read_file(map_path),
                                   fs::exists(sidecar) ? read_file(sidecar) : std::string("{}"));
        // Deployment assumes the environment was surveyed beforehand.
        SceneGraph graph = complete_scenegraph(world, world.start_pose());
        std::vector<Episode> episodes = episodes_from_json(read_file(argv[2]));

        auto backend = oracle_backend();
        PlanConfig cfg;
        TrajectoryCache cache;

        auto pass = [&](const SuiteMetrics* baseline) {
            std::vector<EpisodeMetrics> scored;
            for (const Episode& e : episodes) {
                EpisodeRecord rec = run_episode(world, graph, e, *backend, &cache, cfg);
                scored.push_back(episode_metrics(rec, world, cfg.goal_radius_m));
            }
            return suite_metrics(scored, baseline);
        };
        SuiteMetrics cold = pass(nullptr);
        SuiteMetrics warm = pass(&cold);

        std::cout << render_suite_table({{"cold", cold}, {"warm", warm}});
        std::cout << cache.size() << " cached trajectories after the cold pass\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
