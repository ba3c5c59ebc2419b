// Survey a map with the frontier policy, then save the scene graph and a
// top-down rendering of the walk.
//
// Usage: demo_explore <map-file> [out-dir]
// Region names and landmarks are read from "<map-file>.json" when present.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gridnav/explore.hpp"
#include "gridnav/render.hpp"

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

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << bytes;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2 || argc > 3) {
        std::cerr << "usage: demo_explore <map-file> [out-dir]\n";
        return 2;
    }
    const fs::path map_path = argv[1];
    const fs::path out_dir = argc == 3 ? argv[2] : "demo_out";
    try {
        fs::path sidecar = map_path;
        sidecar += ".json";
        GridWorld world = load_map(read_file(map_path),
                                   fs::exists(sidecar) ? read_file(sidecar) : std::string("{}"));

        auto backend = frontier_backend();
        ExplorationResult result = explore(world, world.start_pose(), *backend, {});

        fs::create_directories(out_dir);
        write_file(out_dir / "scenegraph.json", scenegraph_save(result.graph));
        write_file(out_dir / "trajectory.ppm", render_scenegraph_ppm(result.graph));

        std::cout << termination_name(result.termination) << " after " << result.steps_taken
                  << " steps (" << result.backend_calls << " backend calls); "
                  << result.graph.known_cells() << " cells known, "
                  << covered_fraction(result.graph, world, world.start_pose().cell()) * 100.0
                  << "% of the reachable floor covered\n"
                  << "wrote " << (out_dir / "scenegraph.json").string() << " and "
                  << (out_dir / "trajectory.ppm").string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
