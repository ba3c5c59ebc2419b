// Operator entry points: explore a map into a scene graph, run deployment
// episode suites against it (optionally comparing cold vs warm cache), render
// graphs to images, and manage cache files.
//
// Exit codes: 0 success, 1 operation failure (e.g. cache validation found bad
// entries), 2 usage, 3 unreadable or invalid input data, 4 backend failure.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gridnav/cache.hpp"
#include "gridnav/explore.hpp"
#include "gridnav/metrics.hpp"
#include "gridnav/plan.hpp"
#include "gridnav/render.hpp"
#include "gridnav/vlm.hpp"

namespace fs = std::filesystem;
using namespace gridnav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitBackend = 4;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << bytes;
    if (!out) throw IoError("short write to " + path.string());
}

// Region names and landmarks ride in `<map>.json` next to the map file.
GridWorld load_world(const fs::path& map_path) {
    std::string text = read_file(map_path);
    fs::path sidecar = map_path;
    sidecar += ".json";
    std::string meta = fs::exists(sidecar) ? read_file(sidecar) : std::string("{}");
    return load_map(text, meta);
}

struct VlmFlags {
    std::string endpoint = "http://127.0.0.1:8080/v1/chat/completions";
    std::string model = "vlm-nav-1";
    double price_per_call = 0.0;
};

std::unique_ptr<DecisionBackend> make_backend(const std::string& name, const VlmFlags& vlm) {
    if (name == "frontier") return frontier_backend();
    if (name == "oracle") return oracle_backend();
    if (name == "vlm") {
        VlmConfig cfg = VlmConfig::from_env();  // VLM_API_KEY comes from the environment only
        cfg.endpoint = vlm.endpoint;
        cfg.model = vlm.model;
        cfg.price_per_call_usd = vlm.price_per_call;
        return std::make_unique<VlmBackend>(cfg);
    }
    throw CLI::ValidationError("--backend", "unknown backend '" + name + "'");
}

// ---------------------------------------------------------------------------
// explore
// ---------------------------------------------------------------------------

struct ExploreArgs {
    std::string map;
    std::string backend = "frontier";
    std::string out = "out";
    std::optional<long> max_steps;
    std::optional<double> wall_clock_secs;
    long seed = 0;
    VlmFlags vlm;
};

int cmd_explore(const ExploreArgs& args) {
    if (args.backend == "oracle") {
        std::cerr << "error: the oracle backend plans towards a task goal and cannot explore\n";
        return kExitUsage;
    }
    GridWorld world = load_world(args.map);
    auto backend = make_backend(args.backend, args.vlm);

    ExplorationConfig cfg;
    cfg.budget.max_steps = args.max_steps;
    if (args.wall_clock_secs) cfg.budget.wall_clock_s = *args.wall_clock_secs;

    ExplorationResult result;
    bool aborted = false;
    std::string abort_reason;
    try {
        result = explore(world, world.start_pose(), *backend, cfg);
    } catch (ExplorationAbortedError& e) {
        result = std::move(e.partial);
        aborted = true;
        abort_reason = e.what();
    }

    fs::path out_dir(args.out);
    write_file(out_dir / "scenegraph.json", scenegraph_save(result.graph));
    write_file(out_dir / "trajectory.ppm", render_scenegraph_ppm(result.graph));
    nlohmann::json rj = exploration_result_to_json(result);
    rj["seed"] = args.seed;
    rj["map"] = args.map;
    rj["backend"] = backend->name();
    if (aborted) rj["aborted"] = abort_reason;
    write_file(out_dir / "exploration.json", rj.dump(2) + "\n");

    if (aborted) {
        std::cerr << "error: " << abort_reason << " (partial outputs written to " << args.out
                  << ")\n";
        return kExitBackend;
    }
    std::cout << termination_name(result.termination) << ": " << result.steps_taken << " steps, "
              << result.backend_calls << " backend calls, " << result.graph.known_cells()
              << " cells known; outputs in " << args.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunArgs {
    std::string map;
    std::string scenegraph;
    std::string episodes;
    std::string backend = "oracle";
    std::string cache = "none";
    bool compare_cache = false;
    std::string out = "out";
    double goal_radius_m = 3.0;
    long max_steps = 1000;
    int jobs = 1;
    long seed = 0;
    VlmFlags vlm;
};

struct SuiteRun {
    std::vector<EpisodeRecord> records;
    std::vector<EpisodeMetrics> episode_metrics_list;
    SuiteMetrics suite;
};

SuiteRun run_suite(const GridWorld& world, const SceneGraph& graph,
                   const std::vector<Episode>& episodes, DecisionBackend& backend,
                   TrajectoryCache* cache, const PlanConfig& cfg, double price_per_call, int jobs,
                   const SuiteMetrics* baseline) {
    SuiteRun run;
    run.records.resize(episodes.size());
    run.episode_metrics_list.resize(episodes.size());

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= episodes.size()) return;
            try {
                run.records[i] = run_episode(world, graph, episodes[i], backend, cache, cfg);
                run.episode_metrics_list[i] =
                    episode_metrics(run.records[i], world, cfg.goal_radius_m, price_per_call);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    int workers = std::max(1, jobs);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    run.suite = suite_metrics(run.episode_metrics_list, baseline);
    return run;
}

nlohmann::json records_to_json(const std::vector<EpisodeRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) arr.push_back(episode_record_to_json(r));
    return arr;
}

int cmd_run(const RunArgs& args) {
    GridWorld world = load_world(args.map);
    SceneGraph graph = scenegraph_load(read_file(args.scenegraph));
    std::vector<Episode> episodes = episodes_from_json(read_file(args.episodes));
    auto backend = make_backend(args.backend, args.vlm);

    PlanConfig cfg;
    cfg.goal_radius_m = args.goal_radius_m;
    cfg.max_steps = args.max_steps;

    const bool caching = args.cache != "none";
    fs::path out_dir(args.out);

    if (args.compare_cache) {
        // Cold-then-warm inside one process, per the savings methodology:
        // the cold pass starts from an empty cache and fills it, the warm
        // pass replays against what the cold pass stored.
        TrajectoryCache cache;
        SuiteRun cold = run_suite(world, graph, episodes, *backend, caching ? &cache : nullptr,
                                  cfg, args.vlm.price_per_call, args.jobs, nullptr);
        SuiteRun warm = run_suite(world, graph, episodes, *backend, caching ? &cache : nullptr,
                                  cfg, args.vlm.price_per_call, args.jobs, &cold.suite);

        write_file(out_dir / "records_cold.json", records_to_json(cold.records).dump(2) + "\n");
        write_file(out_dir / "records_warm.json", records_to_json(warm.records).dump(2) + "\n");
        nlohmann::json mj;
        mj["seed"] = args.seed;
        mj["cold"] = suite_metrics_to_json(cold.suite);
        mj["warm"] = suite_metrics_to_json(warm.suite);
        write_file(out_dir / "metrics.json", mj.dump(2) + "\n");
        std::string table =
            render_suite_table({{"cold", cold.suite}, {"warm", warm.suite}});
        write_file(out_dir / "report.txt", table);
        std::cout << table;
        if (caching && args.cache != "none") write_file(args.cache, cache.save());
        return kExitOk;
    }

    TrajectoryCache cache;
    if (caching && fs::exists(args.cache)) cache = TrajectoryCache::load(read_file(args.cache));
    SuiteRun run = run_suite(world, graph, episodes, *backend, caching ? &cache : nullptr, cfg,
                             args.vlm.price_per_call, args.jobs, nullptr);

    write_file(out_dir / "records.json", records_to_json(run.records).dump(2) + "\n");
    nlohmann::json mj;
    mj["seed"] = args.seed;
    mj["suite"] = suite_metrics_to_json(run.suite);
    nlohmann::json per_episode = nlohmann::json::array();
    for (const auto& m : run.episode_metrics_list) per_episode.push_back(episode_metrics_to_json(m));
    mj["episodes"] = per_episode;
    write_file(out_dir / "metrics.json", mj.dump(2) + "\n");
    std::string table = render_suite_table({{args.backend, run.suite}});
    write_file(out_dir / "report.txt", table);
    std::cout << table;
    if (caching) write_file(args.cache, cache.save());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// render / cache management
// ---------------------------------------------------------------------------

int cmd_render(const std::string& scenegraph_path, const std::string& out_path) {
    SceneGraph graph = scenegraph_load(read_file(scenegraph_path));
    fs::path out = out_path.empty() ? fs::path(scenegraph_path).replace_extension(".ppm")
                                    : fs::path(out_path);
    write_file(out, render_scenegraph_ppm(graph));
    std::cout << "wrote " << out.string() << "\n";
    return kExitOk;
}

std::string describe_key(const CacheKey& key) {
    std::string s = key.tier == CacheTier::Task ? "task    " : "subtask ";
    s += "'" + key.prompt + "'";
    if (key.location)
        s += " @ (" + std::to_string(key.location->x) + "," + std::to_string(key.location->y) + ")";
    return s;
}

int cmd_cache_inspect(const std::string& cache_path) {
    TrajectoryCache cache = TrajectoryCache::load(read_file(cache_path));
    auto entries = cache.entries();
    std::cout << entries.size() << " entries\n";
    for (const auto& e : entries) {
        std::cout << "  " << describe_key(e.key) << "  " << e.traj.waypoints.size()
                  << " waypoints, source=" << source_name(e.traj.meta.source)
                  << ", created_at=" << e.traj.meta.created_at << "\n";
    }
    CacheStats st = cache.stats();
    std::cout << "stats: task " << st.task_hits << "/" << (st.task_hits + st.task_misses)
              << " hits, subtask " << st.subtask_hits << "/"
              << (st.subtask_hits + st.subtask_misses) << " hits, " << st.insertions
              << " insertions, " << st.evictions << " evictions, " << st.discontinuities
              << " discontinuities\n";
    return kExitOk;
}

int cmd_cache_validate(const std::string& cache_path, const std::string& scenegraph_path) {
    TrajectoryCache cache = TrajectoryCache::load(read_file(cache_path));
    SceneGraph graph = scenegraph_load(read_file(scenegraph_path));
    std::vector<CacheKey> bad = find_corrupt_entries(cache, graph);
    if (bad.empty()) {
        std::cout << "all " << cache.size() << " entries valid against " << scenegraph_path
                  << "\n";
        return kExitOk;
    }
    std::cerr << bad.size() << " entries leave the graph's navigable cells:\n";
    for (const auto& key : bad) std::cerr << "  " << describe_key(key) << "\n";
    return kExitFailure;
}

int cmd_cache_evict(const std::string& cache_path, long max_entries) {
    if (max_entries < 0) {
        std::cerr << "error: --max-entries must be >= 0\n";
        return kExitUsage;
    }
    TrajectoryCache cache = TrajectoryCache::load(read_file(cache_path));
    size_t evicted = cache.evict_to(static_cast<size_t>(max_entries));
    write_file(cache_path, cache.save());
    std::cout << "evicted " << evicted << " entries, " << cache.size() << " remain\n";
    return kExitOk;
}

void add_vlm_flags(CLI::App* app, VlmFlags& flags) {
    app->add_option("--vlm-endpoint", flags.endpoint, "chat-completions endpoint URL");
    app->add_option("--vlm-model", flags.model, "model name sent in requests");
    app->add_option("--price-per-call", flags.price_per_call, "modeled USD cost per backend call");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grid-world navigation: explore maps into scene graphs, then run cached episodes"};
    app.require_subcommand(1);

    ExploreArgs explore_args;
    CLI::App* explore_cmd =
        app.add_subcommand("explore", "map a world into a scene graph with a roaming backend");
    explore_cmd->add_option("--map", explore_args.map, "map file (sidecar: <map>.json)")
        ->required();
    explore_cmd->add_option("--backend", explore_args.backend, "frontier or vlm")
        ->check(CLI::IsMember({"frontier", "oracle", "vlm"}));
    explore_cmd->add_option("--out", explore_args.out, "output directory");
    explore_cmd->add_option("--max-steps", explore_args.max_steps, "step budget");
    explore_cmd->add_option("--wall-clock-secs", explore_args.wall_clock_secs,
                            "time budget when no step budget is set");
    explore_cmd->add_option("--seed", explore_args.seed, "recorded in outputs");
    add_vlm_flags(explore_cmd, explore_args.vlm);

    RunArgs run_args;
    CLI::App* run_cmd = app.add_subcommand("run", "run deployment episodes over a scene graph");
    run_cmd->add_option("--map", run_args.map, "ground-truth map file")->required();
    run_cmd->add_option("--scenegraph", run_args.scenegraph, "scene graph JSON from explore")
        ->required();
    run_cmd->add_option("--episodes", run_args.episodes, "episode suite JSON array")->required();
    run_cmd->add_option("--backend", run_args.backend, "frontier, oracle, or vlm")
        ->check(CLI::IsMember({"frontier", "oracle", "vlm"}));
    run_cmd->add_option("--cache", run_args.cache, "cache file path, or 'none' to disable");
    run_cmd->add_flag("--compare-cache", run_args.compare_cache,
                      "run the suite cold then warm and report reductions");
    run_cmd->add_option("--out", run_args.out, "output directory");
    run_cmd->add_option("--goal-radius-m", run_args.goal_radius_m, "success/subtask radius");
    run_cmd->add_option("--max-steps", run_args.max_steps, "per-episode action limit");
    run_cmd->add_option("--jobs", run_args.jobs, "parallel episode workers (1 = deterministic)")
        ->check(CLI::PositiveNumber);
    run_cmd->add_option("--seed", run_args.seed, "recorded in outputs");
    add_vlm_flags(run_cmd, run_args.vlm);

    std::string render_graph, render_out;
    CLI::App* render_cmd = app.add_subcommand("render", "render a scene graph to a PPM image");
    render_cmd->add_option("--scenegraph", render_graph, "scene graph JSON")->required();
    render_cmd->add_option("--out", render_out, "output image path (default: <graph>.ppm)");

    CLI::App* cache_cmd = app.add_subcommand("cache", "inspect or maintain a cache file");
    cache_cmd->require_subcommand(1);
    std::string cache_path, cache_graph;
    long cache_max_entries = 0;
    CLI::App* inspect_cmd = cache_cmd->add_subcommand("inspect", "list entries and stats");
    inspect_cmd->add_option("--cache", cache_path, "cache JSON file")->required();
    CLI::App* validate_cmd =
        cache_cmd->add_subcommand("validate", "check every trajectory against a scene graph");
    validate_cmd->add_option("--cache", cache_path, "cache JSON file")->required();
    validate_cmd->add_option("--scenegraph", cache_graph, "scene graph JSON")->required();
    CLI::App* evict_cmd = cache_cmd->add_subcommand("evict", "shrink the cache by policy");
    evict_cmd->add_option("--cache", cache_path, "cache JSON file")->required();
    evict_cmd->add_option("--max-entries", cache_max_entries, "entries to keep")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*explore_cmd) return cmd_explore(explore_args);
        if (*run_cmd) return cmd_run(run_args);
        if (*render_cmd) return cmd_render(render_graph, render_out);
        if (*inspect_cmd) return cmd_cache_inspect(cache_path);
        if (*validate_cmd) return cmd_cache_validate(cache_path, cache_graph);
        if (*evict_cmd) return cmd_cache_evict(cache_path, cache_max_entries);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const BackendError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ConsistencyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const UnresolvedTargetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const InvalidTrajectoryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const UnreachableGoalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
