#pragma once

/**
 * Top-down scene graph built during exploration: a labeled occupancy grid
 * (Unknown / Navigable / Obstacle) plus semantic regions, landmarks, and
 * the exploration trajectory. Persisted as JSON with a run-length-encoded
 * knowledge grid.
 */

#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridnav/errors.hpp"
#include "gridnav/search.hpp"
#include "gridnav/world.hpp"

namespace gridnav {

enum class KnownKind : uint8_t { Unknown, Navigable, Obstacle };

struct RegionInfo {
    std::string name;
    std::set<Cell> cells;

    friend bool operator==(const RegionInfo&, const RegionInfo&) = default;
};

struct LandmarkInfo {
    std::string name;
    Cell cell;

    friend bool operator==(const LandmarkInfo&, const LandmarkInfo&) = default;
};

struct SceneGraph {
    int width = 0;
    int height = 0;
    double cell_size_m = 0.25;
    std::vector<KnownKind> knowledge;  // row-major
    std::map<std::string, RegionInfo> regions;
    std::map<std::string, LandmarkInfo> landmarks;
    Pose start;
    std::vector<Pose> trajectory;  // exploration path so far

    // Accounting, not persisted.
    long merge_conflicts = 0;

    static SceneGraph empty(int width, int height, double cell_size_m, const Pose& start) {
        SceneGraph g;
        g.width = width;
        g.height = height;
        g.cell_size_m = cell_size_m;
        g.start = start;
        g.knowledge.assign(static_cast<size_t>(width) * height, KnownKind::Unknown);
        return g;
    }

    bool in_bounds(Cell c) const {
        return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height;
    }

    KnownKind at(Cell c) const { return knowledge[static_cast<size_t>(c.y) * width + c.x]; }

    bool navigable(Cell c) const { return in_bounds(c) && at(c) == KnownKind::Navigable; }

    long known_cells() const {
        long n = 0;
        for (KnownKind k : knowledge)
            if (k != KnownKind::Unknown) ++n;
        return n;
    }

    // Region id covering a cell, empty if none.
    std::string region_of(Cell c) const {
        for (const auto& [id, info] : regions)
            if (info.cells.count(c)) return id;
        return {};
    }

    friend bool operator==(const SceneGraph& a, const SceneGraph& b) {
        return a.width == b.width && a.height == b.height && a.cell_size_m == b.cell_size_m &&
               a.knowledge == b.knowledge && a.regions == b.regions &&
               a.landmarks == b.landmarks && a.start == b.start && a.trajectory == b.trajectory;
    }
};

struct SceneGraphDelta {
    std::vector<std::pair<Cell, KnownKind>> observed;
    std::vector<std::pair<Cell, std::string>> region_hints;  // cell -> region id
    std::vector<LandmarkSighting> landmark_hints;
    std::map<std::string, std::string> region_names;  // id -> display name
};

struct VoidInfo {
    std::vector<Cell> cells;

    int size() const { return static_cast<int>(cells.size()); }
};

struct CoverageReport {
    bool periphery_closed = false;
    std::vector<VoidInfo> interior_voids;
    // Only meaningful when computed against ground truth; see covered_fraction().
    double covered_fraction = -1.0;
    bool sufficient = false;
};

constexpr int kDefaultVoidThreshold = 12;  // cells, one success-radius worth of area

// ---------------------------------------------------------------------------
// Building
// ---------------------------------------------------------------------------

inline SceneGraphDelta delta_from_observation(const Observation& obs) {
    SceneGraphDelta d;
    d.observed.reserve(obs.visible_cells.size());
    for (const VisibleCell& v : obs.visible_cells) {
        d.observed.emplace_back(v.cell, v.kind == CellKind::Free ? KnownKind::Navigable
                                                                 : KnownKind::Obstacle);
        if (!v.region.empty()) d.region_hints.emplace_back(v.cell, v.region);
    }
    d.landmark_hints = obs.visible_landmarks;
    d.region_names = obs.region_names;
    return d;
}

/// Union merge: Unknown cells adopt the delta's kind; on disagreement the
/// existing value wins and the conflict is counted.
inline SceneGraph merge(SceneGraph graph, const SceneGraphDelta& delta) {
    for (const auto& [cell, kind] : delta.observed) {
        if (!graph.in_bounds(cell)) throw ConsistencyError("merge: delta cell out of bounds");
        KnownKind& k = graph.knowledge[static_cast<size_t>(cell.y) * graph.width + cell.x];
        if (k == KnownKind::Unknown)
            k = kind;
        else if (k != kind)
            ++graph.merge_conflicts;
    }
    for (const auto& [cell, id] : delta.region_hints) {
        if (!graph.in_bounds(cell)) throw ConsistencyError("merge: region hint out of bounds");
        std::string existing = graph.region_of(cell);
        if (!existing.empty() && existing != id) {
            ++graph.merge_conflicts;
            continue;
        }
        RegionInfo& r = graph.regions[id];
        if (r.name.empty()) {
            auto it = delta.region_names.find(id);
            r.name = it != delta.region_names.end() ? it->second : id;
        }
        r.cells.insert(cell);
    }
    for (const LandmarkSighting& s : delta.landmark_hints) {
        if (!graph.in_bounds(s.cell)) throw ConsistencyError("merge: landmark hint out of bounds");
        graph.landmarks[s.id] = {s.name, s.cell};
    }
    return graph;
}

/// Attach region/landmark hints wholesale; throws ConflictError when a cell
/// would receive a second, different region id.
inline SceneGraph label_regions(SceneGraph graph,
                                const std::vector<std::pair<Cell, std::string>>& region_hints,
                                const std::vector<LandmarkSighting>& landmark_hints = {},
                                const std::map<std::string, std::string>& region_names = {}) {
    for (const auto& [cell, id] : region_hints) {
        if (!graph.in_bounds(cell)) throw ConsistencyError("label_regions: hint out of bounds");
        std::string existing = graph.region_of(cell);
        if (!existing.empty() && existing != id)
            throw ConflictError("cell (" + std::to_string(cell.x) + "," + std::to_string(cell.y) +
                                ") already labeled '" + existing + "', refusing '" + id + "'");
        RegionInfo& r = graph.regions[id];
        if (r.name.empty()) {
            auto it = region_names.find(id);
            r.name = it != region_names.end() ? it->second : id;
        }
        r.cells.insert(cell);
    }
    for (const LandmarkSighting& s : landmark_hints) {
        if (!graph.in_bounds(s.cell))
            throw ConsistencyError("label_regions: landmark out of bounds");
        graph.landmarks[s.id] = {s.name, s.cell};
    }
    return graph;
}

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

namespace detail {

// Marks Unknown cells connected to the map border through Unknown cells.
inline std::vector<char> border_connected_unknown(const SceneGraph& g) {
    std::vector<char> mark(g.knowledge.size(), 0);
    std::deque<Cell> queue;
    auto push = [&](Cell c) {
        size_t i = static_cast<size_t>(c.y) * g.width + c.x;
        if (!mark[i] && g.knowledge[i] == KnownKind::Unknown) {
            mark[i] = 1;
            queue.push_back(c);
        }
    };
    for (int x = 0; x < g.width; ++x) {
        push({x, 0});
        push({x, g.height - 1});
    }
    for (int y = 0; y < g.height; ++y) {
        push({0, y});
        push({g.width - 1, y});
    }
    static constexpr std::array<Cell, 4> kSteps{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};
    while (!queue.empty()) {
        Cell c = queue.front();
        queue.pop_front();
        for (const Cell& s : kSteps) {
            Cell n{c.x + s.x, c.y + s.y};
            if (g.in_bounds(n)) push(n);
        }
    }
    return mark;
}

}  // namespace detail

/// The stopping test for exploration: the periphery is closed when no
/// Navigable cell touches Unknown space that reaches the map border, and
/// every enclosed Unknown pocket is smaller than void_threshold.
inline CoverageReport coverage(const SceneGraph& g, int void_threshold = kDefaultVoidThreshold) {
    if (void_threshold < 1) throw std::invalid_argument("coverage: void_threshold must be >= 1");
    CoverageReport report;

    std::vector<char> exterior = detail::border_connected_unknown(g);
    static constexpr std::array<Cell, 4> kSteps{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};

    report.periphery_closed = true;
    for (int y = 0; y < g.height && report.periphery_closed; ++y) {
        for (int x = 0; x < g.width; ++x) {
            if (g.at({x, y}) != KnownKind::Navigable) continue;
            for (const Cell& s : kSteps) {
                Cell n{x + s.x, y + s.y};
                if (g.in_bounds(n) && exterior[static_cast<size_t>(n.y) * g.width + n.x]) {
                    report.periphery_closed = false;
                    break;
                }
            }
            if (!report.periphery_closed) break;
        }
    }

    // Interior voids: Unknown components not connected to the border.
    std::vector<char> seen(g.knowledge.size(), 0);
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            size_t i = static_cast<size_t>(y) * g.width + x;
            if (seen[i] || exterior[i] || g.knowledge[i] != KnownKind::Unknown) continue;
            VoidInfo v;
            std::deque<Cell> queue{{x, y}};
            seen[i] = 1;
            while (!queue.empty()) {
                Cell c = queue.front();
                queue.pop_front();
                v.cells.push_back(c);
                for (const Cell& s : kSteps) {
                    Cell n{c.x + s.x, c.y + s.y};
                    if (!g.in_bounds(n)) continue;
                    size_t j = static_cast<size_t>(n.y) * g.width + n.x;
                    if (!seen[j] && !exterior[j] && g.knowledge[j] == KnownKind::Unknown) {
                        seen[j] = 1;
                        queue.push_back(n);
                    }
                }
            }
            report.interior_voids.push_back(std::move(v));
        }
    }

    report.sufficient = report.periphery_closed;
    for (const VoidInfo& v : report.interior_voids)
        if (v.size() >= void_threshold) report.sufficient = false;
    return report;
}

/// Ground-truth check: fraction of Free cells reachable from `from` that the
/// graph already knows. Needs the world, so it lives outside coverage().
inline double covered_fraction(const SceneGraph& g, const GridWorld& w, Cell from) {
    auto free_cell = [&](Cell c) { return w.is_free(c); };
    DistanceField reach = cell_bfs(w.width, w.height, free_cell, {from});
    long reachable = 0, known = 0;
    for (int y = 0; y < w.height; ++y) {
        for (int x = 0; x < w.width; ++x) {
            if (!reach.reached({x, y})) continue;
            ++reachable;
            if (g.at({x, y}) != KnownKind::Unknown) ++known;
        }
    }
    return reachable == 0 ? 1.0 : static_cast<double>(known) / static_cast<double>(reachable);
}

// ---------------------------------------------------------------------------
// Persistence
//
// knowledge is run-length encoded as "<count><glyph>" with glyphs U/N/O in
// row-major order, e.g. "12U3N1O".
// ---------------------------------------------------------------------------

inline char known_glyph(KnownKind k) {
    switch (k) {
        case KnownKind::Unknown: return 'U';
        case KnownKind::Navigable: return 'N';
        case KnownKind::Obstacle: return 'O';
    }
    return 'U';
}

inline std::string rle_encode(const std::vector<KnownKind>& knowledge) {
    std::string out;
    size_t i = 0;
    while (i < knowledge.size()) {
        size_t j = i;
        while (j < knowledge.size() && knowledge[j] == knowledge[i]) ++j;
        out += std::to_string(j - i);
        out.push_back(known_glyph(knowledge[i]));
        i = j;
    }
    return out;
}

inline std::vector<KnownKind> rle_decode(const std::string& s, size_t expected) {
    std::vector<KnownKind> out;
    out.reserve(expected);
    size_t i = 0;
    while (i < s.size()) {
        size_t start = i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
        if (i == start || i == s.size()) throw ParseError("knowledge RLE: malformed at " + std::to_string(start));
        long count = std::stol(s.substr(start, i - start));
        KnownKind k;
        switch (s[i]) {
            case 'U': k = KnownKind::Unknown; break;
            case 'N': k = KnownKind::Navigable; break;
            case 'O': k = KnownKind::Obstacle; break;
            default: throw ParseError(std::string("knowledge RLE: unknown glyph '") + s[i] + "'");
        }
        ++i;
        out.insert(out.end(), count, k);
    }
    if (out.size() != expected)
        throw ParseError("knowledge RLE: " + std::to_string(out.size()) + " cells, expected " +
                         std::to_string(expected));
    return out;
}

inline nlohmann::json scenegraph_to_json(const SceneGraph& g) {
    nlohmann::json j;
    j["width"] = g.width;
    j["height"] = g.height;
    j["cell_size_m"] = g.cell_size_m;
    j["knowledge"] = rle_encode(g.knowledge);
    nlohmann::json regions = nlohmann::json::object();
    for (const auto& [id, info] : g.regions) {
        nlohmann::json cells = nlohmann::json::array();
        for (const Cell& c : info.cells) cells.push_back({c.x, c.y});
        regions[id] = {{"name", info.name}, {"cells", cells}};
    }
    j["regions"] = regions;
    nlohmann::json landmarks = nlohmann::json::object();
    for (const auto& [id, info] : g.landmarks)
        landmarks[id] = {{"name", info.name}, {"x", info.cell.x}, {"y", info.cell.y}};
    j["landmarks"] = landmarks;
    j["start"] = pose_to_json(g.start);
    nlohmann::json traj = nlohmann::json::array();
    for (const Pose& p : g.trajectory)
        traj.push_back({p.x, p.y, std::string(1, heading_char(p.heading))});
    j["trajectory"] = traj;
    return j;
}

inline SceneGraph scenegraph_from_json(const nlohmann::json& j) {
    SceneGraph g;
    try {
        g.width = j.at("width").get<int>();
        g.height = j.at("height").get<int>();
        g.cell_size_m = j.at("cell_size_m").get<double>();
        g.knowledge = rle_decode(j.at("knowledge").get<std::string>(),
                                 static_cast<size_t>(g.width) * g.height);
        for (auto& [id, rj] : j.at("regions").items()) {
            RegionInfo info;
            info.name = rj.at("name").get<std::string>();
            for (const auto& c : rj.at("cells"))
                info.cells.insert({c.at(0).get<int>(), c.at(1).get<int>()});
            g.regions[id] = std::move(info);
        }
        for (auto& [id, lj] : j.at("landmarks").items())
            g.landmarks[id] = {lj.at("name").get<std::string>(),
                               {lj.at("x").get<int>(), lj.at("y").get<int>()}};
        g.start = pose_from_json(j.at("start"));
        for (const auto& pj : j.at("trajectory")) {
            std::string h = pj.at(2).get<std::string>();
            if (h.size() != 1) throw ParseError("trajectory: bad heading");
            g.trajectory.push_back({pj.at(0).get<int>(), pj.at(1).get<int>(), heading_from_char(h[0])});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scene graph JSON: ") + e.what());
    }
    return g;
}

inline std::string scenegraph_save(const SceneGraph& g) { return scenegraph_to_json(g).dump(2) + "\n"; }

inline SceneGraph scenegraph_load(const std::string& bytes) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("scene graph JSON: ") + e.what());
    }
    return scenegraph_from_json(j);
}

/// Fully-known graph mirroring the world's ground truth, regions and
/// landmarks included. Used for deployment over a finished exploration.
inline SceneGraph complete_scenegraph(const GridWorld& w, const Pose& start) {
    SceneGraph g = SceneGraph::empty(w.width, w.height, w.cell_size_m, start);
    for (int y = 0; y < w.height; ++y) {
        for (int x = 0; x < w.width; ++x) {
            size_t i = static_cast<size_t>(y) * w.width + x;
            g.knowledge[i] = w.cells[i] == CellKind::Free ? KnownKind::Navigable : KnownKind::Obstacle;
            char letter = w.region_letters[i];
            if (letter) {
                std::string id(1, letter);
                RegionInfo& r = g.regions[id];
                if (r.name.empty()) r.name = w.region_name(id);
                r.cells.insert({x, y});
            }
        }
    }
    for (const auto& [id, lm] : w.landmarks) g.landmarks[id] = {lm.name, lm.cell};
    g.trajectory.push_back(start);
    return g;
}

}  // namespace gridnav
