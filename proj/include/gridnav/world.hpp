#pragma once

/**
 * Deterministic 2D grid-world simulator: map loading, agent kinematics,
 * collision, and ray-cast observations.
 *
 * Map frame: x = column (east positive), y = row (south positive), so
 * row 0 of the map file is the northern edge. One cell is cell_size_m
 * metres on a side.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridnav/errors.hpp"

namespace gridnav {

enum class CellKind : uint8_t { Free, Obstacle };

enum class Heading : uint8_t { North, East, South, West };

enum class Action : uint8_t { MoveForward, TurnLeft, TurnRight, Stop };

enum class StepOutcome : uint8_t { Ok, Blocked, Stopped };

struct Cell {
    int x = 0;
    int y = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Row-major scan order: (y, x). Used wherever a deterministic pick among
// equivalent cells is needed.
inline bool scan_order_less(const Cell& a, const Cell& b) {
    return std::pair{a.y, a.x} < std::pair{b.y, b.x};
}

inline Heading turn_left(Heading h) {
    switch (h) {
        case Heading::North: return Heading::West;
        case Heading::West: return Heading::South;
        case Heading::South: return Heading::East;
        case Heading::East: return Heading::North;
    }
    return Heading::North;
}

inline Heading turn_right(Heading h) {
    switch (h) {
        case Heading::North: return Heading::East;
        case Heading::East: return Heading::South;
        case Heading::South: return Heading::West;
        case Heading::West: return Heading::North;
    }
    return Heading::North;
}

// Unit step for MoveForward. North decreases y.
inline Cell heading_delta(Heading h) {
    switch (h) {
        case Heading::North: return {0, -1};
        case Heading::East: return {1, 0};
        case Heading::South: return {0, 1};
        case Heading::West: return {-1, 0};
    }
    return {0, 0};
}

inline char heading_char(Heading h) {
    switch (h) {
        case Heading::North: return 'N';
        case Heading::East: return 'E';
        case Heading::South: return 'S';
        case Heading::West: return 'W';
    }
    return '?';
}

inline Heading heading_from_char(char c) {
    switch (c) {
        case 'N': return Heading::North;
        case 'E': return Heading::East;
        case 'S': return Heading::South;
        case 'W': return Heading::West;
        default: throw ParseError(std::string("unknown heading '") + c + "'");
    }
}

struct Pose {
    int x = 0;
    int y = 0;
    Heading heading = Heading::North;

    Cell cell() const { return {x, y}; }

    friend bool operator==(const Pose&, const Pose&) = default;
};

struct Landmark {
    std::string id;
    std::string name;  // display name; defaults to id
    Cell cell;
    std::string region;  // region letter the sidecar placed it in, may be empty
};

struct GridWorld {
    int width = 0;
    int height = 0;
    double cell_size_m = 0.25;
    std::vector<CellKind> cells;        // row-major
    std::vector<char> region_letters;   // row-major, 0 = no region
    std::map<std::string, std::string> region_names;  // letter -> display name
    std::map<std::string, Landmark> landmarks;        // id -> landmark
    std::optional<Cell> default_start;                // '@' glyph, if present

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    bool in_bounds(Cell c) const { return in_bounds(c.x, c.y); }

    CellKind at(int x, int y) const { return cells[static_cast<size_t>(y) * width + x]; }
    CellKind at(Cell c) const { return at(c.x, c.y); }

    bool is_free(Cell c) const { return in_bounds(c) && at(c) == CellKind::Free; }

    // Region id of a cell as a string ("a".."z"), empty if none.
    std::string region_at(Cell c) const {
        char letter = region_letters[static_cast<size_t>(c.y) * width + c.x];
        return letter ? std::string(1, letter) : std::string();
    }

    std::string region_name(const std::string& letter) const {
        auto it = region_names.find(letter);
        return it != region_names.end() ? it->second : letter;
    }

    Pose start_pose() const {
        if (default_start) return {default_start->x, default_start->y, Heading::North};
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (at(x, y) == CellKind::Free) return {x, y, Heading::North};
        throw ConsistencyError("map has no free cell");
    }
};

// ---------------------------------------------------------------------------
// Map file I/O
//
// ASCII grid, one row per line: '.' free, '#' obstacle, 'a'-'z' free cell in
// that region, '@' free default start. Sidecar JSON:
//   {"regions": {"a": "living room"}, "landmarks": [{"id","x","y","region"}],
//    "cell_size_m": 0.25}
// ---------------------------------------------------------------------------

inline GridWorld load_map(const std::string& text, const std::string& sidecar) {
    GridWorld w;

    std::vector<std::string> rows;
    std::string row;
    for (char c : text) {
        if (c == '\n') {
            rows.push_back(row);
            row.clear();
        } else {
            row.push_back(c);
        }
    }
    if (!row.empty()) rows.push_back(row);
    while (!rows.empty() && rows.back().empty()) rows.pop_back();

    if (rows.empty()) throw ParseError("map: empty grid");
    w.height = static_cast<int>(rows.size());
    w.width = static_cast<int>(rows[0].size());
    if (w.width == 0) throw ParseError("map: empty first row");
    w.cells.assign(static_cast<size_t>(w.width) * w.height, CellKind::Free);
    w.region_letters.assign(static_cast<size_t>(w.width) * w.height, 0);

    for (int y = 0; y < w.height; ++y) {
        if (static_cast<int>(rows[y].size()) != w.width)
            throw ParseError("map: ragged row " + std::to_string(y));
        for (int x = 0; x < w.width; ++x) {
            char g = rows[y][x];
            size_t i = static_cast<size_t>(y) * w.width + x;
            if (g == '.') {
                // free
            } else if (g == '#') {
                w.cells[i] = CellKind::Obstacle;
            } else if (g >= 'a' && g <= 'z') {
                w.region_letters[i] = g;
            } else if (g == '@') {
                if (w.default_start)
                    throw ParseError("map: multiple '@' start cells");
                w.default_start = Cell{x, y};
            } else {
                throw ParseError(std::string("map: unknown glyph '") + g + "' at (" +
                                 std::to_string(x) + "," + std::to_string(y) + ")");
            }
        }
    }

    if (!sidecar.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(sidecar);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("sidecar: ") + e.what());
        }
        if (j.contains("cell_size_m")) w.cell_size_m = j.at("cell_size_m").get<double>();
        if (j.contains("regions")) {
            for (auto& [letter, name] : j.at("regions").items()) {
                if (letter.size() != 1 || letter[0] < 'a' || letter[0] > 'z')
                    throw ParseError("sidecar: region key '" + letter + "' is not a-z");
                w.region_names[letter] = name.get<std::string>();
            }
        }
        if (j.contains("landmarks")) {
            for (const auto& lm : j.at("landmarks")) {
                Landmark l;
                l.id = lm.at("id").get<std::string>();
                l.cell = {lm.at("x").get<int>(), lm.at("y").get<int>()};
                l.name = lm.value("name", l.id);
                l.region = lm.value("region", std::string());
                if (!w.in_bounds(l.cell))
                    throw ConsistencyError("landmark '" + l.id + "' out of bounds");
                if (w.at(l.cell) == CellKind::Obstacle)
                    throw ConsistencyError("landmark '" + l.id + "' on an obstacle cell");
                if (!l.region.empty() && w.region_at(l.cell) != l.region)
                    throw ConsistencyError("landmark '" + l.id + "' region mismatch: sidecar says '" +
                                           l.region + "', map says '" + w.region_at(l.cell) + "'");
                if (w.landmarks.count(l.id))
                    throw ConsistencyError("duplicate landmark id '" + l.id + "'");
                w.landmarks[l.id] = std::move(l);
            }
        }
    }
    return w;
}

// Inverse of load_map for the grid part; reproduces the original bytes for
// files that end in a newline.
inline std::string serialize_map(const GridWorld& w) {
    std::string out;
    out.reserve(static_cast<size_t>(w.height) * (w.width + 1));
    for (int y = 0; y < w.height; ++y) {
        for (int x = 0; x < w.width; ++x) {
            size_t i = static_cast<size_t>(y) * w.width + x;
            char g = '.';
            if (w.cells[i] == CellKind::Obstacle)
                g = '#';
            else if (w.region_letters[i])
                g = w.region_letters[i];
            else if (w.default_start && *w.default_start == Cell{x, y})
                g = '@';
            out.push_back(g);
        }
        out.push_back('\n');
    }
    return out;
}

// ---------------------------------------------------------------------------
// Kinematics
// ---------------------------------------------------------------------------

// Blocked moves keep the pose and report StepOutcome::Blocked; they are not
// errors, the loop continues.
inline std::pair<Pose, StepOutcome> step(const GridWorld& w, const Pose& pose, Action action) {
    Pose next = pose;
    switch (action) {
        case Action::TurnLeft:
            next.heading = turn_left(pose.heading);
            return {next, StepOutcome::Ok};
        case Action::TurnRight:
            next.heading = turn_right(pose.heading);
            return {next, StepOutcome::Ok};
        case Action::Stop:
            return {next, StepOutcome::Stopped};
        case Action::MoveForward: {
            Cell d = heading_delta(pose.heading);
            Cell target{pose.x + d.x, pose.y + d.y};
            if (!w.is_free(target)) return {next, StepOutcome::Blocked};
            next.x = target.x;
            next.y = target.y;
            return {next, StepOutcome::Ok};
        }
    }
    return {next, StepOutcome::Blocked};
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

struct VisibleCell {
    Cell cell;
    CellKind kind = CellKind::Free;
    std::string region;  // empty if none

    friend bool operator==(const VisibleCell&, const VisibleCell&) = default;
};

struct LandmarkSighting {
    std::string id;
    std::string name;
    Cell cell;

    friend bool operator==(const LandmarkSighting&, const LandmarkSighting&) = default;
};

struct Observation {
    std::vector<VisibleCell> visible_cells;  // row-major order
    std::vector<LandmarkSighting> visible_landmarks;
    std::map<std::string, std::string> region_names;  // for the region ids seen
    Pose pose;
    int step_index = 0;

    bool sees(Cell c) const {
        for (const auto& v : visible_cells)
            if (v.cell == c) return true;
        return false;
    }
};

// Integer Bresenham line from a to b, inclusive of both endpoints.
inline std::vector<Cell> line_cells(Cell a, Cell b) {
    std::vector<Cell> out;
    int dx = std::abs(b.x - a.x), sx = a.x < b.x ? 1 : -1;
    int dy = -std::abs(b.y - a.y), sy = a.y < b.y ? 1 : -1;
    int err = dx + dy;
    int x = a.x, y = a.y;
    while (true) {
        out.push_back({x, y});
        if (x == b.x && y == b.y) break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
    return out;
}

// A ray is blocked at the first obstacle cell it enters; the obstacle itself
// is visible, cells behind it are not.
inline bool line_of_sight(const GridWorld& w, Cell from, Cell to) {
    auto cells = line_cells(from, to);
    for (size_t i = 1; i + 1 < cells.size(); ++i)
        if (w.at(cells[i]) == CellKind::Obstacle) return false;
    return true;
}

/// All cells within range and FOV of the pose that have unobstructed
/// line-of-sight. The pose's own cell is always included.
inline Observation observe(const GridWorld& w, const Pose& pose, double fov_deg, int range_cells,
                           int step_index = 0) {
    if (!(fov_deg > 0.0 && fov_deg <= 360.0))
        throw std::invalid_argument("observe: fov_deg must be in (0, 360]");
    if (range_cells < 1) throw std::invalid_argument("observe: range_cells must be >= 1");

    Observation obs;
    obs.pose = pose;
    obs.step_index = step_index;

    const bool full_circle = fov_deg >= 360.0;
    const double cos_half_fov = std::cos(fov_deg * 0.5 * M_PI / 180.0);
    const Cell h = heading_delta(pose.heading);
    const long r2 = static_cast<long>(range_cells) * range_cells;

    const int x0 = std::max(0, pose.x - range_cells);
    const int x1 = std::min(w.width - 1, pose.x + range_cells);
    const int y0 = std::max(0, pose.y - range_cells);
    const int y1 = std::min(w.height - 1, pose.y + range_cells);

    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            Cell c{x, y};
            long dx = x - pose.x, dy = y - pose.y;
            if (dx == 0 && dy == 0) {
                obs.visible_cells.push_back({c, w.at(c), w.region_at(c)});
                continue;
            }
            if (dx * dx + dy * dy > r2) continue;
            if (!full_circle) {
                double dot = static_cast<double>(dx * h.x + dy * h.y);
                double len = std::sqrt(static_cast<double>(dx * dx + dy * dy));
                if (dot < len * cos_half_fov - 1e-9) continue;
            }
            if (!line_of_sight(w, pose.cell(), c)) continue;
            obs.visible_cells.push_back({c, w.at(c), w.region_at(c)});
        }
    }

    for (const auto& [id, lm] : w.landmarks) {
        if (obs.sees(lm.cell))
            obs.visible_landmarks.push_back({lm.id, lm.name, lm.cell});
    }
    for (const auto& v : obs.visible_cells) {
        if (!v.region.empty()) obs.region_names[v.region] = w.region_name(v.region);
    }
    return obs;
}

// ---------------------------------------------------------------------------
// JSON helpers shared by the persistence formats
// ---------------------------------------------------------------------------

inline nlohmann::json pose_to_json(const Pose& p) {
    return {{"x", p.x}, {"y", p.y}, {"heading", std::string(1, heading_char(p.heading))}};
}

inline Pose pose_from_json(const nlohmann::json& j) {
    std::string h = j.at("heading").get<std::string>();
    if (h.size() != 1) throw ParseError("pose: bad heading '" + h + "'");
    return {j.at("x").get<int>(), j.at("y").get<int>(), heading_from_char(h[0])};
}

}  // namespace gridnav
