#pragma once

/**
 * Raster rendering of scene graphs and observations as binary PPM (P6).
 * The palette follows the legend the decision backend is told about:
 * gray navigable floor, white obstacles/unknown, blue trajectory and
 * heading arrow, black start square. 8 pixels per cell.
 */

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gridnav/scenegraph.hpp"
#include "gridnav/world.hpp"

namespace gridnav {

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

constexpr Rgb kFloorGray{200, 200, 200};
constexpr Rgb kWallWhite{255, 255, 255};
constexpr Rgb kPathBlue{0, 0, 255};
constexpr Rgb kStartBlack{0, 0, 0};
constexpr int kPixelsPerCell = 8;

struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;  // RGB, row-major

    Image() = default;
    Image(int w, int h, Rgb fill) : width(w), height(h), data(static_cast<size_t>(w) * h * 3) {
        for (size_t i = 0; i < data.size(); i += 3) {
            data[i] = fill.r;
            data[i + 1] = fill.g;
            data[i + 2] = fill.b;
        }
    }

    void set(int x, int y, Rgb c) {
        if (x < 0 || x >= width || y < 0 || y >= height) return;
        size_t i = (static_cast<size_t>(y) * width + x) * 3;
        data[i] = c.r;
        data[i + 1] = c.g;
        data[i + 2] = c.b;
    }

    Rgb get(int x, int y) const {
        size_t i = (static_cast<size_t>(y) * width + x) * 3;
        return {data[i], data[i + 1], data[i + 2]};
    }

    std::string to_ppm() const {
        std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
        out.append(reinterpret_cast<const char*>(data.data()), data.size());
        return out;
    }
};

namespace detail {

inline void draw_pixel_line(Image& img, int x0, int y0, int x1, int y1, Rgb color) {
    for (const Cell& p : line_cells({x0, y0}, {x1, y1})) img.set(p.x, p.y, color);
}

inline void fill_cell_block(Image& img, Cell cell, Rgb color) {
    for (int py = 0; py < kPixelsPerCell; ++py)
        for (int px = 0; px < kPixelsPerCell; ++px)
            img.set(cell.x * kPixelsPerCell + px, cell.y * kPixelsPerCell + py, color);
}

// 8x8 arrow glyph pointing north; rotated clockwise for the other headings.
inline const std::array<const char*, 8>& arrow_mask_north() {
    static const std::array<const char*, 8> mask{
        "...XX...",
        "..XXXX..",
        ".XXXXXX.",
        "XXXXXXXX",
        "...XX...",
        "...XX...",
        "...XX...",
        "........",
    };
    return mask;
}

inline bool arrow_pixel(Heading h, int px, int py) {
    int r = py, c = px;
    // Undo the clockwise rotation that oriented the glyph.
    switch (h) {
        case Heading::North: break;
        case Heading::East: {
            int nr = 7 - c, nc = r;
            r = nr;
            c = nc;
            break;
        }
        case Heading::South: {
            r = 7 - r;
            c = 7 - c;
            break;
        }
        case Heading::West: {
            int nr = c, nc = 7 - r;
            r = nr;
            c = nc;
            break;
        }
    }
    return arrow_mask_north()[r][c] == 'X';
}

inline void draw_arrow(Image& img, Cell cell, Heading h, Rgb color) {
    for (int py = 0; py < kPixelsPerCell; ++py)
        for (int px = 0; px < kPixelsPerCell; ++px)
            if (arrow_pixel(h, px, py))
                img.set(cell.x * kPixelsPerCell + px, cell.y * kPixelsPerCell + py, color);
}

inline void draw_start_square(Image& img, Cell cell, Rgb color) {
    for (int py = 1; py < kPixelsPerCell - 1; ++py) {
        for (int px = 1; px < kPixelsPerCell - 1; ++px) {
            bool edge = px == 1 || px == kPixelsPerCell - 2 || py == 1 || py == kPixelsPerCell - 2;
            if (edge)
                img.set(cell.x * kPixelsPerCell + px, cell.y * kPixelsPerCell + py, color);
        }
    }
}

inline Cell cell_center_px(Cell c) {
    return {c.x * kPixelsPerCell + kPixelsPerCell / 2, c.y * kPixelsPerCell + kPixelsPerCell / 2};
}

}  // namespace detail

/// Render the scene graph top-down. When an overlay trajectory is given it
/// is drawn instead of the graph's own exploration path, with the start
/// square on its first waypoint and the arrow on its last.
inline Image render_scenegraph(const SceneGraph& g, const std::vector<Pose>* overlay = nullptr) {
    Image img(g.width * kPixelsPerCell, g.height * kPixelsPerCell, kWallWhite);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            if (g.at({x, y}) == KnownKind::Navigable) detail::fill_cell_block(img, {x, y}, kFloorGray);

    const std::vector<Pose>& path = overlay ? *overlay : g.trajectory;
    for (size_t i = 1; i < path.size(); ++i) {
        if (path[i - 1].cell() == path[i].cell()) continue;  // rotations draw nothing
        Cell a = detail::cell_center_px(path[i - 1].cell());
        Cell b = detail::cell_center_px(path[i].cell());
        detail::draw_pixel_line(img, a.x, a.y, b.x, b.y, kPathBlue);
    }

    Cell start_cell = overlay && !path.empty() ? path.front().cell() : g.start.cell();
    detail::draw_start_square(img, start_cell, kStartBlack);

    Pose current = path.empty() ? g.start : path.back();
    detail::draw_arrow(img, current.cell(), current.heading, kPathBlue);
    return img;
}

inline std::string render_scenegraph_ppm(const SceneGraph& g,
                                         const std::vector<Pose>* overlay = nullptr) {
    return render_scenegraph(g, overlay).to_ppm();
}

/// Egocentric view of one observation: heading up, agent centered. Stands in
/// for the first-person camera frame at desk scale.
inline Image render_observation(const Observation& obs, int range_cells) {
    int side = 2 * range_cells + 1;
    Image img(side * kPixelsPerCell, side * kPixelsPerCell, kWallWhite);
    Cell fwd = heading_delta(obs.pose.heading);
    Cell right = heading_delta(turn_right(obs.pose.heading));
    for (const VisibleCell& v : obs.visible_cells) {
        int dx = v.cell.x - obs.pose.x;
        int dy = v.cell.y - obs.pose.y;
        int ahead = dx * fwd.x + dy * fwd.y;
        int side_off = dx * right.x + dy * right.y;
        Cell ego{range_cells + side_off, range_cells - ahead};
        if (ego.x < 0 || ego.x >= side || ego.y < 0 || ego.y >= side) continue;
        if (v.kind == CellKind::Free) detail::fill_cell_block(img, ego, kFloorGray);
    }
    detail::draw_arrow(img, {range_cells, range_cells}, Heading::North, kPathBlue);
    return img;
}

inline std::string render_observation_ppm(const Observation& obs, int range_cells) {
    return render_observation(obs, range_cells).to_ppm();
}

}  // namespace gridnav
