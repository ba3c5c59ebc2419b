#!/usr/bin/env python3
"""Generate the map fixtures under tests/fixtures/.

Maps are committed artifacts; this script exists so they can be regenerated
and re-verified (free-space connectivity, start markers, sealed-pocket sizes)
instead of being hand-edited.
"""

import json
import os
import sys
from collections import deque

OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")


def components(rows, pred):
    h, w = len(rows), len(rows[0])
    seen = [[False] * w for _ in range(h)]
    comps = []
    for y in range(h):
        for x in range(w):
            if seen[y][x] or not pred(rows[y][x]):
                continue
            comp = []
            q = deque([(x, y)])
            seen[y][x] = True
            while q:
                cx, cy = q.popleft()
                comp.append((cx, cy))
                for nx, ny in ((cx, cy - 1), (cx + 1, cy), (cx, cy + 1), (cx - 1, cy)):
                    if 0 <= nx < w and 0 <= ny < h and not seen[ny][nx] and pred(rows[ny][nx]):
                        seen[ny][nx] = True
                        q.append((nx, ny))
            comps.append(comp)
    return comps


def verify(name, rows, expect_free_components=1):
    widths = {len(r) for r in rows}
    assert len(widths) == 1, f"{name}: ragged rows"
    glyphs = set("".join(rows))
    assert glyphs <= set("#.@abcdefghijklmnopqrstuvwxyz"), f"{name}: bad glyphs {glyphs}"
    assert "".join(rows).count("@") <= 1, f"{name}: multiple starts"
    comps = components(rows, lambda ch: ch != "#")
    assert len(comps) == expect_free_components, (
        f"{name}: {len(comps)} free components, wanted {expect_free_components}"
    )


def write_map(name, rows, sidecar=None, expect_free_components=1):
    verify(name, rows, expect_free_components)
    path = os.path.join(OUT, name)
    with open(path, "w") as f:
        f.write("\n".join(rows) + "\n")
    if sidecar is not None:
        with open(path + ".json", "w") as f:
            json.dump(sidecar, f, indent=2, sort_keys=True)
            f.write("\n")
    print(f"wrote {name}: {len(rows[0])}x{len(rows)}")


def open_room_11():
    rows = ["#" * 11]
    for y in range(1, 10):
        rows.append("#" + "." * 9 + "#")
    rows.append("#" * 11)
    rows[5] = rows[5][:5] + "@" + rows[5][6:]
    write_map("open_room_11.map", rows)


def two_room_15():
    rows = ["#" * 15]
    for y in range(1, 14):
        if y == 7:
            rows.append("#" + "a" * 6 + "." + "b" * 6 + "#")
        else:
            rows.append("#" + "a" * 6 + "#" + "b" * 6 + "#")
    rows.append("#" * 15)
    rows[11] = rows[11][:2] + "@" + rows[11][3:]
    sidecar = {
        "cell_size_m": 0.25,
        "regions": {"a": "study", "b": "storage"},
        "landmarks": [
            {"id": "desk", "x": 3, "y": 3, "region": "a"},
            {"id": "crate", "x": 11, "y": 11, "region": "b"},
        ],
    }
    write_map("two_room_15.map", rows, sidecar)


def apartment_20():
    rows = ["#" * 20]
    for y in range(1, 9):
        door = "." if y == 4 else "#"
        rows.append("#" + "a" * 8 + door + "b" * 9 + "#")
    rows.append("#" * 4 + "." + "#" * 9 + "." + "#" * 5)
    for y in range(10, 19):
        rows.append("#" + "c" * 18 + "#")
    rows.append("#" * 20)
    rows[17] = rows[17][:2] + "@" + rows[17][3:]
    sidecar = {
        "cell_size_m": 0.25,
        "regions": {"a": "living room", "b": "kitchen", "c": "entrance"},
        "landmarks": [
            {"id": "bookshelf", "x": 16, "y": 2, "region": "b"},
            {"id": "coffee_table", "name": "coffee table", "x": 3, "y": 6, "region": "a"},
        ],
    }
    assert rows[2][16] == "b" and rows[6][3] == "a"
    write_map("apartment_20.map", rows, sidecar)


def corridors_32():
    w = h = 32
    grid = [["." for _ in range(w)] for _ in range(h)]
    for x in range(w):
        grid[0][x] = grid[h - 1][x] = "#"
    for y in range(h):
        grid[y][0] = grid[y][w - 1] = "#"
    # Vertical walls with door gaps make three corridors of rooms.
    for y in range(1, h - 1):
        if y not in (6, 20):
            grid[y][11] = "#"
        if y not in (12, 26):
            grid[y][21] = "#"
    # Horizontal partitions inside each column of rooms.
    for x in range(1, 11):
        if x != 5:
            grid[16][x] = "#"
    for x in range(12, 21):
        if x != 16:
            grid[8][x] = "#"
    for x in range(22, 31):
        if x != 26:
            grid[24][x] = "#"
    grid[3][3] = "@"
    rows = ["".join(r) for r in grid]
    write_map("corridors_32.map", rows, {"cell_size_m": 0.25})


def office_48():
    w = h = 48
    grid = [["." for _ in range(w)] for _ in range(h)]
    for x in range(w):
        grid[0][x] = grid[h - 1][x] = "#"
    for y in range(h):
        grid[y][0] = grid[y][w - 1] = "#"
    # Cross-shaped hallways splitting the floor into four wings.
    for y in range(1, h - 1):
        if y not in (10, 24, 38):
            grid[y][23] = "#"
    for x in range(1, w - 1):
        if x not in (11, 35):
            grid[23][x] = "#"
    # A few desks (2x2 blocks) scattered in each wing.
    for bx, by in [(6, 6), (14, 15), (30, 8), (38, 16), (8, 32), (16, 40), (32, 30), (40, 40)]:
        for dy in range(2):
            for dx in range(2):
                grid[by + dy][bx + dx] = "#"
    grid[2][2] = "@"
    rows = ["".join(r) for r in grid]
    write_map("office_48.map", rows, {"cell_size_m": 0.25})


def warehouse_64():
    w = h = 64
    grid = [["." for _ in range(w)] for _ in range(h)]
    for x in range(w):
        grid[0][x] = grid[h - 1][x] = "#"
    for y in range(h):
        grid[y][0] = grid[y][w - 1] = "#"
    # Regular grid of 2x2 storage racks with wide aisles.
    for by in range(6, 58, 8):
        for bx in range(6, 58, 8):
            for dy in range(2):
                for dx in range(2):
                    grid[by + dy][bx + dx] = "#"
    grid[2][2] = "@"
    rows = ["".join(r) for r in grid]
    write_map("warehouse_64.map", rows, {"cell_size_m": 0.25})


def void_13():
    # A sealed 13-cell chamber (3x4 block plus one notch cell) that can never
    # be observed: the map is otherwise fully explorable, so exploration ends
    # with exactly this pocket unknown.
    w, h = 16, 11
    grid = [["." for _ in range(w)] for _ in range(h)]
    for x in range(w):
        grid[0][x] = grid[h - 1][x] = "#"
    for y in range(h):
        grid[y][0] = grid[y][w - 1] = "#"
    # Chamber walls.
    for x in range(3, 9):
        grid[2][x] = "#"
    for y in range(3, 6):
        grid[y][3] = "#"
        grid[y][8] = "#"
    for x in range(5, 9):
        grid[6][x] = "#"
    grid[6][3] = "#"
    for x in range(3, 6):
        grid[7][x] = "#"
    grid[2][2] = "@"
    rows = ["".join(r) for r in grid]
    # The pocket: rows 3-5 x 4..7 plus (4,6).
    comps = components(rows, lambda ch: ch != "#")
    sizes = sorted(len(c) for c in comps)
    assert sizes[0] == 13, f"sealed pocket is {sizes[0]} cells, wanted 13"
    write_map("void_13.map", rows, {"cell_size_m": 0.25}, expect_free_components=2)


def episodes():
    suite = [
        {
            "id": "book-run",
            "instruction": "Go to the bookshelf to find a book and then return to the "
            "coffee table in the living room.",
            "goal": {"landmark": "coffee_table"},
        },
        {
            "id": "kitchen-run",
            "instruction": "Go to the kitchen.",
            "goal": {"x": 14, "y": 4},
        },
    ]
    with open(os.path.join(OUT, "episodes_apartment.json"), "w") as f:
        json.dump(suite, f, indent=2, sort_keys=True)
        f.write("\n")
    print("wrote episodes_apartment.json")


def main():
    os.makedirs(OUT, exist_ok=True)
    open_room_11()
    two_room_15()
    apartment_20()
    corridors_32()
    office_48()
    warehouse_64()
    void_13()
    episodes()
    return 0


if __name__ == "__main__":
    sys.exit(main())
