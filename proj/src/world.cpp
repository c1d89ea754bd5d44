#include "lifespace/world.hpp"

#include "lifespace/errors.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>

namespace lifespace {
namespace {

constexpr std::string_view kDefaultMap =
#include "default_map.inc"
    ;

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream in{std::string(line)};
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

int parse_int(std::string_view s, std::size_t line_no) {
    int value = 0;
    std::size_t used = 0;
    try {
        value = std::stoi(std::string(s), &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) {
        throw ParseError("line " + std::to_string(line_no) + ": expected integer, got '" + std::string(s) + "'");
    }
    return value;
}

std::string tile_name(Position p) {
    return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

// Neighbour expansion order: up, down, left, right.
constexpr std::array<Position, 4> kSteps{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}}};

}  // namespace

std::string_view to_string(SceneCategory c) {
    switch (c) {
        case SceneCategory::dining: return "dining";
        case SceneCategory::leisure: return "leisure";
        case SceneCategory::culture: return "culture";
        case SceneCategory::social: return "social";
    }
    return "social";
}

std::optional<SceneCategory> parse_scene_category(std::string_view s) {
    if (s == "dining") return SceneCategory::dining;
    if (s == "leisure") return SceneCategory::leisure;
    if (s == "culture") return SceneCategory::culture;
    if (s == "social") return SceneCategory::social;
    return std::nullopt;
}

WorldMap::WorldMap(int width, int height, std::vector<std::uint8_t> walkable_tiles, std::vector<SceneArea> scenes)
    : width_(width), height_(height), walkable_(std::move(walkable_tiles)), scenes_(std::move(scenes)) {
    if (width_ <= 0 || height_ <= 0) throw ValidationError("map dimensions must be positive");
    if (walkable_.size() != static_cast<std::size_t>(width_) * height_) {
        throw ValidationError("walkable grid size does not match dimensions");
    }
    if (walkable_count() == 0) throw ValidationError("map has no walkable tile");

    scene_of_.assign(walkable_.size(), -1);
    std::set<std::string> ids;
    for (std::size_t s = 0; s < scenes_.size(); ++s) {
        const auto& scene = scenes_[s];
        if (!ids.insert(scene.id).second) throw ValidationError("duplicate scene '" + scene.id + "'");
        if (scene.tiles.empty()) throw ValidationError("scene '" + scene.id + "' has no tiles");
        for (const auto& t : scene.tiles) {
            if (!in_bounds(t)) {
                throw ValidationError("scene '" + scene.id + "' tile " + tile_name(t) + " is out of bounds");
            }
            if (!walkable(t)) {
                throw ValidationError("scene '" + scene.id + "' tile " + tile_name(t) + " is not walkable");
            }
            int& owner = scene_of_[index(t)];
            if (owner == static_cast<int>(s)) {
                throw ValidationError("scene '" + scene.id + "' lists tile " + tile_name(t) + " twice");
            }
            if (owner != -1) {
                throw ValidationError("scenes '" + scenes_[owner].id + "' and '" + scene.id + "' overlap at tile " +
                                      tile_name(t));
            }
            owner = static_cast<int>(s);
        }
    }

    // Every scene must be reachable from the first scene.
    if (!scenes_.empty()) {
        std::vector<std::uint8_t> seen(walkable_.size(), 0);
        std::queue<Position> frontier;
        frontier.push(scenes_.front().tiles.front());
        seen[index(scenes_.front().tiles.front())] = 1;
        while (!frontier.empty()) {
            Position p = frontier.front();
            frontier.pop();
            for (const auto& d : kSteps) {
                Position n{p.x + d.x, p.y + d.y};
                if (walkable(n) && !seen[index(n)]) {
                    seen[index(n)] = 1;
                    frontier.push(n);
                }
            }
        }
        for (const auto& scene : scenes_) {
            for (const auto& t : scene.tiles) {
                if (!seen[index(t)]) {
                    throw ValidationError("scene '" + scene.id + "' is unreachable (tile " + tile_name(t) + ")");
                }
            }
        }
    }
}

std::size_t WorldMap::walkable_count() const {
    return static_cast<std::size_t>(std::count(walkable_.begin(), walkable_.end(), std::uint8_t{1}));
}

const SceneArea* WorldMap::find_scene(std::string_view id) const {
    for (const auto& s : scenes_) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

WorldMap load_map(std::string_view text) {
    std::vector<std::string> lines;
    {
        std::size_t start = 0;
        while (start <= text.size()) {
            auto end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            lines.emplace_back(text.substr(start, end - start));
            start = end + 1;
        }
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw ParseError("empty map document");

    auto header = split_ws(lines[0]);
    if (header.size() != 2) throw ParseError("line 1: expected header 'W H'");
    const int width = parse_int(header[0], 1);
    const int height = parse_int(header[1], 1);
    if (width <= 0 || height <= 0) throw ParseError("line 1: dimensions must be positive");
    if (lines.size() < static_cast<std::size_t>(height) + 1) {
        throw ParseError("expected " + std::to_string(height) + " grid rows, found " + std::to_string(lines.size() - 1));
    }

    std::vector<std::uint8_t> walkable;
    walkable.reserve(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
        const auto& row = lines[y + 1];
        if (row.size() != static_cast<std::size_t>(width)) {
            throw ParseError("line " + std::to_string(y + 2) + ": expected " + std::to_string(width) +
                             " cells, found " + std::to_string(row.size()));
        }
        for (char c : row) {
            if (c == '.') {
                walkable.push_back(1);
            } else if (c == '#') {
                walkable.push_back(0);
            } else {
                throw ParseError("line " + std::to_string(y + 2) + ": unexpected cell '" + std::string(1, c) + "'");
            }
        }
    }

    std::vector<SceneArea> scenes;
    for (std::size_t i = static_cast<std::size_t>(height) + 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        auto tokens = split_ws(lines[i]);
        if (tokens.empty()) continue;
        if (tokens[0] != "scene" || tokens.size() < 4) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 'scene <id> <category> <x,y> ...'");
        }
        SceneArea scene;
        scene.id = tokens[1];
        scene.label = tokens[1];
        auto category = parse_scene_category(tokens[2]);
        if (!category) {
            throw ParseError("line " + std::to_string(line_no) + ": unknown category '" + tokens[2] + "'");
        }
        scene.category = *category;
        for (std::size_t t = 3; t < tokens.size(); ++t) {
            const auto& tok = tokens[t];
            auto comma = tok.find(',');
            if (comma == std::string::npos) {
                throw ParseError("line " + std::to_string(line_no) + ": malformed tile '" + tok + "'");
            }
            scene.tiles.push_back({parse_int(std::string_view(tok).substr(0, comma), line_no),
                                   parse_int(std::string_view(tok).substr(comma + 1), line_no)});
        }
        scenes.push_back(std::move(scene));
    }

    return WorldMap(width, height, std::move(walkable), std::move(scenes));
}

WorldMap load_map_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read map file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_map(buf.str());
}

std::string serialize_map(const WorldMap& map) {
    std::string out = std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n";
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) out += map.walkable({x, y}) ? '.' : '#';
        out += '\n';
    }
    for (const auto& s : map.scenes()) {
        out += "scene " + s.id + " " + std::string(to_string(s.category));
        for (const auto& t : s.tiles) out += " " + std::to_string(t.x) + "," + std::to_string(t.y);
        out += '\n';
    }
    return out;
}

std::string_view default_map_text() { return kDefaultMap; }

Path find_path(const WorldMap& map, Position start, Position goal) {
    if (!map.walkable(start)) throw NoRouteError("start " + tile_name(start) + " is not a walkable tile");
    if (!map.walkable(goal)) throw NoRouteError("goal " + tile_name(goal) + " is not a walkable tile");
    if (start == goal) return {};

    const auto w = static_cast<std::size_t>(map.width());
    const auto cells = w * static_cast<std::size_t>(map.height());
    auto idx = [w](Position p) { return static_cast<std::size_t>(p.y) * w + p.x; };

    constexpr int kUnseen = std::numeric_limits<int>::max();
    std::vector<int> g(cells, kUnseen);
    std::vector<std::size_t> parent(cells, cells);
    std::vector<std::uint8_t> closed(cells, 0);

    // (f, y, x): smaller f first, then smaller (y, x).
    using Node = std::tuple<int, int, int>;
    std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
    g[idx(start)] = 0;
    open.emplace(manhattan(start, goal), start.y, start.x);

    while (!open.empty()) {
        auto [f, y, x] = open.top();
        open.pop();
        const Position cur{x, y};
        const auto ci = idx(cur);
        if (closed[ci]) continue;
        closed[ci] = 1;
        if (cur == goal) break;
        for (const auto& d : kSteps) {
            const Position next{cur.x + d.x, cur.y + d.y};
            if (!map.walkable(next)) continue;
            const auto ni = idx(next);
            if (closed[ni]) continue;
            const int cost = g[ci] + 1;
            if (cost < g[ni]) {
                g[ni] = cost;
                parent[ni] = ci;
                open.emplace(cost + manhattan(next, goal), next.y, next.x);
            }
        }
    }

    if (!closed[idx(goal)]) {
        throw NoRouteError("no route from " + tile_name(start) + " to " + tile_name(goal));
    }
    Path path;
    for (auto i = idx(goal); i != idx(start); i = parent[i]) {
        path.steps.push_back({static_cast<int>(i % w), static_cast<int>(i / w)});
    }
    std::reverse(path.steps.begin(), path.steps.end());
    return path;
}

std::optional<SceneId> scene_at(const WorldMap& map, Position pos) {
    if (!map.in_bounds(pos)) throw OutOfBoundsError("position " + tile_name(pos) + " is outside the map");
    const int s = map.scene_index(pos);
    if (s < 0) return std::nullopt;
    return map.scenes()[static_cast<std::size_t>(s)].id;
}

Position scene_anchor(const WorldMap& map, std::string_view scene) {
    const auto* s = map.find_scene(scene);
    if (!s) throw UnknownSceneError("unknown scene '" + std::string(scene) + "'");
    return *std::min_element(s->tiles.begin(), s->tiles.end(),
                             [](const Position& a, const Position& b) { return row_major(a, b) < 0; });
}

}  // namespace lifespace
