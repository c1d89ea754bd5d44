#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lifespace {

struct Position {
    int x = 0;
    int y = 0;

    friend bool operator==(const Position&, const Position&) = default;
};

/// Row-major ordering: (y, x). Used for scene anchors and A* tie-breaks.
inline std::strong_ordering row_major(const Position& a, const Position& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
}

inline int manhattan(const Position& a, const Position& b) {
    return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

using SceneId = std::string;

enum class SceneCategory { dining, leisure, culture, social };

std::string_view to_string(SceneCategory c);
std::optional<SceneCategory> parse_scene_category(std::string_view s);

struct SceneArea {
    SceneId id;
    SceneCategory category = SceneCategory::social;
    std::vector<Position> tiles;  // in document order
    std::string label;

    friend bool operator==(const SceneArea&, const SceneArea&) = default;
};

/// Ordered list of steps, excluding the start tile. Empty means "already there".
struct Path {
    std::vector<Position> steps;

    std::size_t size() const { return steps.size(); }
    bool empty() const { return steps.empty(); }
    friend bool operator==(const Path&, const Path&) = default;
};

class WorldMap {
public:
    WorldMap() = default;
    WorldMap(int width, int height, std::vector<std::uint8_t> walkable, std::vector<SceneArea> scenes);

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<SceneArea>& scenes() const { return scenes_; }

    bool in_bounds(Position p) const { return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_; }
    bool walkable(Position p) const { return in_bounds(p) && walkable_[index(p)] != 0; }
    std::size_t walkable_count() const;

    const SceneArea* find_scene(std::string_view id) const;
    bool has_scene(std::string_view id) const { return find_scene(id) != nullptr; }
    /// Index into scenes() of the scene owning an in-bounds tile, or -1.
    int scene_index(Position p) const { return scene_of_[index(p)]; }

    friend bool operator==(const WorldMap&, const WorldMap&) = default;

private:
    std::size_t index(Position p) const { return static_cast<std::size_t>(p.y) * width_ + p.x; }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> walkable_;
    std::vector<SceneArea> scenes_;
    std::vector<int> scene_of_;  // tile -> scene index, -1 for corridor
};

/// Parses and validates a map document. Throws ParseError or ValidationError.
WorldMap load_map(std::string_view text);
WorldMap load_map_file(const std::string& path);

/// Canonical map document; load_map(serialize_map(m)) == m.
std::string serialize_map(const WorldMap& map);

/// The shipped 24x24 layout with six scenes covering all four categories.
std::string_view default_map_text();

/// Shortest 4-neighbour route by A* with Manhattan heuristic. Throws NoRouteError.
Path find_path(const WorldMap& map, Position start, Position goal);

/// Scene owning `pos`, or nullopt for corridor tiles. Throws OutOfBoundsError.
std::optional<SceneId> scene_at(const WorldMap& map, Position pos);

/// Smallest (y, x) tile of the scene. Throws UnknownSceneError.
Position scene_anchor(const WorldMap& map, std::string_view scene);

}  // namespace lifespace
