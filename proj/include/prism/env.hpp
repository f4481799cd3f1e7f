#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace prism {

using AgentId = int;
using Timestep = int;

// Grid cell, x = column, y = row, origin top-left.
struct Vertex {
  int x = 0;
  int y = 0;

  bool operator==(const Vertex& o) const { return x == o.x && y == o.y; }
  bool operator!=(const Vertex& o) const { return !(*this == o); }
  // (y, x) lexicographic — the deterministic order used by search tie-breaking.
  bool operator<(const Vertex& o) const {
    return y != o.y ? y < o.y : x < o.x;
  }
};

std::string to_string(const Vertex& v);

inline int manhattan(const Vertex& a, const Vertex& b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

// 4-connected grid world parsed from a MovingAI .map file.
class GridMap {
 public:
  GridMap() = default;
  GridMap(int width, int height, std::vector<uint8_t> passable_cells);

  int width() const { return width_; }
  int height() const { return height_; }
  int size() const { return width_ * height_; }
  int passable_count() const { return passable_count_; }

  bool in_bounds(const Vertex& v) const {
    return v.x >= 0 && v.x < width_ && v.y >= 0 && v.y < height_;
  }
  bool passable(const Vertex& v) const {
    return in_bounds(v) && passable_[index(v)];
  }
  int index(const Vertex& v) const { return v.y * width_ + v.x; }
  Vertex vertex(int index) const { return {index % width_, index / width_}; }

  // In-bounds passable 4-neighbors in (y, x) ascending order.
  std::vector<Vertex> neighbors(const Vertex& v) const;

  const std::vector<uint8_t>& cells() const { return passable_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int passable_count_ = 0;
  std::vector<uint8_t> passable_;  // row-major, 1 = traversable
};

// One line of a MovingAI .scen file.
struct ScenarioEntry {
  int bucket = 0;
  std::string map_name;
  int map_width = 0;
  int map_height = 0;
  Vertex start;
  Vertex goal;
  double reference_length = 0.0;  // informational octile length, unused by planning
};

// Both parsers throw std::runtime_error naming the offending 1-based line.
GridMap parse_map(std::istream& in);
GridMap load_map(const std::string& path);
std::string serialize_map(const GridMap& map);

std::vector<ScenarioEntry> parse_scenario(std::istream& in, const GridMap& map);
std::vector<ScenarioEntry> load_scenario(const std::string& path, const GridMap& map);

}  // namespace prism

template <>
struct std::hash<prism::Vertex> {
  size_t operator()(const prism::Vertex& v) const {
    return std::hash<long long>()((static_cast<long long>(v.y) << 20) ^ v.x);
  }
};
