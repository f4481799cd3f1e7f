#include "prism/env.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace prism {

namespace {

[[noreturn]] void fail(int line_no, const std::string& what) {
  throw std::runtime_error("line " + std::to_string(line_no) + ": " + what);
}

// Reads one line, tolerating CRLF and missing trailing newline.
bool next_line(std::istream& in, std::string& line, int& line_no) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ++line_no;
  return true;
}

bool parse_int(const std::string& s, int& out) {
  try {
    size_t used = 0;
    out = std::stoi(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

std::string to_string(const Vertex& v) {
  return "(" + std::to_string(v.x) + "," + std::to_string(v.y) + ")";
}

GridMap::GridMap(int width, int height, std::vector<uint8_t> passable_cells)
    : width_(width), height_(height), passable_(std::move(passable_cells)) {
  passable_count_ = static_cast<int>(
      std::count(passable_.begin(), passable_.end(), uint8_t{1}));
}

std::vector<Vertex> GridMap::neighbors(const Vertex& v) const {
  std::vector<Vertex> out;
  out.reserve(4);
  const Vertex candidates[4] = {
      {v.x, v.y - 1}, {v.x - 1, v.y}, {v.x + 1, v.y}, {v.x, v.y + 1}};
  for (const Vertex& c : candidates) {
    if (passable(c)) out.push_back(c);
  }
  return out;
}

GridMap parse_map(std::istream& in) {
  int line_no = 0;
  std::string line;

  if (!next_line(in, line, line_no)) fail(1, "missing 'type' header");
  if (line.rfind("type", 0) != 0) fail(line_no, "expected 'type ...' header");

  // height/width accepted in either order, both required before 'map'.
  int width = -1, height = -1;
  for (int i = 0; i < 2; ++i) {
    if (!next_line(in, line, line_no)) fail(line_no + 1, "missing height/width header");
    std::istringstream fields(line);
    std::string key, value;
    fields >> key >> value;
    int parsed = 0;
    if (!parse_int(value, parsed) || parsed <= 0)
      fail(line_no, "bad dimension value '" + value + "'");
    if (key == "height") {
      height = parsed;
    } else if (key == "width") {
      width = parsed;
    } else {
      fail(line_no, "expected 'height' or 'width', got '" + key + "'");
    }
  }
  if (width <= 0 || height <= 0) fail(line_no, "height and width must both appear");

  if (!next_line(in, line, line_no)) fail(line_no + 1, "missing 'map' header");
  if (line != "map") fail(line_no, "expected 'map' header, got '" + line + "'");

  std::vector<uint8_t> cells;
  cells.reserve(static_cast<size_t>(width) * height);
  for (int row = 0; row < height; ++row) {
    if (!next_line(in, line, line_no))
      fail(line_no + 1, "map ends after " + std::to_string(row) + " of " +
                            std::to_string(height) + " rows");
    if (static_cast<int>(line.size()) != width)
      fail(line_no, "row has " + std::to_string(line.size()) + " cells, expected " +
                        std::to_string(width));
    for (char glyph : line) {
      switch (glyph) {
        case '.':
        case 'G':
          cells.push_back(1);
          break;
        case '@':
        case 'O':
        case 'T':
        case 'W':
          cells.push_back(0);
          break;
        default:
          fail(line_no, std::string("unknown map glyph '") + glyph + "'");
      }
    }
  }
  return GridMap(width, height, std::move(cells));
}

GridMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file: " + path);
  try {
    return parse_map(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string serialize_map(const GridMap& map) {
  std::ostringstream out;
  out << "type octile\n"
      << "height " << map.height() << "\n"
      << "width " << map.width() << "\n"
      << "map\n";
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x)
      out << (map.passable({x, y}) ? '.' : '@');
    out << '\n';
  }
  return out.str();
}

std::vector<ScenarioEntry> parse_scenario(std::istream& in, const GridMap& map) {
  int line_no = 0;
  std::string line;

  if (!next_line(in, line, line_no)) fail(1, "missing 'version' header");
  if (line.rfind("version", 0) != 0)
    fail(line_no, "expected 'version ...' header");

  std::vector<ScenarioEntry> entries;
  while (next_line(in, line, line_no)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    ScenarioEntry e;
    int sx, sy, gx, gy;
    if (!(fields >> e.bucket >> e.map_name >> e.map_width >> e.map_height >>
          sx >> sy >> gx >> gy >> e.reference_length))
      fail(line_no, "expected 9 whitespace-separated scenario fields");
    e.start = {sx, sy};
    e.goal = {gx, gy};
    if (e.map_width != map.width() || e.map_height != map.height())
      fail(line_no, "scenario dimensions " + std::to_string(e.map_width) + "x" +
                        std::to_string(e.map_height) + " do not match map " +
                        std::to_string(map.width()) + "x" +
                        std::to_string(map.height()));
    if (!map.passable(e.start))
      fail(line_no, "start " + to_string(e.start) + " is not a passable cell");
    if (!map.passable(e.goal))
      fail(line_no, "goal " + to_string(e.goal) + " is not a passable cell");
    entries.push_back(e);
  }
  return entries;
}

std::vector<ScenarioEntry> load_scenario(const std::string& path, const GridMap& map) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  try {
    return parse_scenario(in, map);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace prism
