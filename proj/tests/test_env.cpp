#include "doctest.h"

#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "prism/env.hpp"

using namespace prism;

namespace {

GridMap map_of(const std::string& text) {
  std::istringstream in(text);
  return parse_map(in);
}

const char* kTiny =
    "type octile\n"
    "height 2\n"
    "width 2\n"
    "map\n"
    ".@\n"
    "..\n";

}  // namespace

TEST_CASE("map parsing transcribes cells exactly") {
  const GridMap map = map_of(kTiny);
  CHECK(map.width() == 2);
  CHECK(map.height() == 2);
  CHECK(map.passable({0, 0}));
  CHECK_FALSE(map.passable({1, 0}));
  CHECK(map.passable({0, 1}));
  CHECK(map.passable({1, 1}));
  CHECK(map.passable_count() == 3);
}

TEST_CASE("map parsing accepts every cell glyph class") {
  const GridMap map = map_of(
      "type octile\nheight 1\nwidth 6\nmap\n.G@OTW\n");
  CHECK(map.passable({0, 0}));
  CHECK(map.passable({1, 0}));  // ground counts as passable
  for (int x = 2; x < 6; ++x) CHECK_FALSE(map.passable({x, 0}));
}

TEST_CASE("map parsing tolerates CRLF and swapped header order") {
  const GridMap map =
      map_of("type octile\r\nwidth 3\r\nheight 1\r\nmap\r\n.@.\r\n");
  CHECK(map.width() == 3);
  CHECK(map.height() == 1);
  CHECK_FALSE(map.passable({1, 0}));
}

TEST_CASE("map parse errors name the offending line") {
  CHECK_THROWS_WITH_AS(map_of("type octile\nheight 3\nwidth 2\nmap\n..\n..\n"),
                       doctest::Contains("line"), std::runtime_error);
  CHECK_THROWS_WITH_AS(map_of("type octile\nheight 1\nwidth 3\nmap\n..\n"),
                       doctest::Contains("line 5"), std::runtime_error);
  CHECK_THROWS_WITH_AS(map_of("type octile\nheight 1\nwidth 2\nmap\n.x\n"),
                       doctest::Contains("line 5"), std::runtime_error);
  CHECK_THROWS_AS(map_of("height 1\nwidth 2\nmap\n..\n"), std::runtime_error);
  CHECK_THROWS_AS(map_of("type octile\nheight 0\nwidth 2\nmap\n"),
                  std::runtime_error);
}

TEST_CASE("golden maze file loads, round-trips, and has maze shape") {
  const GridMap maze = load_map(std::string(PRISM_DATA_DIR) + "/maze-32-32-2.map");
  CHECK(maze.width() == 32);
  CHECK(maze.height() == 32);
  CHECK(maze.passable_count() > 400);

  // Serialization reproduces the stored body byte for byte.
  std::ifstream in(std::string(PRISM_DATA_DIR) + "/maze-32-32-2.map");
  std::stringstream stored;
  stored << in.rdbuf();
  CHECK(serialize_map(maze) == stored.str());
}

TEST_CASE("scenario parsing transcribes and validates entries") {
  const GridMap open2 = map_of("type octile\nheight 2\nwidth 2\nmap\n..\n..\n");
  std::istringstream in("version 1\n0 m 2 2 0 0 1 1 2.0\n");
  const auto entries = parse_scenario(in, open2);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].start == Vertex{0, 0});
  CHECK(entries[0].goal == Vertex{1, 1});
  CHECK(entries[0].reference_length == doctest::Approx(2.0));
}

TEST_CASE("scenario entries on obstacles or off-map are rejected") {
  const GridMap tiny = map_of(kTiny);
  std::istringstream on_obstacle("version 1\n0 m 2 2 1 0 0 1 1.0\n");
  CHECK_THROWS_WITH_AS(parse_scenario(on_obstacle, tiny),
                       doctest::Contains("line 2"), std::runtime_error);
  std::istringstream off_map("version 1\n0 m 2 2 0 0 2 1 1.0\n");
  CHECK_THROWS_AS(parse_scenario(off_map, tiny), std::runtime_error);
  std::istringstream bad_dims("version 1\n0 m 9 9 0 0 0 1 1.0\n");
  CHECK_THROWS_AS(parse_scenario(bad_dims, tiny), std::runtime_error);
  std::istringstream bad_field("version 1\n0 m 2 2 zero 0 0 1 1.0\n");
  CHECK_THROWS_AS(parse_scenario(bad_field, tiny), std::runtime_error);
  std::istringstream no_version("0 m 2 2 0 0 0 1 1.0\n");
  CHECK_THROWS_AS(parse_scenario(no_version, tiny), std::runtime_error);
}

TEST_CASE("golden scenario preserves order and count") {
  const std::string dir(PRISM_DATA_DIR);
  const GridMap maze = load_map(dir + "/maze-32-32-2.map");
  const auto entries = load_scenario(dir + "/maze-32-32-2.scen", maze);

  // Count independently: non-empty lines after the version header.
  std::ifstream in(dir + "/maze-32-32-2.scen");
  std::string line;
  int data_lines = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      continue;
    }
    if (!line.empty()) ++data_lines;
  }
  CHECK(static_cast<int>(entries.size()) == data_lines);
  CHECK(entries.size() == 30);
  for (const auto& e : entries) {
    CHECK(maze.passable(e.start));
    CHECK(maze.passable(e.goal));
  }
  // Order preserved: entries appear exactly as the file lists them.
  CHECK(entries[0].start == Vertex{3, 13});
  CHECK(entries[0].goal == Vertex{1, 27});
  CHECK(entries[29].start != entries[0].start);
}

TEST_CASE("neighbors enumerate passable 4-neighborhoods") {
  const GridMap open3 =
      map_of("type octile\nheight 3\nwidth 3\nmap\n...\n...\n...\n");
  CHECK(oracle::grid_from({"...", "...", "..."}).passable_count() == 9);
  CHECK(open3.neighbors({1, 1}).size() == 4);
  CHECK(open3.neighbors({0, 0}).size() == 2);

  const GridMap boxed =
      map_of("type octile\nheight 3\nwidth 3\nmap\n.@.\n@.@\n.@.\n");
  CHECK(boxed.neighbors({1, 1}).empty());
}

TEST_CASE("neighbors are symmetric and ordered by (y, x)") {
  const GridMap map = oracle::grid_from({
      "..@..",
      ".@...",
      ".....",
      "..@.@",
      ".....",
  });
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const Vertex v{x, y};
      if (!map.passable(v)) continue;
      const auto ns = map.neighbors(v);
      for (size_t k = 1; k < ns.size(); ++k) CHECK(ns[k - 1] < ns[k]);
      for (const Vertex& u : ns) {
        const auto back = map.neighbors(u);
        CHECK(std::find(back.begin(), back.end(), v) != back.end());
      }
    }
  }
}

TEST_CASE("manhattan distance is the taxicab metric") {
  CHECK(manhattan({0, 0}, {0, 0}) == 0);
  CHECK(manhattan({1, 2}, {4, 0}) == 5);
  std::vector<Vertex> cells;
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) cells.push_back({x, y});
  for (const auto& a : cells) {
    for (const auto& b : cells) {
      CHECK(manhattan(a, b) == manhattan(b, a));
      CHECK((manhattan(a, b) == 0) == (a == b));
      for (const auto& c : cells)
        CHECK(manhattan(a, c) <= manhattan(a, b) + manhattan(b, c));
    }
  }
}
