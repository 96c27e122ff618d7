#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "nlsx/ansatz.hpp"
#include "nlsx/io.hpp"

namespace nlsx {

// Snapshot files: <base>.nlsfld holds interleaved (re, im) 64-bit
// little-endian floats, row-major with x1 fastest; masked nodes are stored as
// zeros. A <base>.json sidecar carries the grid header.

inline json obstacle_to_json(const std::optional<Obstacle>& obs) {
  json j;
  if (!obs) {
    j["kind"] = "none";
    return j;
  }
  switch (obs->kind) {
    case ObstacleKind::interval1d:
      j["kind"] = "interval1d";
      j["center"] = double_as_json(obs->center[0]);
      j["half_width"] = double_as_json(obs->extent[0]);
      break;
    case ObstacleKind::disc2d:
      j["kind"] = "disc2d";
      j["center"] = json::array({double_as_json(obs->center[0]), double_as_json(obs->center[1])});
      j["radius"] = double_as_json(obs->extent[0]);
      break;
    case ObstacleKind::ellipse2d:
      j["kind"] = "ellipse2d";
      j["center"] = json::array({double_as_json(obs->center[0]), double_as_json(obs->center[1])});
      j["semi_axes"] =
          json::array({double_as_json(obs->extent[0]), double_as_json(obs->extent[1])});
      break;
  }
  return j;
}

inline std::optional<Obstacle> obstacle_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") return std::nullopt;
  if (kind == "interval1d")
    return Obstacle::interval(double_from_json(j.at("center")),
                              double_from_json(j.at("half_width")));
  if (kind == "disc2d") {
    const auto& c = j.at("center");
    return Obstacle::disc({double_from_json(c.at(0)), double_from_json(c.at(1))},
                          double_from_json(j.at("radius")));
  }
  if (kind == "ellipse2d") {
    const auto& c = j.at("center");
    const auto& a = j.at("semi_axes");
    return Obstacle::ellipse({double_from_json(c.at(0)), double_from_json(c.at(1))},
                             {double_from_json(a.at(0)), double_from_json(a.at(1))});
  }
  throw ConfigError("unknown obstacle kind '" + kind + "'");
}

inline void write_field(const std::filesystem::path& base, const Field& f, double p) {
  const ExteriorGrid& g = *f.grid;
  json side;
  side["d"] = g.d();
  side["L"] = double_as_json(g.L());
  side["h"] = double_as_json(g.h());
  side["t"] = double_as_json(f.t);
  side["p"] = double_as_json(p);
  side["obstacle"] = obstacle_to_json(g.obstacle());
  json counts = json::array();
  for (int a = 0; a < g.d(); ++a) counts.push_back(g.nodes_per_axis());
  side["node_counts"] = counts;
  write_text_file(base.string() + ".json", side.dump(2) + "\n");

  static_assert(sizeof(double) == 8);
  std::ofstream out(base.string() + ".nlsfld", std::ios::binary);
  if (!out) throw ConfigError("cannot open for write: " + base.string() + ".nlsfld");
  for (long i = 0; i < g.total_nodes(); ++i) {
    const double re = f.v[i].real(), im = f.v[i].imag();
    out.write(reinterpret_cast<const char*>(&re), 8);
    out.write(reinterpret_cast<const char*>(&im), 8);
  }
  if (!out) throw ConfigError("write failed: " + base.string() + ".nlsfld");
}

struct LoadedField {
  Field field;
  double p = 3.0;
};

inline LoadedField read_field(const std::filesystem::path& base) {
  const json side = json::parse(read_text_file(base.string() + ".json"));
  const int d = side.at("d").get<int>();
  const double L = double_from_json(side.at("L"));
  const double h = double_from_json(side.at("h"));
  auto grid = std::make_shared<ExteriorGrid>(d, L, h, obstacle_from_json(side.at("obstacle")));
  for (std::size_t a = 0; a < side.at("node_counts").size(); ++a)
    if (side.at("node_counts").at(a).get<int>() != grid->nodes_per_axis())
      throw ConfigError("node_counts in sidecar do not match the grid");

  LoadedField out;
  out.p = double_from_json(side.at("p"));
  out.field = Field::zero(grid, double_from_json(side.at("t")));

  std::ifstream in(base.string() + ".nlsfld", std::ios::binary);
  if (!in) throw ConfigError("cannot open: " + base.string() + ".nlsfld");
  for (long i = 0; i < grid->total_nodes(); ++i) {
    double re = 0.0, im = 0.0;
    in.read(reinterpret_cast<char*>(&re), 8);
    in.read(reinterpret_cast<char*>(&im), 8);
    out.field.v[i] = Complex(re, im);
  }
  if (!in) throw ConfigError("payload truncated: " + base.string() + ".nlsfld");
  out.field.enforce_mask();
  return out;
}

}  // namespace nlsx
