#pragma once

#include <string>
#include <vector>

#include "dirslam/surfel_map.h"

namespace dirslam {

struct PlyVertex {
  float x = 0, y = 0, z = 0;
  float nx = 0, ny = 0, nz = 1;
  uint8_t red = 0, green = 0, blue = 0;
  uint32_t label = 0;
  float radius = 0;
};

// Binary little-endian PLY with per-vertex x y z nx ny nz red green blue,
// plus scalar properties `label` (uint) and `radius` (float).
void write_surfel_ply(const std::string& path, const MapSnapshot& snapshot);

// Reads vertices back; tolerates missing color/label/radius properties and
// both float and double coordinate types (binary little-endian or ascii).
std::vector<PlyVertex> read_ply_vertices(const std::string& path);

// Per-surfel statistics CSV (one row per published surfel).
void write_surfel_csv(const std::string& path, const MapSnapshot& snapshot);

}  // namespace dirslam
