// SPDX-License-Identifier: Apache-2.0
// Shared fixtures and brute-force helpers for the test binaries.
#ifndef DFNPART_TESTS_SUPPORT_HPP
#define DFNPART_TESTS_SUPPORT_HPP

#include "dfnpart/dfn_io.hpp"
#include "dfnpart/geometry.hpp"
#include "dfnpart/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dfnpart::test {

inline std::string data_path(const std::string& name) { return std::string(DFNPART_DATA_DIR) + "/" + name; }

inline Dfn fixture(const std::string& name) { return load_dfn(data_path(name)); }

inline Dfn random_dfn(std::uint64_t seed, int num_fractures = 16)
{
  GeneratorSpec spec;
  spec.num_fractures = num_fractures;
  return generate_dfn(spec, seed);
}

/// Axis-aligned square of half side h centred at c, normal along axis (0 = x, 1 = y, 2 = z).
inline std::vector<Vec3> square(int axis, Vec3 c, double h)
{
  auto at = [&](double a, double b) {
    if (axis == 0)
      return Vec3{c.x, c.y + a, c.z + b};
    if (axis == 1)
      return Vec3{c.x + a, c.y, c.z + b};
    return Vec3{c.x + a, c.y + b, c.z};
  };
  return {at(-h, -h), at(h, -h), at(h, h), at(-h, h)};
}

/// Cell edges as unordered node pairs.
inline std::set<std::pair<int, int>> mesh_edges(const PolyMesh& mesh)
{
  std::set<std::pair<int, int>> edges;
  for (const Cell& c : mesh.cells())
    for (std::size_t i = 0; i < c.node_ids.size(); ++i) {
      const int a = c.node_ids[i];
      const int b = c.node_ids[(i + 1) % c.node_ids.size()];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  return edges;
}

/// Strict convexity up to collinear (hanging) vertices, counter-clockwise.
inline bool is_convex_ccw(const std::vector<Vec2>& poly, double tol)
{
  const std::size_t n = poly.size();
  if (n < 3 || polygon_area(poly) <= 0.0)
    return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % n];
    const Vec2 c = poly[(i + 2) % n];
    if (cross(b - a, c - b) < -tol * norm(b - a) * norm(c - b))
      return false;
  }
  return true;
}

} // namespace dfnpart::test

#endif // DFNPART_TESTS_SUPPORT_HPP
