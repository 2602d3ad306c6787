// SPDX-License-Identifier: Apache-2.0
#ifndef DFNPART_GEOMETRY_HPP
#define DFNPART_GEOMETRY_HPP

#include "dfnpart/vec.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace dfnpart {

/// Orthonormal frame of a fracture plane used for fracture-local 2D coordinates.
struct PlaneBasis
{
  Vec3 origin;
  Vec3 u;
  Vec3 v;
  Vec3 normal;

  Vec2 to_local(Vec3 p) const { return {dot(p - origin, u), dot(p - origin, v)}; }
  Vec3 to_global(Vec2 q) const { return origin + q.x * u + q.y * v; }
  double signed_distance(Vec3 p) const { return dot(p - origin, normal); }
};

/// Planar convex polygon. Ids are 1-based and contiguous inside a DFN.
struct Fracture
{
  int id = 0;
  std::vector<Vec3> vertices;
  double transmissivity = 1.0;
  PlaneBasis basis;

  double area() const;
  /// Polygon vertices in the fracture's local frame (counter-clockwise).
  std::vector<Vec2> local_polygon() const;

  friend bool operator==(const Fracture& a, const Fracture& b)
  {
    return a.id == b.id && a.vertices == b.vertices && a.transmissivity == b.transmissivity;
  }
};

/// Builds the fracture (frame included) and validates planarity/convexity.
/// Throws GeometryError on degenerate input.
Fracture make_fracture(int id, std::vector<Vec3> vertices, double transmissivity, double eps_geom);

struct Trace
{
  int id = 0;
  std::array<Vec3, 2> endpoints;
  std::pair<int, int> it_pair; // (r, s), r < s

  double length() const { return distance(endpoints[0], endpoints[1]); }
  friend bool operator==(const Trace&, const Trace&) = default;
};

struct CrossPoint
{
  int id = 0;
  Vec3 point;
  std::array<int, 3> icp_triple;      // ascending fracture ids
  std::array<int, 3> incident_traces; // ascending trace ids
  friend bool operator==(const CrossPoint&, const CrossPoint&) = default;
};

/// A discrete fracture network: fractures, their pairwise traces and triple cross points.
///
/// Trace ids follow insertion order of the higher fracture index: all traces of
/// fracture s with lower fractures r < s come before those of s + 1, and within one s
/// they are ordered by r. This reproduces IT(1) = (1,2), IT(2) = (1,3), IT(3) = (2,3),
/// IT(4) = (1,4) for a network built fracture by fracture.
class Dfn
{
public:
  Dfn() = default;
  Dfn(std::vector<Fracture> fractures, std::vector<Trace> traces, std::vector<CrossPoint> cross_points,
      double eps_geom);

  const std::vector<Fracture>& fractures() const { return fractures_; }
  const std::vector<Trace>& traces() const { return traces_; }
  const std::vector<CrossPoint>& cross_points() const { return cross_points_; }

  std::size_t num_fractures() const { return fractures_.size(); }
  std::size_t num_traces() const { return traces_.size(); }
  std::size_t num_cross_points() const { return cross_points_.size(); }

  /// 1-based accessors.
  const Fracture& fracture(int r) const { return fractures_.at(static_cast<std::size_t>(r - 1)); }
  const Trace& trace(int m) const { return traces_.at(static_cast<std::size_t>(m - 1)); }
  const CrossPoint& cross_point(int t) const { return cross_points_.at(static_cast<std::size_t>(t - 1)); }

  std::pair<int, int> it(int m) const { return trace(m).it_pair; }
  std::array<int, 3> icp(int t) const { return cross_point(t).icp_triple; }

  /// Trace ids incident to fracture r, ascending.
  const std::vector<int>& traces_of(int r) const { return traces_of_.at(static_cast<std::size_t>(r - 1)); }

  double eps_geom() const { return eps_geom_; }

  friend bool operator==(const Dfn& a, const Dfn& b)
  {
    return a.fractures_ == b.fractures_ && a.traces_ == b.traces_ && a.cross_points_ == b.cross_points_;
  }

private:
  std::vector<Fracture> fractures_;
  std::vector<Trace> traces_;
  std::vector<CrossPoint> cross_points_;
  std::vector<std::vector<int>> traces_of_;
  double eps_geom_ = 0.0;
};

/// Signed area of a 2D polygon (positive when counter-clockwise).
double polygon_area(const std::vector<Vec2>& poly);

/// Default tolerance: 1e-9 times the diameter of the vertices' bounding box.
double default_eps_geom(const std::vector<std::vector<Vec3>>& polygons);

/// Segment where two convex planar polygons meet, if longer than eps_geom.
/// The result does not depend on argument order; `id` of the returned trace is 0.
std::optional<Trace> intersect_fractures(const Fracture& a, const Fracture& b, double eps_geom);

/// Points where exactly three traces meet. Throws GeometryError if four or more
/// traces meet at one point.
std::vector<CrossPoint> detect_cross_points(const std::vector<Fracture>& fractures,
                                            const std::vector<Trace>& traces, double eps_geom);

/// Intersects all fracture pairs, numbers traces and detects cross points.
Dfn build_dfn(std::vector<Fracture> fractures, double eps_geom);

/// Convenience: builds fractures from raw polygons (ids 1..n) with a default tolerance.
Dfn build_dfn(const std::vector<std::vector<Vec3>>& polygons);

/// Random rectangles in an axis-aligned box.
struct GeneratorSpec
{
  int num_fractures = 16;
  double min_size = 0.2; // rectangle side length range
  double max_size = 0.45;
  Vec3 domain_lo{0.0, 0.0, 0.0};
  Vec3 domain_hi{1.0, 1.0, 1.0};
  /// Rejects a candidate fracture whose traces would be shorter than this
  /// fraction of min_size, or which meets another plane at less than min_angle_deg.
  double min_trace_fraction = 0.05;
  double min_angle_deg = 5.0;
  int max_retries = 1000;
};

/// Deterministic for a given (spec, seed). Throws GeometryError if a fracture cannot
/// be placed within spec.max_retries attempts.
Dfn generate_dfn(const GeneratorSpec& spec, std::uint64_t seed);

} // namespace dfnpart

#endif // DFNPART_GEOMETRY_HPP
