// SPDX-License-Identifier: Apache-2.0
#include "dfnpart/dfn_io.hpp"
#include "dfnpart/errors.hpp"
#include "dfnpart/geometry.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace dfnpart;
using namespace dfnpart::test;
using Catch::Matchers::WithinAbs;

namespace {

// Membership of a 3D point in a convex planar polygon, written without the library's
// plane frames: plane distance plus edge half-spaces around the polygon normal.
bool in_polygon(const std::vector<Vec3>& poly, Vec3 p, double tol)
{
  const Vec3 n = normalized(cross(poly[1] - poly[0], poly[2] - poly[0]));
  if (std::abs(dot(p - poly[0], n)) > tol)
    return false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec3 a = poly[i];
    const Vec3 b = poly[(i + 1) % poly.size()];
    if (dot(cross(b - a, p - a), n) < -tol * norm(b - a))
      return false;
  }
  return true;
}

Vec3 rotate(Vec3 p, double ax, double ay, double az)
{
  auto rx = [](Vec3 v, double t) {
    return Vec3{v.x, std::cos(t) * v.y - std::sin(t) * v.z, std::sin(t) * v.y + std::cos(t) * v.z};
  };
  auto ry = [](Vec3 v, double t) {
    return Vec3{std::cos(t) * v.x + std::sin(t) * v.z, v.y, -std::sin(t) * v.x + std::cos(t) * v.z};
  };
  auto rz = [](Vec3 v, double t) {
    return Vec3{std::cos(t) * v.x - std::sin(t) * v.y, std::sin(t) * v.x + std::cos(t) * v.y, v.z};
  };
  return rz(ry(rx(p, ax), ay), az);
}

// Regular polygon of m vertices, radius rad, rotated and shifted.
std::vector<Vec3> random_polygon(std::mt19937_64& rng, int m)
{
  std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
  std::uniform_real_distribution<double> off(-0.3, 0.3);
  std::uniform_real_distribution<double> rad(0.6, 1.0);
  const double r = rad(rng);
  const double a = ang(rng), b = ang(rng), c = ang(rng);
  const Vec3 shift{off(rng), off(rng), off(rng)};
  std::vector<Vec3> poly;
  for (int i = 0; i < m; ++i) {
    const double t = 6.283185307179586 * i / m;
    poly.push_back(rotate({r * std::cos(t), r * std::sin(t), 0.0}, a, b, c) + shift);
  }
  return poly;
}

// Extreme parameters along the planes' common line where the point lies in both
// polygons: dense sampling for a seed point, then bisection on each side.
std::optional<std::pair<Vec3, Vec3>> sampled_segment(const std::vector<Vec3>& pa, const std::vector<Vec3>& pb)
{
  const Vec3 na = normalized(cross(pa[1] - pa[0], pa[2] - pa[0]));
  const Vec3 nb = normalized(cross(pb[1] - pb[0], pb[2] - pb[0]));
  const Vec3 d = cross(na, nb);
  if (norm(d) < 1e-12)
    return std::nullopt;
  // point on both planes: x = alpha na + beta nb
  const double ha = dot(na, pa[0]), hb = dot(nb, pb[0]), c = dot(na, nb);
  const double det = 1.0 - c * c;
  const Vec3 x0 = ((ha - c * hb) / det) * na + ((hb - c * ha) / det) * nb;
  const Vec3 dir = normalized(d);
  auto inside = [&](double t) { return in_polygon(pa, x0 + t * dir, 1e-13) && in_polygon(pb, x0 + t * dir, 1e-13); };
  const int samples = 20000;
  const double span = 10.0;
  double seed = 0.0;
  bool found = false;
  for (int i = 0; i <= samples && !found; ++i) {
    const double t = -span + 2.0 * span * i / samples;
    if (inside(t)) {
      seed = t;
      found = true;
    }
  }
  if (!found)
    return std::nullopt;
  auto extreme = [&](double out) {
    double in = seed;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (in + out);
      (inside(mid) ? in : out) = mid;
    }
    return in;
  };
  return std::pair{x0 + extreme(-span) * dir, x0 + extreme(span) * dir};
}

double distance_to_trace(const Trace& t, Vec3 p) { return distance_to_segment(p, t.endpoints[0], t.endpoints[1]); }

} // namespace

TEST_CASE("orthogonal squares through their midlines meet in a unit trace", "[geometry]")
{
  const double eps = 1e-9;
  const Fracture a = make_fracture(1, square(2, {0, 0, 0}, 0.5), 1.0, eps);
  const Fracture b = make_fracture(2, square(0, {0, 0, 0}, 0.5), 1.0, eps);
  const auto t = intersect_fractures(a, b, eps);
  REQUIRE(t.has_value());
  CHECK_THAT(t->length(), WithinAbs(1.0, 1e-12));
  CHECK(distance_to_trace(*t, {0, 0, 0}) < 1e-12);
  CHECK(t->it_pair == std::pair{1, 2});
}

TEST_CASE("parallel fractures do not intersect", "[geometry]")
{
  const Fracture a = make_fracture(1, square(2, {0, 0, 0}, 0.5), 1.0, 1e-9);
  const Fracture b = make_fracture(2, square(2, {0, 0, 0.3}, 0.5), 1.0, 1e-9);
  CHECK_FALSE(intersect_fractures(a, b, 1e-9).has_value());
}

TEST_CASE("intersection matches a sampling and bisection oracle on rotated polygons", "[geometry]")
{
  std::mt19937_64 rng(2024);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto pa = random_polygon(rng, 3 + trial % 5);
    const auto pb = random_polygon(rng, 3 + (trial / 5) % 5);
    const double eps = default_eps_geom({pa, pb});
    const Fracture a = make_fracture(1, pa, 1.0, eps);
    const Fracture b = make_fracture(2, pb, 1.0, eps);
    const auto got = intersect_fractures(a, b, eps);
    const auto oracle = sampled_segment(pa, pb);
    if (!oracle || distance(oracle->first, oracle->second) < 1e-6) {
      // no overlap, or a touching configuration the sampler cannot resolve
      if (!oracle)
        CHECK_FALSE(got.has_value());
      continue;
    }
    REQUIRE(got.has_value());
    const Vec3 g0 = got->endpoints[0], g1 = got->endpoints[1];
    const double direct = std::max(distance(g0, oracle->first), distance(g1, oracle->second));
    const double swapped = std::max(distance(g0, oracle->second), distance(g1, oracle->first));
    CHECK(std::min(direct, swapped) <= 10.0 * eps);
    ++compared;
  }
  CHECK(compared > 50);
}

TEST_CASE("intersection is symmetric in its arguments", "[geometry][property]")
{
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pa = random_polygon(rng, 4);
    const auto pb = random_polygon(rng, 6);
    const double eps = default_eps_geom({pa, pb});
    const Fracture a = make_fracture(1, pa, 1.0, eps);
    const Fracture b = make_fracture(2, pb, 1.0, eps);
    const auto ab = intersect_fractures(a, b, eps);
    const auto ba = intersect_fractures(b, a, eps);
    REQUIRE(ab.has_value() == ba.has_value());
    if (!ab)
      continue;
    const bool same = distance(ab->endpoints[0], ba->endpoints[0]) <= eps && distance(ab->endpoints[1], ba->endpoints[1]) <= eps;
    const bool flipped = distance(ab->endpoints[0], ba->endpoints[1]) <= eps && distance(ab->endpoints[1], ba->endpoints[0]) <= eps;
    CHECK((same || flipped));
    CHECK(ab->it_pair == ba->it_pair);
  }
}

TEST_CASE("three fractures through one point give one cross point", "[geometry]")
{
  const Dfn dfn = build_dfn({square(2, {0, 0, 0}, 1.0), square(0, {0, 0, 0}, 0.8), square(1, {0, 0, 0}, 0.7)});
  REQUIRE(dfn.num_traces() == 3);
  REQUIRE(dfn.num_cross_points() == 1);
  const CrossPoint& cp = dfn.cross_point(1);
  CHECK(cp.icp_triple == std::array{1, 2, 3});
  CHECK(cp.incident_traces == std::array{1, 2, 3});
  CHECK(distance(cp.point, {0, 0, 0}) <= dfn.eps_geom());
}

TEST_CASE("two fractures have no cross point", "[geometry]")
{
  const Dfn dfn = fixture("two_fractures.json");
  CHECK(dfn.num_traces() == 1);
  CHECK(dfn.num_cross_points() == 0);
}

TEST_CASE("four traces meeting in one point are rejected", "[geometry]")
{
  // three coordinate planes plus the plane x + y + z = 0, all through the origin
  std::vector<Vec3> tilted;
  const Vec3 n = normalized({1, 1, 1});
  const Vec3 u = normalized({1, -1, 0});
  const Vec3 v = cross(n, u);
  for (int i = 0; i < 4; ++i) {
    const double t = 1.5707963267948966 * i + 0.3;
    tilted.push_back(0.6 * std::cos(t) * u + 0.6 * std::sin(t) * v);
  }
  CHECK_THROWS_AS(build_dfn({square(2, {0, 0, 0}, 1.0), square(0, {0, 0, 0}, 1.0), square(1, {0, 0, 0}, 1.0), tilted}),
                  GeometryError);
}

TEST_CASE("cross points match an exhaustive pairwise trace oracle", "[geometry][property]")
{
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
  std::uniform_real_distribution<double> pos(0.3, 0.7);
  for (int trial = 0; trial < 10; ++trial) {
    // a rotated orthogonal triple with an exact shared point, then random clutter
    const double a = ang(rng), b = ang(rng), c = ang(rng);
    const Vec3 centre{pos(rng), pos(rng), pos(rng)};
    std::vector<std::vector<Vec3>> polys;
    for (int axis = 0; axis < 3; ++axis) {
      auto sq = square(axis, {0, 0, 0}, 0.25 + 0.05 * axis);
      for (Vec3& p : sq)
        p = rotate(p, a, b, c) + centre;
      polys.push_back(sq);
    }
    const Dfn clutter = random_dfn(1000 + trial, 6);
    for (const Fracture& f : clutter.fractures())
      polys.push_back(f.vertices);
    Dfn dfn;
    try {
      dfn = build_dfn(polys);
    }
    catch (const GeometryError&) {
      continue; // clutter produced a higher-order meeting; not this test's subject
    }
    // oracle: triples of traces whose segments pairwise come within eps of one point
    std::vector<Vec3> oracle;
    const auto& tr = dfn.traces();
    for (std::size_t i = 0; i < tr.size(); ++i)
      for (std::size_t j = i + 1; j < tr.size(); ++j)
        for (std::size_t k = j + 1; k < tr.size(); ++k) {
          std::set<int> frs{tr[i].it_pair.first, tr[i].it_pair.second, tr[j].it_pair.first,
                            tr[j].it_pair.second, tr[k].it_pair.first, tr[k].it_pair.second};
          if (frs.size() != 3)
            continue;
          // the meeting point of the three planes must lie on every segment
          const Fracture& f1 = dfn.fracture(*frs.begin());
          const Fracture& f2 = dfn.fracture(*std::next(frs.begin()));
          const Fracture& f3 = dfn.fracture(*std::prev(frs.end()));
          const Vec3 n1 = f1.basis.normal, n2 = f2.basis.normal, n3 = f3.basis.normal;
          const double det = dot(n1, cross(n2, n3));
          if (std::abs(det) < 1e-9)
            continue;
          const Vec3 p = (1.0 / det) * (dot(n1, f1.vertices[0]) * cross(n2, n3) + dot(n2, f2.vertices[0]) * cross(n3, n1) +
                                        dot(n3, f3.vertices[0]) * cross(n1, n2));
          const double e = dfn.eps_geom();
          if (distance_to_trace(tr[i], p) <= e && distance_to_trace(tr[j], p) <= e && distance_to_trace(tr[k], p) <= e)
            oracle.push_back(p);
        }
    REQUIRE(oracle.size() == dfn.num_cross_points());
    for (const Vec3& p : oracle) {
      bool hit = false;
      for (const CrossPoint& cp : dfn.cross_points())
        hit = hit || distance(cp.point, p) <= dfn.eps_geom();
      CHECK(hit);
    }
    CHECK(std::any_of(dfn.cross_points().begin(), dfn.cross_points().end(),
                      [&](const CrossPoint& cp) { return distance(cp.point, centre) <= dfn.eps_geom(); }));
  }
}

TEST_CASE("trace numbering follows the higher fracture index", "[geometry]")
{
  const Dfn dfn = fixture("four_fractures.json");
  REQUIRE(dfn.num_traces() >= 4);
  CHECK(dfn.it(1) == std::pair{1, 2});
  CHECK(dfn.it(2) == std::pair{1, 3});
  CHECK(dfn.it(3) == std::pair{2, 3});
  CHECK(dfn.it(4) == std::pair{1, 4});
}

TEST_CASE("generator edge cases and determinism", "[geometry]")
{
  GeneratorSpec one;
  one.num_fractures = 1;
  const Dfn single = generate_dfn(one, 3);
  CHECK(single.num_fractures() == 1);
  CHECK(single.num_traces() == 0);
  CHECK(single.num_cross_points() == 0);

  GeneratorSpec big;
  big.num_fractures = 512;
  big.min_size = 0.05;
  big.max_size = 0.15;
  CHECK(dfn_to_string(generate_dfn(big, 42)) == dfn_to_string(generate_dfn(big, 42)));
  CHECK(dfn_to_string(generate_dfn(GeneratorSpec{}, 1)) != dfn_to_string(generate_dfn(GeneratorSpec{}, 2)));
}

TEST_CASE("frac6 fixture loads with the expected traces", "[geometry][io]")
{
  const Dfn dfn = fixture("frac6.json");
  CHECK(dfn.num_fractures() == 6);
  CHECK(dfn.num_traces() == 6);
  CHECK(dfn.it(2) == std::pair{2, 3});
  CHECK(dfn.it(4) == std::pair{2, 6});
  CHECK(dfn.num_cross_points() == 1);
}

TEST_CASE("DFN serialization", "[geometry][io]")
{
  SECTION("empty fracture list is a valid empty network")
  {
    const Dfn dfn = dfn_from_string(R"({"fractures": []})");
    CHECK(dfn.num_fractures() == 0);
    CHECK(dfn.num_traces() == 0);
  }
  SECTION("save then load is the identity")
  {
    const Dfn dfn = random_dfn(7);
    const Dfn back = dfn_from_string(dfn_to_string(dfn));
    CHECK(back == dfn);
    CHECK(dfn_to_string(back) == dfn_to_string(dfn));
  }
  SECTION("malformed input reports parse errors")
  {
    CHECK_THROWS_AS(dfn_from_string("{\"fractures\": [ {\"id\": 1, "), ParseError);
    CHECK_THROWS_AS(dfn_from_string(R"({"fractures": [{"id": 1, "vertices": [[0,0,0],[1,0]]}]})"), ParseError);
  }
  SECTION("invariant violations are geometry errors")
  {
    CHECK_THROWS_AS(dfn_from_string(R"({"fractures": [{"id": 1, "vertices": [[0,0,0],[1,0,0],[1,1,0.5],[0,1,0]]}]})"),
                    GeometryError);
    CHECK_THROWS_AS(dfn_from_string(R"({"fractures": [{"id": 2, "vertices": [[0,0,0],[1,0,0],[1,1,0]]}]})"), Error);
  }
}

TEST_CASE("random networks satisfy the trace and cross point invariants", "[geometry][property]")
{
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Dfn dfn = random_dfn(seed, 24);
    const double eps = dfn.eps_geom();
    for (const Trace& t : dfn.traces()) {
      CHECK(t.it_pair.first < t.it_pair.second);
      CHECK(t.length() > eps);
      for (const Vec3& e : t.endpoints) {
        CHECK(in_polygon(dfn.fracture(t.it_pair.first).vertices, e, 10 * eps));
        CHECK(in_polygon(dfn.fracture(t.it_pair.second).vertices, e, 10 * eps));
      }
    }
    for (const CrossPoint& cp : dfn.cross_points()) {
      const auto [r, s, q] = cp.icp_triple;
      CHECK((r < s && s < q));
      std::set<std::pair<int, int>> pairs;
      for (int m : cp.incident_traces) {
        pairs.insert(dfn.it(m));
        CHECK(distance_to_trace(dfn.trace(m), cp.point) <= eps);
      }
      CHECK(pairs == std::set<std::pair<int, int>>{{r, s}, {r, q}, {s, q}});
    }
  }
}
