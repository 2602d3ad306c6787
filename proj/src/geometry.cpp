// SPDX-License-Identifier: Apache-2.0
#include "dfnpart/geometry.hpp"

#include "dfnpart/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>

namespace dfnpart {

namespace {

Vec3 newell_normal(const std::vector<Vec3>& poly)
{
  Vec3 n;
  const std::size_t count = poly.size();
  for (std::size_t i = 0; i < count; ++i) {
    const Vec3& a = poly[i];
    const Vec3& b = poly[(i + 1) % count];
    n.x += (a.y - b.y) * (a.z + b.z);
    n.y += (a.z - b.z) * (a.x + b.x);
    n.z += (a.x - b.x) * (a.y + b.y);
  }
  return n;
}

// Projection onto `dir` of the part of convex polygon `poly` lying on `plane`.
std::optional<std::pair<double, double>> span_on_plane(const std::vector<Vec3>& poly, const PlaneBasis& plane,
                                                       Vec3 dir, double eps)
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  bool any = false;
  const std::size_t count = poly.size();
  std::vector<double> s(count);
  for (std::size_t i = 0; i < count; ++i)
    s[i] = plane.signed_distance(poly[i]);
  auto take = [&](Vec3 p) {
    const double t = dot(p, dir);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
    any = true;
  };
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = (i + 1) % count;
    if (std::abs(s[i]) <= eps)
      take(poly[i]);
    if ((s[i] > eps && s[j] < -eps) || (s[i] < -eps && s[j] > eps)) {
      const double t = s[i] / (s[i] - s[j]);
      take(poly[i] + t * (poly[j] - poly[i]));
    }
  }
  if (!any)
    return std::nullopt;
  return std::make_pair(lo, hi);
}

// Unique point of three planes, if their normals are independent.
std::optional<Vec3> three_plane_point(const PlaneBasis& a, const PlaneBasis& b, const PlaneBasis& c)
{
  const Vec3 bc = cross(b.normal, c.normal);
  const double det = dot(a.normal, bc);
  if (std::abs(det) < 1e-12)
    return std::nullopt;
  const double ha = dot(a.normal, a.origin);
  const double hb = dot(b.normal, b.origin);
  const double hc = dot(c.normal, c.origin);
  const Vec3 p = ha * bc + hb * cross(c.normal, a.normal) + hc * cross(a.normal, b.normal);
  return (1.0 / det) * p;
}

// Portable uniform double in [0, 1).
double unit_uniform(std::mt19937_64& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double a, double b) { return a + (b - a) * unit_uniform(rng); }

} // namespace

double polygon_area(const std::vector<Vec2>& poly)
{
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    twice += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * twice;
}

double Fracture::area() const { return polygon_area(local_polygon()); }

std::vector<Vec2> Fracture::local_polygon() const
{
  std::vector<Vec2> out;
  out.reserve(vertices.size());
  for (const Vec3& p : vertices)
    out.push_back(basis.to_local(p));
  return out;
}

Fracture make_fracture(int id, std::vector<Vec3> vertices, double transmissivity, double eps_geom)
{
  const std::string where = "fracture " + std::to_string(id) + ": ";
  if (vertices.size() < 3)
    throw GeometryError(where + "needs at least 3 vertices");
  if (!(transmissivity > 0.0))
    throw GeometryError(where + "transmissivity must be positive");
  const Vec3 n = newell_normal(vertices);
  if (norm(n) <= eps_geom * eps_geom)
    throw GeometryError(where + "degenerate polygon");

  Fracture f;
  f.id = id;
  f.transmissivity = transmissivity;
  f.basis.origin = vertices[0];
  f.basis.normal = normalized(n);
  if (distance(vertices[1], vertices[0]) <= eps_geom)
    throw GeometryError(where + "repeated vertex");
  f.basis.u = normalized(vertices[1] - vertices[0]);
  f.basis.v = cross(f.basis.normal, f.basis.u);

  for (const Vec3& p : vertices)
    if (std::abs(f.basis.signed_distance(p)) > eps_geom)
      throw GeometryError(where + "vertices are not coplanar");

  f.vertices = std::move(vertices);
  const auto local = f.local_polygon();
  const std::size_t count = local.size();
  for (std::size_t i = 0; i < count; ++i) {
    const Vec2 e0 = local[(i + 1) % count] - local[i];
    const Vec2 e1 = local[(i + 2) % count] - local[(i + 1) % count];
    if (norm(e0) <= eps_geom)
      throw GeometryError(where + "repeated vertex");
    if (cross(e0, e1) < -eps_geom * (norm(e0) + norm(e1)))
      throw GeometryError(where + "polygon is not convex");
  }
  if (polygon_area(local) <= eps_geom * eps_geom)
    throw GeometryError(where + "zero area");
  return f;
}

Dfn::Dfn(std::vector<Fracture> fractures, std::vector<Trace> traces, std::vector<CrossPoint> cross_points,
         double eps_geom)
    : fractures_(std::move(fractures)), traces_(std::move(traces)), cross_points_(std::move(cross_points)),
      eps_geom_(eps_geom)
{
  const int nf = static_cast<int>(fractures_.size());
  for (int r = 0; r < nf; ++r)
    if (fractures_[static_cast<std::size_t>(r)].id != r + 1)
      throw GeometryError("fracture ids must be 1..#F in order");

  traces_of_.assign(fractures_.size(), {});
  std::set<std::pair<int, int>> pairs;
  for (std::size_t m = 0; m < traces_.size(); ++m) {
    const Trace& t = traces_[m];
    const std::string where = "trace " + std::to_string(t.id) + ": ";
    if (t.id != static_cast<int>(m) + 1)
      throw GeometryError("trace ids must be 1..#T in order");
    const auto [r, s] = t.it_pair;
    if (!(1 <= r && r < s && s <= nf))
      throw GeometryError(where + "it_pair must be strictly increasing fracture ids");
    if (!pairs.insert(t.it_pair).second)
      throw GeometryError(where + "two traces on the same fracture pair");
    if (t.length() <= eps_geom)
      throw GeometryError(where + "zero length");
    for (const Vec3& e : t.endpoints)
      for (int f : {r, s})
        if (std::abs(fracture(f).basis.signed_distance(e)) > eps_geom * 10.0)
          throw GeometryError(where + "endpoint is off the plane of fracture " + std::to_string(f));
    traces_of_[static_cast<std::size_t>(r - 1)].push_back(t.id);
    traces_of_[static_cast<std::size_t>(s - 1)].push_back(t.id);
  }

  for (std::size_t c = 0; c < cross_points_.size(); ++c) {
    const CrossPoint& cp = cross_points_[c];
    const std::string where = "cross point " + std::to_string(cp.id) + ": ";
    if (cp.id != static_cast<int>(c) + 1)
      throw GeometryError("cross point ids must be 1..#CP in order");
    const auto [r, s, q] = cp.icp_triple;
    if (!(1 <= r && r < s && s < q && q <= nf))
      throw GeometryError(where + "icp_triple must be strictly increasing fracture ids");
    std::set<std::pair<int, int>> expected{{r, s}, {r, q}, {s, q}};
    std::set<std::pair<int, int>> got;
    for (int m : cp.incident_traces) {
      if (m < 1 || m > static_cast<int>(traces_.size()))
        throw GeometryError(where + "unknown incident trace");
      got.insert(trace(m).it_pair);
      if (distance_to_segment(cp.point, trace(m).endpoints[0], trace(m).endpoints[1]) > eps_geom * 10.0)
        throw GeometryError(where + "point is not on incident trace " + std::to_string(m));
    }
    if (got != expected)
      throw GeometryError(where + "incident traces do not connect the three fractures of its triple");
  }
}

double default_eps_geom(const std::vector<std::vector<Vec3>>& polygons)
{
  constexpr double inf = std::numeric_limits<double>::infinity();
  Vec3 lo{inf, inf, inf}, hi{-inf, -inf, -inf};
  bool any = false;
  for (const auto& poly : polygons)
    for (const Vec3& p : poly) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
      any = true;
    }
  if (!any)
    return 1e-9;
  const double diam = distance(lo, hi);
  return diam > 0.0 ? 1e-9 * diam : 1e-9;
}

std::optional<Trace> intersect_fractures(const Fracture& fa, const Fracture& fb, double eps_geom)
{
  const Fracture& a = fa.id <= fb.id ? fa : fb;
  const Fracture& b = fa.id <= fb.id ? fb : fa;
  const Vec3 d = cross(a.basis.normal, b.basis.normal);
  const double dd = dot(d, d);
  if (dd < 1e-24)
    return std::nullopt; // parallel or coplanar
  const Vec3 dir = (1.0 / std::sqrt(dd)) * d;

  const auto span_a = span_on_plane(a.vertices, b.basis, dir, eps_geom);
  if (!span_a)
    return std::nullopt;
  const auto span_b = span_on_plane(b.vertices, a.basis, dir, eps_geom);
  if (!span_b)
    return std::nullopt;
  const double lo = std::max(span_a->first, span_b->first);
  const double hi = std::min(span_a->second, span_b->second);
  if (hi - lo <= eps_geom)
    return std::nullopt;

  const double ha = dot(a.basis.normal, a.basis.origin);
  const double hb = dot(b.basis.normal, b.basis.origin);
  const Vec3 p0 = (1.0 / dd) * (ha * cross(b.basis.normal, d) + hb * cross(d, a.basis.normal));
  const double t0 = dot(p0, dir);

  Trace t;
  t.endpoints = {p0 + (lo - t0) * dir, p0 + (hi - t0) * dir};
  t.it_pair = {a.id, b.id};
  return t;
}

std::vector<CrossPoint> detect_cross_points(const std::vector<Fracture>& fractures,
                                            const std::vector<Trace>& traces, double eps_geom)
{
  std::map<std::pair<int, int>, int> by_pair;
  std::vector<std::set<int>> higher(fractures.size() + 1);
  for (const Trace& t : traces) {
    by_pair[t.it_pair] = t.id;
    higher[static_cast<std::size_t>(t.it_pair.first)].insert(t.it_pair.second);
  }
  auto on_trace = [&](Vec3 p, int m) {
    const Trace& t = traces[static_cast<std::size_t>(m - 1)];
    return distance_to_segment(p, t.endpoints[0], t.endpoints[1]) <= eps_geom;
  };

  std::vector<CrossPoint> out;
  for (const Trace& t : traces) {
    const auto [r, s] = t.it_pair;
    for (int q : higher[static_cast<std::size_t>(s)]) {
      if (!higher[static_cast<std::size_t>(r)].contains(q))
        continue;
      const int m_rs = t.id, m_rq = by_pair.at({r, q}), m_sq = by_pair.at({s, q});
      const auto p = three_plane_point(fractures[static_cast<std::size_t>(r - 1)].basis,
                                       fractures[static_cast<std::size_t>(s - 1)].basis,
                                       fractures[static_cast<std::size_t>(q - 1)].basis);
      if (!p || !on_trace(*p, m_rs) || !on_trace(*p, m_rq) || !on_trace(*p, m_sq))
        continue;
      int meeting = 0;
      for (const Trace& other : traces)
        if (on_trace(*p, other.id))
          ++meeting;
      if (meeting > 3)
        throw GeometryError("degenerate network: " + std::to_string(meeting) +
                            " traces meet at one point (only triple cross points are supported)");
      CrossPoint cp;
      cp.point = *p;
      cp.icp_triple = {r, s, q};
      cp.incident_traces = {m_rs, m_rq, m_sq};
      std::sort(cp.incident_traces.begin(), cp.incident_traces.end());
      out.push_back(cp);
    }
  }
  std::sort(out.begin(), out.end(), [](const CrossPoint& x, const CrossPoint& y) { return x.icp_triple < y.icp_triple; });
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].id = static_cast<int>(i) + 1;
  return out;
}

Dfn build_dfn(std::vector<Fracture> fractures, double eps_geom)
{
  std::vector<Trace> traces;
  for (std::size_t s = 1; s < fractures.size(); ++s)
    for (std::size_t r = 0; r < s; ++r)
      if (auto t = intersect_fractures(fractures[r], fractures[s], eps_geom)) {
        t->id = static_cast<int>(traces.size()) + 1;
        traces.push_back(*t);
      }
  auto cps = detect_cross_points(fractures, traces, eps_geom);
  return Dfn(std::move(fractures), std::move(traces), std::move(cps), eps_geom);
}

Dfn build_dfn(const std::vector<std::vector<Vec3>>& polygons)
{
  const double eps = default_eps_geom(polygons);
  std::vector<Fracture> fractures;
  for (std::size_t i = 0; i < polygons.size(); ++i)
    fractures.push_back(make_fracture(static_cast<int>(i) + 1, polygons[i], 1.0, eps));
  return build_dfn(std::move(fractures), eps);
}

Dfn generate_dfn(const GeneratorSpec& spec, std::uint64_t seed)
{
  if (spec.num_fractures < 0 || !(spec.min_size > 0.0) || spec.max_size < spec.min_size)
    throw GeometryError("invalid generator spec");
  std::mt19937_64 rng(seed);
  const double eps = 1e-9 * distance(spec.domain_lo, spec.domain_hi);
  const double min_sin = std::sin(spec.min_angle_deg * std::numbers::pi / 180.0);
  const double min_trace = spec.min_trace_fraction * spec.min_size;

  std::vector<Fracture> fractures;
  for (int id = 1; id <= spec.num_fractures; ++id) {
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_retries && !placed; ++attempt) {
      const Vec3 c{uniform(rng, spec.domain_lo.x, spec.domain_hi.x), uniform(rng, spec.domain_lo.y, spec.domain_hi.y),
                   uniform(rng, spec.domain_lo.z, spec.domain_hi.z)};
      const double nz = uniform(rng, -1.0, 1.0);
      const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      const double rho = std::sqrt(std::max(0.0, 1.0 - nz * nz));
      const Vec3 n{rho * std::cos(phi), rho * std::sin(phi), nz};
      const Vec3 helper = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
      const Vec3 t0 = normalized(cross(n, helper));
      const Vec3 t1 = cross(n, t0);
      const double theta = uniform(rng, 0.0, std::numbers::pi);
      const Vec3 e1 = std::cos(theta) * t0 + std::sin(theta) * t1;
      const Vec3 e2 = cross(n, e1);
      const double ha = 0.5 * uniform(rng, spec.min_size, spec.max_size);
      const double hb = 0.5 * uniform(rng, spec.min_size, spec.max_size);
      std::vector<Vec3> verts{c - ha * e1 - hb * e2, c + ha * e1 - hb * e2, c + ha * e1 + hb * e2,
                              c - ha * e1 + hb * e2};
      Fracture f = make_fracture(id, std::move(verts), 1.0, eps);

      bool ok = true;
      for (const Fracture& g : fractures) {
        const auto tr = intersect_fractures(g, f, eps);
        if (!tr)
          continue;
        if (norm(cross(f.basis.normal, g.basis.normal)) < min_sin || tr->length() < min_trace) {
          ok = false;
          break;
        }
      }
      if (ok) {
        fractures.push_back(std::move(f));
        placed = true;
      }
    }
    if (!placed)
      throw GeometryError("generator could not place fracture " + std::to_string(id) + " after " +
                          std::to_string(spec.max_retries) + " attempts");
  }
  return build_dfn(std::move(fractures), eps);
}

} // namespace dfnpart
