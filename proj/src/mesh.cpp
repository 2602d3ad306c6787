// SPDX-License-Identifier: Apache-2.0
#include "dfnpart/mesh.hpp"

#include "dfnpart/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

namespace dfnpart {

std::string_view to_string(NodeKind kind)
{
  switch (kind) {
  case NodeKind::Interior:
    return "INTERIOR";
  case NodeKind::OnTrace:
    return "ON_TRACE";
  case NodeKind::CrossPoint:
    return "CROSS_POINT";
  case NodeKind::Boundary:
    return "BOUNDARY";
  }
  return "?";
}

namespace {

void sorted_insert(std::vector<int>& v, int x)
{
  const auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.end() || *it != x)
    v.insert(it, x);
}

void sorted_erase(std::vector<int>& v, int x)
{
  const auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it != v.end() && *it == x)
    v.erase(it);
}

struct GridKey
{
  std::int64_t i, j, k;
  bool operator==(const GridKey&) const = default;
};

struct GridKeyHash
{
  std::size_t operator()(const GridKey& key) const noexcept
  {
    std::size_t h = static_cast<std::size_t>(key.i) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::size_t>(key.j) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    h ^= static_cast<std::size_t>(key.k) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return h;
  }
};

// Centroid and cut direction (across the major axis of the area inertia tensor).
std::pair<Vec2, Vec2> inertia_cut(const std::vector<Vec2>& poly)
{
  const Vec2 o = poly.front();
  double a = 0.0, cx = 0.0, cy = 0.0, ixx = 0.0, iyy = 0.0, ixy = 0.0;
  const std::size_t count = poly.size();
  for (std::size_t i = 0; i < count; ++i) {
    const Vec2 p = poly[i] - o;
    const Vec2 q = poly[(i + 1) % count] - o;
    const double w = cross(p, q);
    a += w;
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
    ixx += (p.x * p.x + p.x * q.x + q.x * q.x) * w;
    iyy += (p.y * p.y + p.y * q.y + q.y * q.y) * w;
    ixy += (p.x * q.y + 2.0 * p.x * p.y + 2.0 * q.x * q.y + q.x * p.y) * w;
  }
  a *= 0.5;
  cx /= 6.0 * a;
  cy /= 6.0 * a;
  const double cxx = ixx / 12.0 - a * cx * cx;
  const double cyy = iyy / 12.0 - a * cy * cy;
  const double cxy = ixy / 24.0 - a * cx * cy;
  const double theta = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
  // major axis is (cos, sin); the cut runs perpendicular to it
  return {o + Vec2{cx, cy}, Vec2{-std::sin(theta), std::cos(theta)}};
}

} // namespace

class MeshBuilder
{
public:
  MeshBuilder(std::shared_ptr<const Dfn> dfn, MeshOptions options)
      : dfn_(std::move(dfn)), options_(std::move(options)), eps_(dfn_->eps_geom()), cell_size_(1e3 * eps_),
        fracture_cells_(dfn_->num_fractures())
  {
  }

  explicit MeshBuilder(const PolyMesh& mesh)
      : dfn_(mesh.dfn_), options_(mesh.options_), eps_(dfn_->eps_geom()), cell_size_(1e3 * eps_),
        nodes_(mesh.nodes_), cells_(mesh.cells_), fracture_cells_(mesh.fracture_cells_)
  {
    for (const MeshNode& n : nodes_)
      grid_[key(n.position)].push_back(n.id);
  }

  void seed_fractures()
  {
    for (const Fracture& f : dfn_->fractures()) {
      std::vector<int> ids;
      for (const Vec3& p : f.vertices)
        ids.push_back(find_or_add(p));
      add_cell(f.id, std::move(ids));
    }
  }

  void cut_along_traces()
  {
    for (const Fracture& f : dfn_->fractures())
      for (int m : dfn_->traces_of(f.id)) {
        const Trace& t = dfn_->trace(m);
        const Vec2 q0 = f.basis.to_local(t.endpoints[0]);
        const Vec2 q1 = f.basis.to_local(t.endpoints[1]);
        const std::vector<int> snapshot = fracture_cells_[static_cast<std::size_t>(f.id - 1)];
        for (int c : snapshot)
          if (segment_overlaps_cell(c, q0, q1))
            split_cell(c, q0, q1 - q0);
      }
  }

  // Every node lying on a trace must be a vertex on both fractures of the trace.
  void enforce_conformity()
  {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const Trace& t : dfn_->traces()) {
        const auto [r, s] = t.it_pair;
        std::vector<int> on_trace;
        for (int f : {r, s})
          for (int c : fracture_cells_[static_cast<std::size_t>(f - 1)])
            for (int n : cells_[static_cast<std::size_t>(c)].node_ids)
              if (distance_to_segment(pos(n), t.endpoints[0], t.endpoints[1]) <= eps_)
                on_trace.push_back(n);
        std::sort(on_trace.begin(), on_trace.end());
        on_trace.erase(std::unique(on_trace.begin(), on_trace.end()), on_trace.end());
        for (int n : on_trace)
          for (int f : {r, s})
            if (!node_on_fracture(n, f)) {
              insert_into_fracture(n, f, t.id);
              changed = true;
            }
      }
    }
  }

  void refine(const std::vector<int>& cell_ids)
  {
    std::vector<std::pair<Vec2, Vec2>> lines;
    lines.reserve(cell_ids.size());
    for (int c : cell_ids)
      lines.push_back(inertia_cut(polygon(c)));
    for (std::size_t i = 0; i < cell_ids.size(); ++i)
      if (split_cell(cell_ids[i], lines[i].first, lines[i].second) < 0)
        throw MeshError("refinement failed to split cell " + std::to_string(cell_ids[i]));
  }

  PolyMesh finish();

private:
  GridKey key(Vec3 p) const
  {
    return {static_cast<std::int64_t>(std::floor(p.x / cell_size_)),
            static_cast<std::int64_t>(std::floor(p.y / cell_size_)),
            static_cast<std::int64_t>(std::floor(p.z / cell_size_))};
  }

  Vec3 pos(int n) const { return nodes_[static_cast<std::size_t>(n)].position; }

  int find_or_add(Vec3 p)
  {
    const GridKey k = key(p);
    for (std::int64_t di = -1; di <= 1; ++di)
      for (std::int64_t dj = -1; dj <= 1; ++dj)
        for (std::int64_t dk = -1; dk <= 1; ++dk) {
          const auto it = grid_.find({k.i + di, k.j + dj, k.k + dk});
          if (it == grid_.end())
            continue;
          for (int n : it->second)
            if (distance(pos(n), p) <= eps_)
              return n;
        }
    MeshNode node;
    node.id = static_cast<int>(nodes_.size());
    node.position = p;
    nodes_.push_back(std::move(node));
    grid_[k].push_back(nodes_.back().id);
    return nodes_.back().id;
  }

  int add_cell(int fracture, std::vector<int> node_ids)
  {
    Cell c;
    c.id = static_cast<int>(cells_.size());
    c.fracture_id = fracture;
    c.node_ids = std::move(node_ids);
    for (int n : c.node_ids)
      sorted_insert(nodes_[static_cast<std::size_t>(n)].cells, c.id);
    fracture_cells_[static_cast<std::size_t>(fracture - 1)].push_back(c.id);
    cells_.push_back(std::move(c));
    return cells_.back().id;
  }

  std::vector<Vec2> polygon(int c) const
  {
    const Cell& cell = cells_[static_cast<std::size_t>(c)];
    const PlaneBasis& basis = dfn_->fracture(cell.fracture_id).basis;
    std::vector<Vec2> out;
    out.reserve(cell.node_ids.size());
    for (int n : cell.node_ids)
      out.push_back(basis.to_local(pos(n)));
    return out;
  }

  // Does the segment [q0, q1] run through the closed cell over a positive length?
  bool segment_overlaps_cell(int c, Vec2 q0, Vec2 q1) const
  {
    const auto poly = polygon(c);
    const Vec2 d = q1 - q0;
    double t0 = 0.0, t1 = 1.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2 e = poly[(i + 1) % poly.size()] - poly[i];
      const double el = norm(e);
      // inside: cross(e, x - v_i) >= -eps * |e|
      const double f0 = cross(e, q0 - poly[i]) + eps_ * el;
      const double fd = cross(e, d);
      if (std::abs(fd) < 1e-300) {
        if (f0 < 0.0)
          return false;
        continue;
      }
      const double t = -f0 / fd;
      if (fd > 0.0)
        t0 = std::max(t0, t);
      else
        t1 = std::min(t1, t);
    }
    return (t1 - t0) * norm(d) > eps_;
  }

  // Splits cell c by the line through p with direction d (fracture-local frame).
  // Returns the id of the new cell, or -1 when the line does not separate the cell.
  int split_cell(int c, Vec2 p, Vec2 d)
  {
    const auto poly = polygon(c);
    const std::vector<int> ids = cells_[static_cast<std::size_t>(c)].node_ids;
    const std::size_t count = ids.size();
    const double dl = norm(d);
    std::vector<double> s(count);
    bool pos_side = false, neg_side = false;
    for (std::size_t i = 0; i < count; ++i) {
      s[i] = cross(d, poly[i] - p) / dl;
      pos_side = pos_side || s[i] > eps_;
      neg_side = neg_side || s[i] < -eps_;
    }
    if (!pos_side || !neg_side)
      return -1;

    struct Crossing
    {
      int a, b, p;
    };
    std::vector<int> left, right;
    std::vector<Crossing> crossings;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = (i + 1) % count;
      if (s[i] >= -eps_)
        left.push_back(ids[i]);
      if (s[i] <= eps_)
        right.push_back(ids[i]);
      if ((s[i] > eps_ && s[j] < -eps_) || (s[i] < -eps_ && s[j] > eps_)) {
        const double t = s[i] / (s[i] - s[j]);
        const Vec3 a = pos(ids[i]);
        const Vec3 b = pos(ids[j]);
        const int np = find_or_add(a + t * (b - a));
        left.push_back(np);
        right.push_back(np);
        crossings.push_back({ids[i], ids[j], np});
      }
    }

    const PlaneBasis& basis = dfn_->fracture(cells_[static_cast<std::size_t>(c)].fracture_id).basis;
    auto area_of = [&](const std::vector<int>& v) {
      std::vector<Vec2> q;
      for (int n : v)
        q.push_back(basis.to_local(pos(n)));
      return polygon_area(q);
    };
    const double min_area = eps_ * eps_;
    if (left.size() < 3 || right.size() < 3 || area_of(left) <= min_area || area_of(right) <= min_area)
      throw MeshError("degenerate split of cell " + std::to_string(c) + " on fracture " +
                      std::to_string(cells_[static_cast<std::size_t>(c)].fracture_id));

    const int fracture = cells_[static_cast<std::size_t>(c)].fracture_id;
    for (int n : ids)
      if (std::find(left.begin(), left.end(), n) == left.end())
        sorted_erase(nodes_[static_cast<std::size_t>(n)].cells, c);
    for (int n : left)
      sorted_insert(nodes_[static_cast<std::size_t>(n)].cells, c);
    cells_[static_cast<std::size_t>(c)].node_ids = std::move(left);
    const int nc = add_cell(fracture, std::move(right));
    for (const Crossing& x : crossings)
      insert_on_edge(x.a, x.b, x.p);
    return nc;
  }

  // Inserts node p between a and b in every cell where a and b are consecutive.
  bool insert_on_edge(int a, int b, int p)
  {
    bool any = false;
    const std::vector<int> candidates = nodes_[static_cast<std::size_t>(a)].cells;
    for (int c : candidates) {
      auto& v = cells_[static_cast<std::size_t>(c)].node_ids;
      const std::size_t count = v.size();
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = (i + 1) % count;
        if ((v[i] == a && v[j] == b) || (v[i] == b && v[j] == a)) {
          v.insert(v.begin() + static_cast<std::ptrdiff_t>(j == 0 ? count : j), p);
          sorted_insert(nodes_[static_cast<std::size_t>(p)].cells, c);
          any = true;
          break;
        }
      }
    }
    return any;
  }

  bool node_on_fracture(int n, int f) const
  {
    for (int c : nodes_[static_cast<std::size_t>(n)].cells)
      if (cells_[static_cast<std::size_t>(c)].fracture_id == f)
        return true;
    return false;
  }

  void insert_into_fracture(int n, int f, int trace_id)
  {
    const Vec3 p = pos(n);
    for (int c : fracture_cells_[static_cast<std::size_t>(f - 1)]) {
      const auto& v = cells_[static_cast<std::size_t>(c)].node_ids;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const int a = v[i], b = v[(i + 1) % v.size()];
        const Vec3 pa = pos(a), pb = pos(b);
        if (distance_to_segment(p, pa, pb) <= eps_ && distance(p, pa) > eps_ && distance(p, pb) > eps_) {
          insert_on_edge(a, b, n);
          return;
        }
      }
    }
    throw MeshError("mesh is not conforming along trace " + std::to_string(trace_id) + ": node " +
                    std::to_string(n) + " has no host edge on fracture " + std::to_string(f));
  }

  std::shared_ptr<const Dfn> dfn_;
  MeshOptions options_;
  double eps_;
  double cell_size_;
  std::vector<MeshNode> nodes_;
  std::vector<Cell> cells_;
  std::vector<std::vector<int>> fracture_cells_;
  std::unordered_map<GridKey, std::vector<int>, GridKeyHash> grid_;
};

PolyMesh MeshBuilder::finish()
{
  const Dfn& dfn = *dfn_;
  const std::size_t nf = dfn.num_fractures();
  std::vector<bool> dirichlet(nf, !options_.dirichlet_fractures.has_value());
  if (options_.dirichlet_fractures)
    for (int r : *options_.dirichlet_fractures) {
      if (r < 1 || r > static_cast<int>(nf))
        throw MeshError("unknown Dirichlet fracture " + std::to_string(r));
      dirichlet[static_cast<std::size_t>(r - 1)] = true;
    }
  std::vector<std::vector<int>> cps_of(nf);
  for (const CrossPoint& cp : dfn.cross_points())
    for (int r : cp.icp_triple)
      cps_of[static_cast<std::size_t>(r - 1)].push_back(cp.id);

  for (MeshNode& n : nodes_) {
    n.fractures.clear();
    for (int c : n.cells)
      sorted_insert(n.fractures, cells_[static_cast<std::size_t>(c)].fracture_id);
    n.traces.clear();
    int cp_id = 0;
    int boundary_of = 0;
    for (int r : n.fractures) {
      for (int m : dfn.traces_of(r)) {
        const Trace& t = dfn.trace(m);
        if (distance_to_segment(n.position, t.endpoints[0], t.endpoints[1]) <= eps_)
          sorted_insert(n.traces, m);
      }
      for (int t : cps_of[static_cast<std::size_t>(r - 1)])
        if (cp_id == 0 && distance(n.position, dfn.cross_point(t).point) <= eps_)
          cp_id = t;
      if (boundary_of == 0 && dirichlet[static_cast<std::size_t>(r - 1)]) {
        const auto& verts = dfn.fracture(r).vertices;
        for (std::size_t i = 0; i < verts.size(); ++i)
          if (distance_to_segment(n.position, verts[i], verts[(i + 1) % verts.size()]) <= eps_) {
            boundary_of = r;
            break;
          }
      }
    }
    if (cp_id != 0) {
      n.kind = NodeKind::CrossPoint;
      n.ref = cp_id;
    }
    else if (boundary_of != 0) {
      n.kind = NodeKind::Boundary;
      n.ref = boundary_of;
    }
    else if (!n.traces.empty()) {
      n.kind = NodeKind::OnTrace;
      n.ref = n.traces.front();
    }
    else {
      n.kind = NodeKind::Interior;
      n.ref = n.fractures.empty() ? 0 : n.fractures.front();
    }
  }

  PolyMesh mesh;
  mesh.dfn_ = dfn_;
  mesh.options_ = options_;
  mesh.nodes_ = std::move(nodes_);
  mesh.cells_ = std::move(cells_);
  mesh.fracture_cells_ = std::move(fracture_cells_);

  DofCounts& k = mesh.counts_;
  k.per_fracture.assign(nf, 0);
  k.per_trace.assign(dfn.num_traces(), 0);
  for (const MeshNode& n : mesh.nodes_) {
    if (!n.is_dof())
      continue;
    ++k.n_total;
    if (n.kind == NodeKind::CrossPoint)
      ++k.n_cp;
    if (!n.traces.empty())
      ++k.n_trace;
    for (int r : n.fractures)
      ++k.per_fracture[static_cast<std::size_t>(r - 1)];
    for (int m : n.traces)
      ++k.per_trace[static_cast<std::size_t>(m - 1)];
  }
  return mesh;
}

std::vector<int> PolyMesh::nodes_of_fracture(int r) const
{
  std::vector<int> out;
  for (int c : cells_of_fracture(r))
    for (int n : cell(c).node_ids)
      out.push_back(n);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> PolyMesh::dof_nodes_on_trace(int m) const
{
  const Trace& t = dfn().trace(m);
  const Vec3 a = t.endpoints[0];
  const Vec3 ab = t.endpoints[1] - a;
  std::vector<std::pair<double, int>> keyed;
  for (int n : nodes_of_fracture(t.it_pair.first)) {
    const MeshNode& node = nodes_[static_cast<std::size_t>(n)];
    if (node.is_dof() && std::binary_search(node.traces.begin(), node.traces.end(), m))
      keyed.emplace_back(dot(node.position - a, ab), n);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> out;
  out.reserve(keyed.size());
  for (const auto& [t_param, n] : keyed)
    out.push_back(n);
  return out;
}

bool PolyMesh::is_dirichlet_fracture(int r) const
{
  if (!options_.dirichlet_fractures)
    return true;
  const auto& v = *options_.dirichlet_fractures;
  return std::find(v.begin(), v.end(), r) != v.end();
}

std::vector<Vec2> PolyMesh::cell_polygon(int cell_id) const
{
  const Cell& c = cell(cell_id);
  const PlaneBasis& basis = dfn().fracture(c.fracture_id).basis;
  std::vector<Vec2> out;
  out.reserve(c.node_ids.size());
  for (int n : c.node_ids)
    out.push_back(basis.to_local(node(n).position));
  return out;
}

double PolyMesh::cell_area(int cell_id) const { return polygon_area(cell_polygon(cell_id)); }

double PolyMesh::fracture_mesh_area(int r) const
{
  double a = 0.0;
  for (int c : cells_of_fracture(r))
    a += cell_area(c);
  return a;
}

PolyMesh build_minimal_mesh(const Dfn& dfn, MeshOptions options)
{
  MeshBuilder b(std::make_shared<const Dfn>(dfn), std::move(options));
  b.seed_fractures();
  b.cut_along_traces();
  b.enforce_conformity();
  return b.finish();
}

PolyMesh refine_pass(const PolyMesh& mesh)
{
  std::vector<int> all(mesh.cells().size());
  std::iota(all.begin(), all.end(), 0);
  MeshBuilder b(mesh);
  b.refine(all);
  return b.finish();
}

PolyMesh refine_uniform(const PolyMesh& mesh, int n)
{
  if (n < 1)
    throw MeshError("refine_uniform: n must be >= 1");
  const long long target = static_cast<long long>(mesh.dfn().num_fractures()) * n;
  PolyMesh current = mesh;
  int stalled = 0;
  while (current.counts().n_total < target) {
    PolyMesh next = refine_pass(current);
    // a pass over cells whose new nodes all land on Dirichlet boundaries adds no Dofs;
    // the next pass always does, so only repeated stalls are an error
    stalled = next.counts().n_total > current.counts().n_total ? 0 : stalled + 1;
    if (stalled >= 3)
      throw MeshError("refine_uniform: Dof count stopped growing at " + std::to_string(current.counts().n_total));
    current = std::move(next);
  }
  return current;
}

PolyMesh refine_marked(const PolyMesh& mesh, const std::set<int>& marked_cells)
{
  for (int c : marked_cells)
    if (c < 0 || c >= static_cast<int>(mesh.cells().size()))
      throw MeshError("refine_marked: unknown cell " + std::to_string(c));
  if (marked_cells.empty())
    return mesh;
  MeshBuilder b(mesh);
  b.refine(std::vector<int>(marked_cells.begin(), marked_cells.end()));
  return b.finish();
}

std::vector<int> neighborhood(const PolyMesh& mesh, int node_id)
{
  if (node_id < 0 || node_id >= static_cast<int>(mesh.nodes().size()))
    throw MeshError("neighborhood: unknown node " + std::to_string(node_id));
  std::vector<int> out{node_id};
  for (int c : mesh.node(node_id).cells)
    for (int n : mesh.cell(c).node_ids)
      out.push_back(n);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string mesh_to_string(const PolyMesh& mesh)
{
  using nlohmann::json;
  json nodes = json::array();
  for (const MeshNode& n : mesh.nodes())
    nodes.push_back({{"id", n.id},
                     {"xyz", json::array({n.position.x, n.position.y, n.position.z})},
                     {"kind", std::string(to_string(n.kind))},
                     {"ref", n.ref}});
  json cells = json::array();
  for (const Cell& c : mesh.cells())
    cells.push_back({{"id", c.id}, {"fracture", c.fracture_id}, {"nodes", c.node_ids}});
  const DofCounts& k = mesh.counts();
  json root{{"nodes", nodes},
            {"cells", cells},
            {"dof_counts",
             {{"n_cp", k.n_cp},
              {"n_trace", k.n_trace},
              {"n_total", k.n_total},
              {"per_fracture", k.per_fracture},
              {"per_trace", k.per_trace}}}};
  return root.dump(1) + "\n";
}

void save_mesh(const PolyMesh& mesh, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());
  out << mesh_to_string(mesh);
}

} // namespace dfnpart
