// SPDX-License-Identifier: Apache-2.0
#include "dfnpart/graph.hpp"

#include "dfnpart/errors.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace dfnpart {

std::string_view to_string(Strategy s)
{
  switch (s) {
  case Strategy::Pg:
    return "Pg";
  case Strategy::Wg:
    return "Wg";
  case Strategy::Pb:
    return "Pb";
  case Strategy::Wb:
    return "Wb";
  case Strategy::Pt:
    return "Pt";
  case Strategy::Wt:
    return "Wt";
  case Strategy::MeshP:
    return "MeshP";
  }
  return "?";
}

Strategy strategy_from_string(std::string_view name)
{
  for (Strategy s : {Strategy::Pg, Strategy::Wg, Strategy::Pb, Strategy::Wb, Strategy::Pt, Strategy::Wt,
                     Strategy::MeshP})
    if (to_string(s) == name)
      return s;
  throw Error("unknown strategy \"" + std::string(name) + "\"");
}

bool is_weighted(Strategy s) { return s == Strategy::Wg || s == Strategy::Wb || s == Strategy::Wt; }

long long DfnGraph::total_node_weight() const
{
  long long w = 0;
  for (long long x : node_weights)
    w += x;
  return w;
}

int DfnGraph::find(NodeLabelKind kind, int id) const
{
  const auto it = std::find(labels.begin(), labels.end(), NodeLabel{kind, id});
  return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

namespace {

class GraphBuilder
{
public:
  explicit GraphBuilder(Strategy s) { g_.strategy = s; }

  int add_node(NodeLabel label, long long weight)
  {
    g_.labels.push_back(label);
    // a fracture without Dofs still costs a process something; keep weights positive
    g_.node_weights.push_back(std::max(1LL, weight));
    return static_cast<int>(g_.labels.size()) - 1;
  }

  // Parallel edges merge, summing weights.
  void add_edge(int u, int v, long long w)
  {
    if (u == v)
      return;
    edges_[{std::min(u, v), std::max(u, v)}] += std::max(1LL, w);
  }

  DfnGraph finish()
  {
    const std::size_t n = g_.labels.size();
    std::vector<std::vector<std::pair<int, long long>>> adj(n);
    for (const auto& [e, w] : edges_) {
      adj[static_cast<std::size_t>(e.first)].emplace_back(e.second, w);
      adj[static_cast<std::size_t>(e.second)].emplace_back(e.first, w);
    }
    g_.xadj.assign(1, 0);
    for (auto& list : adj) {
      std::sort(list.begin(), list.end());
      for (const auto& [v, w] : list) {
        g_.adjncy.push_back(v);
        g_.edge_weights.push_back(w);
      }
      g_.xadj.push_back(static_cast<int>(g_.adjncy.size()));
    }
    return std::move(g_);
  }

private:
  DfnGraph g_;
  std::map<std::pair<int, int>, long long> edges_;
};

long long fracture_weight(const DofCounts* k, int r)
{
  return k ? k->per_fracture.at(static_cast<std::size_t>(r - 1)) : 1;
}

long long trace_weight(const DofCounts* k, int m) { return k ? k->per_trace.at(static_cast<std::size_t>(m - 1)) : 1; }

DfnGraph fracture_graph(const Dfn& dfn, const DofCounts* k, Strategy s)
{
  GraphBuilder b(s);
  for (const Fracture& f : dfn.fractures())
    b.add_node({NodeLabelKind::Fracture, f.id}, fracture_weight(k, f.id));
  for (const Trace& t : dfn.traces())
    b.add_edge(t.it_pair.first - 1, t.it_pair.second - 1, trace_weight(k, t.id));
  return b.finish();
}

DfnGraph bipartite_graph(const Dfn& dfn, const DofCounts* k, Strategy s, bool with_cross_points)
{
  GraphBuilder b(s);
  const int nf = static_cast<int>(dfn.num_fractures());
  for (const Fracture& f : dfn.fractures())
    b.add_node({NodeLabelKind::Fracture, f.id}, fracture_weight(k, f.id));
  for (const Trace& t : dfn.traces())
    b.add_node({NodeLabelKind::Trace, t.id}, trace_weight(k, t.id));
  for (const Trace& t : dfn.traces()) {
    const int tn = nf + t.id - 1;
    b.add_edge(tn, t.it_pair.first - 1, trace_weight(k, t.id));
    b.add_edge(tn, t.it_pair.second - 1, trace_weight(k, t.id));
  }
  if (with_cross_points)
    for (const CrossPoint& cp : dfn.cross_points()) {
      const int cn = b.add_node({NodeLabelKind::CrossPoint, cp.id}, 1);
      // [CP_t] = 1 times the graph degree of the cross point (three fractures, three traces)
      const long long w = k ? static_cast<long long>(cp.icp_triple.size() + cp.incident_traces.size()) : 1;
      for (int r : cp.icp_triple)
        b.add_edge(cn, r - 1, w);
      for (int m : cp.incident_traces)
        b.add_edge(cn, nf + m - 1, w);
    }
  return b.finish();
}

} // namespace

DfnGraph build_pg(const Dfn& dfn) { return fracture_graph(dfn, nullptr, Strategy::Pg); }
DfnGraph build_wg(const Dfn& dfn, const DofCounts& counts) { return fracture_graph(dfn, &counts, Strategy::Wg); }
DfnGraph build_pb(const Dfn& dfn) { return bipartite_graph(dfn, nullptr, Strategy::Pb, false); }
DfnGraph build_wb(const Dfn& dfn, const DofCounts& counts)
{
  return bipartite_graph(dfn, &counts, Strategy::Wb, false);
}
DfnGraph build_pt(const Dfn& dfn) { return bipartite_graph(dfn, nullptr, Strategy::Pt, true); }
DfnGraph build_wt(const Dfn& dfn, const DofCounts& counts)
{
  return bipartite_graph(dfn, &counts, Strategy::Wt, true);
}

DfnGraph build_mesh_dof_graph(const PolyMesh& mesh)
{
  GraphBuilder b(Strategy::MeshP);
  std::vector<int> index(mesh.nodes().size(), -1);
  for (const MeshNode& n : mesh.nodes())
    if (n.is_dof())
      index[static_cast<std::size_t>(n.id)] = b.add_node({NodeLabelKind::Dof, n.id}, 1);
  std::map<std::pair<int, int>, bool> seen;
  for (const Cell& c : mesh.cells()) {
    const std::size_t count = c.node_ids.size();
    for (std::size_t i = 0; i < count; ++i) {
      const int a = index[static_cast<std::size_t>(c.node_ids[i])];
      const int z = index[static_cast<std::size_t>(c.node_ids[(i + 1) % count])];
      if (a < 0 || z < 0)
        continue;
      // an edge shared by two cells is still one edge
      if (!seen.emplace(std::make_pair(std::min(a, z), std::max(a, z)), true).second)
        continue;
      b.add_edge(a, z, 1);
    }
  }
  return b.finish();
}

DfnGraph build_graph(Strategy s, const PolyMesh& mesh)
{
  const Dfn& dfn = mesh.dfn();
  switch (s) {
  case Strategy::Pg:
    return build_pg(dfn);
  case Strategy::Wg:
    return build_wg(dfn, mesh.counts());
  case Strategy::Pb:
    return build_pb(dfn);
  case Strategy::Wb:
    return build_wb(dfn, mesh.counts());
  case Strategy::Pt:
    return build_pt(dfn);
  case Strategy::Wt:
    return build_wt(dfn, mesh.counts());
  case Strategy::MeshP:
    return build_mesh_dof_graph(mesh);
  }
  throw Error("unknown strategy");
}

void validate_graph(const DfnGraph& g)
{
  const int n = g.num_nodes();
  if (n < 0 || g.xadj.front() != 0 || g.node_weights.size() != static_cast<std::size_t>(n) ||
      g.labels.size() != static_cast<std::size_t>(n) || g.edge_weights.size() != g.adjncy.size() ||
      g.xadj.back() != static_cast<int>(g.adjncy.size()))
    throw Error("graph arrays have inconsistent sizes");
  for (int u = 0; u < n; ++u) {
    if (g.node_weights[static_cast<std::size_t>(u)] < 1)
      throw Error("node " + std::to_string(u) + " has weight < 1");
    for (int e = g.xadj[static_cast<std::size_t>(u)]; e < g.xadj[static_cast<std::size_t>(u) + 1]; ++e) {
      const int v = g.adjncy[static_cast<std::size_t>(e)];
      const long long w = g.edge_weights[static_cast<std::size_t>(e)];
      if (v < 0 || v >= n)
        throw Error("node " + std::to_string(u) + " has out-of-range neighbour " + std::to_string(v));
      if (v == u)
        throw Error("self loop at node " + std::to_string(u));
      if (w < 1)
        throw Error("edge weight < 1 at node " + std::to_string(u));
      const auto first = g.adjncy.begin() + g.xadj[static_cast<std::size_t>(v)];
      const auto last = g.adjncy.begin() + g.xadj[static_cast<std::size_t>(v) + 1];
      const auto it = std::find(first, last, u);
      if (it == last || g.edge_weights[static_cast<std::size_t>(it - g.adjncy.begin())] != w)
        throw Error("asymmetric edge " + std::to_string(u) + " - " + std::to_string(v));
      if (e > g.xadj[static_cast<std::size_t>(u)] && g.adjncy[static_cast<std::size_t>(e) - 1] >= v)
        throw Error("neighbour list of node " + std::to_string(u) + " is not strictly ascending");
    }
  }
}

std::string graph_to_metis(const DfnGraph& g)
{
  const bool unit = std::all_of(g.node_weights.begin(), g.node_weights.end(), [](long long w) { return w == 1; }) &&
                    std::all_of(g.edge_weights.begin(), g.edge_weights.end(), [](long long w) { return w == 1; });
  std::ostringstream out;
  out << g.num_nodes() << ' ' << g.num_edges() << ' ' << (unit ? "000" : "011") << '\n';
  for (int u = 0; u < g.num_nodes(); ++u) {
    bool first = true;
    auto sep = [&] {
      if (!first)
        out << ' ';
      first = false;
    };
    if (!unit) {
      sep();
      out << g.node_weights[static_cast<std::size_t>(u)];
    }
    for (int e = g.xadj[static_cast<std::size_t>(u)]; e < g.xadj[static_cast<std::size_t>(u) + 1]; ++e) {
      sep();
      out << g.adjncy[static_cast<std::size_t>(e)] + 1;
      if (!unit)
        out << ' ' << g.edge_weights[static_cast<std::size_t>(e)];
    }
    out << '\n';
  }
  return out.str();
}

DfnGraph graph_from_metis(std::string_view text)
{
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line[0] == '%')
        continue;
      return true;
    }
    return false;
  };
  auto fail = [&](const std::string& what) -> ParseError {
    return ParseError("graph file line " + std::to_string(line_no) + ": " + what);
  };

  if (!next_line())
    throw ParseError("graph file: missing header");
  std::istringstream header(line);
  long long n = -1, m = -1;
  std::string fmt = "000";
  if (!(header >> n >> m) || n < 0 || m < 0)
    throw fail("bad header");
  header >> fmt;
  if (fmt.size() < 3)
    fmt.insert(0, 3 - fmt.size(), '0');
  if (fmt.size() != 3 || fmt[0] != '0' || (fmt[1] != '0' && fmt[1] != '1') || (fmt[2] != '0' && fmt[2] != '1'))
    throw fail("unsupported fmt \"" + fmt + "\"");
  const bool vw = fmt[1] == '1';
  const bool ew = fmt[2] == '1';

  DfnGraph g;
  g.strategy = Strategy::Pg;
  for (long long u = 0; u < n; ++u) {
    if (!next_line())
      throw fail("expected " + std::to_string(n) + " node lines, got " + std::to_string(u));
    std::istringstream row(line);
    long long w = 1;
    if (vw && !(row >> w))
      throw fail("missing node weight");
    g.node_weights.push_back(w);
    g.labels.push_back({NodeLabelKind::Fracture, static_cast<int>(u) + 1});
    long long v = 0;
    while (row >> v) {
      if (v < 1 || v > n)
        throw fail("neighbour " + std::to_string(v) + " out of range");
      long long e = 1;
      if (ew && !(row >> e))
        throw fail("missing edge weight");
      g.adjncy.push_back(static_cast<int>(v - 1));
      g.edge_weights.push_back(e);
    }
    if (!row.eof())
      throw fail("unexpected token");
    g.xadj.push_back(static_cast<int>(g.adjncy.size()));
  }
  if (g.num_edges() * 2 != static_cast<long long>(g.adjncy.size()) || g.num_edges() != m)
    throw ParseError("graph file: header declares " + std::to_string(m) + " edges, body lists " +
                     std::to_string(g.adjncy.size()) + " half-edges");
  validate_graph(g);
  return g;
}

void export_graph(const DfnGraph& g, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());
  out << graph_to_metis(g);
}

DfnGraph import_graph(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return graph_from_metis(buf.str());
}

} // namespace dfnpart
