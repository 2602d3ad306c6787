// SPDX-License-Identifier: Apache-2.0
#include "dfnpart/dofs.hpp"

#include "dfnpart/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace dfnpart {

Networks build_local_networks(const Dfn& dfn, const FractureAssignment& a)
{
  Networks nets;
  for (int p = 0; p < a.k; ++p) {
    nets.local.push_back({p, {}, {}});
    nets.communicating.push_back({p, {}, {}});
  }
  for (const Fracture& f : dfn.fractures())
    nets.local[static_cast<std::size_t>(a.part_of_fracture(f.id))].fractures.push_back(f.id);
  for (const Trace& t : dfn.traces()) {
    const auto [r, s] = t.it_pair;
    const int pr = a.part_of_fracture(r);
    const int ps = a.part_of_fracture(s);
    if (pr == ps) {
      nets.local[static_cast<std::size_t>(pr)].internal_traces.push_back(t.id);
      continue;
    }
    nets.communicating[static_cast<std::size_t>(pr)].owned_traces.push_back(t.id);
    auto& recv = nets.communicating[static_cast<std::size_t>(ps)].recv_fractures;
    if (std::find(recv.begin(), recv.end(), s) == recv.end())
      recv.push_back(s);
  }
  for (auto& lc : nets.communicating)
    std::sort(lc.recv_fractures.begin(), lc.recv_fractures.end());
  return nets;
}

InterfaceOwnership interface_ownership(const Dfn& dfn, const FractureAssignment& a)
{
  InterfaceOwnership o;
  for (const Trace& t : dfn.traces())
    o.trace_owner.push_back(a.part_of_fracture(t.it_pair.first));
  for (const CrossPoint& cp : dfn.cross_points())
    o.cp_owner.push_back(a.part_of_fracture(cp.icp_triple[0]));
  return o;
}

std::vector<int> dof_owners(const PolyMesh& mesh, const FractureAssignment& a)
{
  const InterfaceOwnership o = interface_ownership(mesh.dfn(), a);
  std::vector<int> owner(mesh.nodes().size(), -1);
  for (const MeshNode& n : mesh.nodes()) {
    if (!n.is_dof())
      continue;
    int p = 0;
    if (n.kind == NodeKind::CrossPoint)
      p = o.cp_owner[static_cast<std::size_t>(n.ref - 1)];
    else if (!n.traces.empty())
      p = o.trace_owner[static_cast<std::size_t>(n.traces.front() - 1)];
    else
      p = a.part_of_fracture(n.fractures.front());
    owner[static_cast<std::size_t>(n.id)] = p;
  }
  return owner;
}

std::string_view to_string(Scheme s) { return s == Scheme::Serial ? "serial" : "reordered"; }

Scheme scheme_from_string(std::string_view name)
{
  if (name == "serial")
    return Scheme::Serial;
  if (name == "reordered")
    return Scheme::Reordered;
  throw Error("unknown numbering scheme \"" + std::string(name) + "\"");
}

int DofNumbering::stripe_of_index(int i) const
{
  const auto it = std::upper_bound(stripes.begin(), stripes.end(), i,
                                   [](int x, const std::pair<int, int>& s) { return x < s.second; });
  if (it == stripes.end() || i < it->first)
    throw NumberingError("index " + std::to_string(i) + " lies in no stripe");
  return static_cast<int>(it - stripes.begin());
}

namespace {

void finish_inverse(DofNumbering& num)
{
  int n = 0;
  for (int g : num.global_index)
    n += g >= 0 ? 1 : 0;
  num.node_of_index.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t node = 0; node < num.global_index.size(); ++node) {
    const int g = num.global_index[node];
    if (g < 0)
      continue;
    if (g >= n || num.node_of_index[static_cast<std::size_t>(g)] >= 0)
      throw NumberingError("index " + std::to_string(g) + " assigned twice or out of range");
    num.node_of_index[static_cast<std::size_t>(g)] = static_cast<int>(node);
  }
}

// The serial order as a list of Dof node ids.
std::vector<int> serial_order(const PolyMesh& mesh)
{
  std::vector<char> done(mesh.nodes().size(), 0);
  std::vector<int> order;
  auto take = [&](int node) {
    if (!done[static_cast<std::size_t>(node)] && mesh.node(node).is_dof()) {
      done[static_cast<std::size_t>(node)] = 1;
      order.push_back(node);
    }
  };
  std::vector<int> cp_node(mesh.dfn().num_cross_points(), -1);
  for (const MeshNode& n : mesh.nodes())
    if (n.kind == NodeKind::CrossPoint)
      cp_node[static_cast<std::size_t>(n.ref - 1)] = n.id;
  for (int node : cp_node)
    if (node >= 0)
      take(node);
  for (const Trace& t : mesh.dfn().traces())
    for (int node : mesh.dof_nodes_on_trace(t.id))
      take(node);
  for (const Fracture& f : mesh.dfn().fractures())
    for (int node : mesh.nodes_of_fracture(f.id))
      take(node);
  return order;
}

std::vector<std::pair<int, int>> even_stripes(int n, int p)
{
  std::vector<std::pair<int, int>> s;
  int start = 0;
  for (int i = 0; i < p; ++i) {
    const int len = n / p + (i < n % p ? 1 : 0);
    s.emplace_back(start, start + len);
    start += len;
  }
  return s;
}

} // namespace

DofNumbering number_serial(const PolyMesh& mesh, int num_stripes)
{
  if (num_stripes < 1)
    throw NumberingError("number of stripes must be >= 1");
  DofNumbering num;
  num.scheme = Scheme::Serial;
  num.global_index.assign(mesh.nodes().size(), -1);
  const std::vector<int> order = serial_order(mesh);
  for (std::size_t i = 0; i < order.size(); ++i)
    num.global_index[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  finish_inverse(num);
  num.stripes = even_stripes(num.num_dofs(), num_stripes);
  num.owner_of.assign(mesh.nodes().size(), -1);
  for (std::size_t node = 0; node < num.global_index.size(); ++node)
    if (num.global_index[node] >= 0)
      num.owner_of[node] = num.stripe_of_index(num.global_index[node]);
  return num;
}

DofNumbering number_reordered(const PolyMesh& mesh, const FractureAssignment& a, const Networks& nets)
{
  const Dfn& dfn = mesh.dfn();
  const int k = a.k;
  const std::vector<int> owner = dof_owners(mesh, a);
  const InterfaceOwnership io = interface_ownership(dfn, a);
  const std::size_t n_nodes = mesh.nodes().size();

  std::vector<int> cp_node(dfn.num_cross_points(), -1);
  for (const MeshNode& n : mesh.nodes())
    if (n.kind == NodeKind::CrossPoint)
      cp_node[static_cast<std::size_t>(n.ref - 1)] = n.id;

  // phase 1: every process numbers what it owns, locally from 0
  std::vector<int> local(n_nodes, -1);
  std::vector<int> local_count(static_cast<std::size_t>(k), 0);
  for (int p = 0; p < k; ++p) {
    int next = 0;
    auto take = [&](int node) {
      if (node < 0 || !mesh.node(node).is_dof() || owner[static_cast<std::size_t>(node)] != p)
        return;
      if (local[static_cast<std::size_t>(node)] >= 0)
        return;
      local[static_cast<std::size_t>(node)] = next++;
    };
    for (const CrossPoint& cp : dfn.cross_points())
      if (io.cp_owner[static_cast<std::size_t>(cp.id - 1)] == p)
        take(cp_node[static_cast<std::size_t>(cp.id - 1)]);
    // owned traces: internal ones with the lower fracture local plus the cut ones owned here
    std::vector<int> traces;
    for (int m : nets.local[static_cast<std::size_t>(p)].internal_traces)
      traces.push_back(m);
    for (int m : nets.communicating[static_cast<std::size_t>(p)].owned_traces)
      traces.push_back(m);
    std::sort(traces.begin(), traces.end());
    for (int m : traces)
      for (int node : mesh.dof_nodes_on_trace(m))
        take(node);
    for (int r : nets.local[static_cast<std::size_t>(p)].fractures)
      for (int node : mesh.nodes_of_fracture(r))
        take(node);
    local_count[static_cast<std::size_t>(p)] = next;
  }

  // phase 2: prefix sums give the stripes
  DofNumbering num;
  num.scheme = Scheme::Reordered;
  int offset = 0;
  for (int p = 0; p < k; ++p) {
    num.stripes.emplace_back(offset, offset + local_count[static_cast<std::size_t>(p)]);
    offset += local_count[static_cast<std::size_t>(p)];
  }

  // phase 3: owners publish global indices; other processes inherit them by lookup
  num.global_index.assign(n_nodes, -1);
  num.owner_of = owner;
  for (const MeshNode& n : mesh.nodes()) {
    if (!n.is_dof())
      continue;
    const int l = local[static_cast<std::size_t>(n.id)];
    if (l < 0)
      throw NumberingError("Dof node " + std::to_string(n.id) + " was not numbered by its owner " +
                           std::to_string(owner[static_cast<std::size_t>(n.id)]));
    num.global_index[static_cast<std::size_t>(n.id)] =
        num.stripes[static_cast<std::size_t>(owner[static_cast<std::size_t>(n.id)])].first + l;
  }
  finish_inverse(num);
  if (num.num_dofs() != mesh.counts().n_total)
    throw NumberingError("numbered " + std::to_string(num.num_dofs()) + " Dofs, mesh has " +
                         std::to_string(mesh.counts().n_total));
  return num;
}

DofNumbering number_by_dof_partition(const PolyMesh& mesh, const DfnGraph& dof_graph, const Partition& p)
{
  if (dof_graph.strategy != Strategy::MeshP || p.part_of.size() != static_cast<std::size_t>(dof_graph.num_nodes()))
    throw NumberingError("expected a partition of the mesh Dof graph");
  std::vector<int> part(mesh.nodes().size(), -1);
  for (int u = 0; u < dof_graph.num_nodes(); ++u)
    part[static_cast<std::size_t>(dof_graph.labels[static_cast<std::size_t>(u)].id)] = p.part_of[static_cast<std::size_t>(u)];
  const std::vector<int> order = serial_order(mesh);
  DofNumbering num;
  num.scheme = Scheme::Reordered;
  num.global_index.assign(mesh.nodes().size(), -1);
  num.owner_of = part;
  int next = 0;
  for (int q = 0; q < p.k; ++q) {
    const int start = next;
    for (int node : order)
      if (part[static_cast<std::size_t>(node)] == q)
        num.global_index[static_cast<std::size_t>(node)] = next++;
    num.stripes.emplace_back(start, next);
  }
  finish_inverse(num);
  return num;
}

void validate_numbering(const PolyMesh& mesh, const DofNumbering& num)
{
  const int n = mesh.counts().n_total;
  if (num.num_dofs() != n || num.global_index.size() != mesh.nodes().size())
    throw NumberingError("numbering size does not match the mesh");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const MeshNode& node : mesh.nodes()) {
    const int g = num.global_index[static_cast<std::size_t>(node.id)];
    if (node.is_dof() != (g >= 0))
      throw NumberingError("node " + std::to_string(node.id) + " numbered inconsistently with its kind");
    if (g < 0)
      continue;
    if (g >= n || seen[static_cast<std::size_t>(g)])
      throw NumberingError("index " + std::to_string(g) + " duplicated or out of range");
    seen[static_cast<std::size_t>(g)] = 1;
  }
  int expect = 0;
  for (const auto& [s, e] : num.stripes) {
    if (s != expect || e < s)
      throw NumberingError("stripes do not tile the index range");
    expect = e;
  }
  if (expect != n)
    throw NumberingError("stripes do not cover all Dofs");
}

std::string numbering_to_csv(const PolyMesh& mesh, const DofNumbering& num)
{
  std::ostringstream out;
  out << "node,global_index,owner,kind\n";
  for (const MeshNode& n : mesh.nodes())
    out << n.id << ',' << num.global_index[static_cast<std::size_t>(n.id)] << ','
        << num.owner_of[static_cast<std::size_t>(n.id)] << ',' << to_string(n.kind) << '\n';
  return out.str();
}

void save_numbering_csv(const PolyMesh& mesh, const DofNumbering& num, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());
  out << numbering_to_csv(mesh, num);
}

} // namespace dfnpart
