// SPDX-License-Identifier: Apache-2.0
#ifndef DFNPART_GRAPH_HPP
#define DFNPART_GRAPH_HPP

#include "dfnpart/geometry.hpp"
#include "dfnpart/mesh.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dfnpart {

enum class Strategy
{
  Pg,
  Wg,
  Pb,
  Wb,
  Pt,
  Wt,
  MeshP
};

std::string_view to_string(Strategy s);
/// Accepts the short names ("Pg", "Wb", "MeshP", ...). Throws Error otherwise.
Strategy strategy_from_string(std::string_view name);
bool is_weighted(Strategy s);

enum class NodeLabelKind
{
  Fracture,
  Trace,
  CrossPoint,
  Dof
};

struct NodeLabel
{
  NodeLabelKind kind = NodeLabelKind::Fracture;
  int id = 0; // fracture / trace / cross point id, or mesh node id for Dof
  friend bool operator==(const NodeLabel&, const NodeLabel&) = default;
};

/// Undirected weighted graph in CSR (adjacency) form. Neighbour lists are ascending.
struct DfnGraph
{
  std::vector<int> xadj{0};
  std::vector<int> adjncy;
  std::vector<long long> node_weights;
  std::vector<long long> edge_weights; // aligned with adjncy
  std::vector<NodeLabel> labels;
  Strategy strategy = Strategy::Pg;

  int num_nodes() const { return static_cast<int>(xadj.size()) - 1; }
  long long num_edges() const { return static_cast<long long>(adjncy.size()) / 2; }
  int degree(int u) const { return xadj[static_cast<std::size_t>(u) + 1] - xadj[static_cast<std::size_t>(u)]; }
  long long total_node_weight() const;
  /// Node index of a labelled object, or -1.
  int find(NodeLabelKind kind, int id) const;
};

DfnGraph build_pg(const Dfn& dfn);
DfnGraph build_wg(const Dfn& dfn, const DofCounts& counts);
DfnGraph build_pb(const Dfn& dfn);
DfnGraph build_wb(const Dfn& dfn, const DofCounts& counts);
DfnGraph build_pt(const Dfn& dfn);
DfnGraph build_wt(const Dfn& dfn, const DofCounts& counts);
/// One node per Dof (mesh node id order), one edge per cell edge joining two Dofs.
DfnGraph build_mesh_dof_graph(const PolyMesh& mesh);

/// Dispatches on the strategy; weighted variants take their counts from the mesh.
DfnGraph build_graph(Strategy s, const PolyMesh& mesh);

/// Throws Error if the graph is not symmetric, has self loops, non-positive weights
/// or inconsistent array sizes.
void validate_graph(const DfnGraph& g);

/// Partitioner graph file ("n m fmt" header, 1-based neighbours). fmt is "011" unless
/// every weight is 1, then "000".
std::string graph_to_metis(const DfnGraph& g);
/// Labels are not part of the format; imported graphs carry Fracture labels 1..n.
DfnGraph graph_from_metis(std::string_view text);
void export_graph(const DfnGraph& g, const std::filesystem::path& path);
DfnGraph import_graph(const std::filesystem::path& path);

} // namespace dfnpart

#endif // DFNPART_GRAPH_HPP
