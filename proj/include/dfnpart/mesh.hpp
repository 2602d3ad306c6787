// SPDX-License-Identifier: Apache-2.0
#ifndef DFNPART_MESH_HPP
#define DFNPART_MESH_HPP

#include "dfnpart/geometry.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dfnpart {

enum class NodeKind
{
  Interior,   // ref = fracture id
  OnTrace,    // ref = lowest id of the traces through the node
  CrossPoint, // ref = cross point id
  Boundary    // Dirichlet node, ref = fracture whose outer boundary holds it
};

std::string_view to_string(NodeKind kind);

struct MeshNode
{
  int id = 0;
  Vec3 position;
  NodeKind kind = NodeKind::Interior;
  int ref = 0;
  std::vector<int> fractures; // fractures whose cells use the node, ascending
  std::vector<int> traces;    // traces whose segment holds the node, ascending
  std::vector<int> cells;     // incident cells, ascending

  /// Order-1 elements: one unknown per non-Dirichlet node.
  bool is_dof() const { return kind != NodeKind::Boundary; }
};

/// Convex polygon on one fracture. Nodes are counter-clockwise in the fracture frame;
/// collinear (hanging) vertices are allowed.
struct Cell
{
  int id = 0;
  int fracture_id = 0;
  std::vector<int> node_ids;
};

/// The counting operator [.] evaluated on the mesh.
struct DofCounts
{
  int n_cp = 0;    // [CP]
  int n_trace = 0; // [T], cross points included
  int n_total = 0; // [F] = nDofs
  std::vector<int> per_fracture; // [F_r] at index r-1; shared Dofs counted on every fracture holding them
  std::vector<int> per_trace;    // [T_m] at index m-1; cross point Dofs counted on each incident trace
};

struct MeshOptions
{
  /// Fractures whose outer boundary carries Dirichlet data. nullopt means every fracture.
  std::optional<std::vector<int>> dirichlet_fractures;

  static MeshOptions all_dirichlet() { return {}; }
  static MeshOptions no_dirichlet() { return {std::vector<int>{}}; }
};

class MeshBuilder;

/// Trace-conforming polygonal mesh of a DFN with a global node registry.
/// Immutable once built; refinement returns a new mesh.
class PolyMesh
{
public:
  const Dfn& dfn() const { return *dfn_; }
  std::shared_ptr<const Dfn> dfn_ptr() const { return dfn_; }
  const MeshOptions& options() const { return options_; }

  const std::vector<MeshNode>& nodes() const { return nodes_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const MeshNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const Cell& cell(int id) const { return cells_.at(static_cast<std::size_t>(id)); }
  const DofCounts& counts() const { return counts_; }

  /// Cell ids of fracture r, ascending.
  const std::vector<int>& cells_of_fracture(int r) const
  {
    return fracture_cells_.at(static_cast<std::size_t>(r - 1));
  }
  /// Node ids used by cells of fracture r, ascending.
  std::vector<int> nodes_of_fracture(int r) const;
  /// Dof nodes lying on trace m, ordered along the trace from its first endpoint.
  std::vector<int> dof_nodes_on_trace(int m) const;

  bool is_dirichlet_fracture(int r) const;

  std::vector<Vec2> cell_polygon(int cell_id) const;
  double cell_area(int cell_id) const;
  double fracture_mesh_area(int r) const;

private:
  friend class MeshBuilder;
  std::shared_ptr<const Dfn> dfn_;
  MeshOptions options_;
  std::vector<MeshNode> nodes_;
  std::vector<Cell> cells_;
  std::vector<std::vector<int>> fracture_cells_;
  DofCounts counts_;
};

/// Splits every fracture along its traces (and their extensions inside the crossed
/// cells) and makes the result conforming across traces. Throws MeshError on a
/// degenerate split.
PolyMesh build_minimal_mesh(const Dfn& dfn, MeshOptions options = {});

/// One uniform pass: every cell is cut in two through its centroid, across its
/// major axis of inertia.
PolyMesh refine_pass(const PolyMesh& mesh);

/// Repeats refine_pass until counts().n_total >= #F * n. Throws MeshError if the
/// Dof count stops growing.
PolyMesh refine_uniform(const PolyMesh& mesh, int n);

/// Splits exactly the marked cells; neighbours receive hanging nodes so the mesh stays
/// conforming. Marking every cell is the same as one refine_pass.
PolyMesh refine_marked(const PolyMesh& mesh, const std::set<int>& marked_cells);

/// Node ids of all cells incident to the node (the node included), ascending.
std::vector<int> neighborhood(const PolyMesh& mesh, int node_id);

/// Structured dump: nodes (id, xyz, kind, ref) and cells (id, fracture, nodes).
std::string mesh_to_string(const PolyMesh& mesh);
void save_mesh(const PolyMesh& mesh, const std::filesystem::path& path);

} // namespace dfnpart

#endif // DFNPART_MESH_HPP
