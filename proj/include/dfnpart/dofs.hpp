// SPDX-License-Identifier: Apache-2.0
#ifndef DFNPART_DOFS_HPP
#define DFNPART_DOFS_HPP

#include "dfnpart/mesh.hpp"
#include "dfnpart/partition.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dfnpart {

/// Fractures of one process and the traces with both fractures on it.
struct LocalNetwork
{
  int process = 0;
  std::vector<int> fractures;
  std::vector<int> internal_traces;
};

/// recv_fractures: fractures of this process on the higher-index side of a cut trace.
/// owned_traces: cut traces whose lower-index fracture is on this process.
struct LocalCommunicatingNetwork
{
  int process = 0;
  std::vector<int> recv_fractures;
  std::vector<int> owned_traces;
};

struct Networks
{
  std::vector<LocalNetwork> local;
  std::vector<LocalCommunicatingNetwork> communicating;
};

Networks build_local_networks(const Dfn& dfn, const FractureAssignment& a);

/// Owner of every trace (index m-1) and cross point (index t-1): the part of its
/// lowest-index fracture.
struct InterfaceOwnership
{
  std::vector<int> trace_owner;
  std::vector<int> cp_owner;
};

InterfaceOwnership interface_ownership(const Dfn& dfn, const FractureAssignment& a);

/// Owning process of every mesh node (index = node id, -1 for Dirichlet nodes):
/// cross point -> its owner; trace node -> owner of the lowest trace through it;
/// other nodes -> part of their fracture.
std::vector<int> dof_owners(const PolyMesh& mesh, const FractureAssignment& a);

enum class Scheme
{
  Serial,
  Reordered
};

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view name);

struct DofNumbering
{
  Scheme scheme = Scheme::Serial;
  std::vector<int> global_index;              // per mesh node, -1 for Dirichlet nodes
  std::vector<int> node_of_index;             // inverse map
  std::vector<std::pair<int, int>> stripes;   // [start, end) per process
  std::vector<int> owner_of;                  // per mesh node, -1 for Dirichlet nodes

  int num_dofs() const { return static_cast<int>(node_of_index.size()); }
  int num_stripes() const { return static_cast<int>(stripes.size()); }
  int stripe_of_index(int i) const;
};

/// Cross points, then trace Dofs trace by trace, then the remaining Dofs fracture by
/// fracture. Stripes split the index range evenly over num_stripes processes.
DofNumbering number_serial(const PolyMesh& mesh, int num_stripes = 1);

/// Each process numbers its cross points, its traces (lower fracture local) and its
/// remaining fracture Dofs; stripes are the prefix sums of the local counts and
/// non-owned Dofs inherit the owner's index. Throws NumberingError if a Dof ends
/// unnumbered or numbered twice.
DofNumbering number_reordered(const PolyMesh& mesh, const FractureAssignment& a, const Networks& nets);

/// Stripes follow a Dof-level partition (graph from build_mesh_dof_graph); within a
/// stripe Dofs keep their serial order.
DofNumbering number_by_dof_partition(const PolyMesh& mesh, const DfnGraph& dof_graph, const Partition& p);

/// Throws NumberingError unless global_index is a bijection onto 0..nDofs-1 over the
/// Dof nodes and the stripes tile that range.
void validate_numbering(const PolyMesh& mesh, const DofNumbering& num);

/// CSV: node,global_index,owner,kind
std::string numbering_to_csv(const PolyMesh& mesh, const DofNumbering& num);
void save_numbering_csv(const PolyMesh& mesh, const DofNumbering& num, const std::filesystem::path& path);

} // namespace dfnpart

#endif // DFNPART_DOFS_HPP
