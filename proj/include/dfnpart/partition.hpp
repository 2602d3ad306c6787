// SPDX-License-Identifier: Apache-2.0
#ifndef DFNPART_PARTITION_HPP
#define DFNPART_PARTITION_HPP

#include "dfnpart/graph.hpp"
#include "dfnpart/mesh.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dfnpart {

/// Node -> part map of a graph. The built-in partitioner minimises the weighted edge cut.
struct Partition
{
  std::vector<int> part_of;
  int k = 1;
  Strategy strategy = Strategy::Pg;
  long long edge_cut = 0;
  /// max part weight <= (1 + balance_tol) * ceil(total / k)
  bool balance_satisfied = true;
};

constexpr double default_balance_tol = 0.03;

/// Multilevel recursive bisection: heavy-edge matching, greedy graph growing,
/// boundary Fiduccia-Mattheyses with rollback, then a k-way balance/refine sweep.
/// Deterministic for fixed (g, k, balance_tol, seed).
/// Throws PartitionError if k < 1, k > n, or a single node is heavier than
/// (1 + balance_tol) * ceil(total / k).
Partition partition_multilevel(const DfnGraph& g, int k, double balance_tol = default_balance_tol,
                               std::uint64_t seed = 1);

long long edge_cut(const DfnGraph& g, const std::vector<int>& part_of);
std::vector<long long> part_weights(const DfnGraph& g, const std::vector<int>& part_of, int k);
bool balance_ok(const DfnGraph& g, const std::vector<int>& part_of, int k, double balance_tol);

/// Wraps an externally computed part vector. Throws PartitionError on size mismatch or
/// part ids outside 0..k-1.
Partition make_partition(const DfnGraph& g, std::vector<int> part_of, int k,
                         double balance_tol = default_balance_tol);

/// Partition file: one part id per line, in graph node order.
std::string partition_to_string(const Partition& p);
Partition partition_from_string(std::string_view text, int n, int k);
void export_partition(const Partition& p, const std::filesystem::path& path);
Partition import_partition(const std::filesystem::path& path, int n, int k);

/// Fracture -> process map (the sets P_i) plus the parts that trace and cross point
/// graph nodes landed on, where the graph had such nodes.
struct FractureAssignment
{
  int k = 1;
  std::vector<int> fracture_part; // index r-1
  std::vector<int> trace_hint;    // index m-1; a part of one of the trace's fractures
  std::vector<int> cp_hint;       // index t-1; a part of one of the cross point's fractures

  int part_of_fracture(int r) const { return fracture_part.at(static_cast<std::size_t>(r - 1)); }
};

/// Fracture-labelled nodes define the map. Trace / cross point hints that name a part
/// holding none of the object's fractures fall back to the lowest fracture's part.
/// Throws Error for MeshP partitions (no fracture nodes).
FractureAssignment fracture_assignment(const Partition& p, const DfnGraph& g, const Dfn& dfn);

/// Builds an assignment from explicit fracture parts (index r-1).
FractureAssignment assignment_from_parts(const Dfn& dfn, std::vector<int> fracture_part, int k);

struct PartitionMetrics
{
  int cut_C = 0;
  double imbalance_I = 1.0;
  long long graph_edge_cut = 0;
  std::vector<long long> dof_per_part;
};

/// C = traces whose fractures sit on different parts; D_i = Dofs owned by part i under
/// the interface ownership rule; I = min D_i / max D_i.
PartitionMetrics compute_metrics(const PolyMesh& mesh, const FractureAssignment& a, long long graph_edge_cut = 0);

/// Metrics of a Dof-level (MeshP) partition: D_i = Dofs in part i; a trace counts as
/// cut when a mesh edge at one of its Dofs joins two parts.
PartitionMetrics compute_mesh_metrics(const PolyMesh& mesh, const DfnGraph& dof_graph, const Partition& p);

} // namespace dfnpart

#endif // DFNPART_PARTITION_HPP
