// SPDX-License-Identifier: Apache-2.0
#ifndef DFNPART_EXPERIMENTS_HPP
#define DFNPART_EXPERIMENTS_HPP

#include "dfnpart/dofs.hpp"
#include "dfnpart/fem.hpp"
#include "dfnpart/geometry.hpp"
#include "dfnpart/graph.hpp"
#include "dfnpart/mesh.hpp"
#include "dfnpart/partition.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dfnpart {

struct ExperimentConfig
{
  std::optional<std::filesystem::path> dfn_path; // when unset, the generator is used
  GeneratorSpec generator;
  std::uint64_t seed = 1;
  int n = 50;
  std::vector<Strategy> strategies{Strategy::Wg};
  std::vector<int> parts{2, 4};
  Scheme scheme = Scheme::Reordered;
  std::vector<int> threads{1, 2, 4};
  double rtol = 1e-8;
  int maxit = -1;
  double balance_tol = default_balance_tol;
  std::filesystem::path out_dir = "out";
  // refine-decay
  int rounds = 10;
  std::string marking = "trace"; // "trace" or "uniform"
  double mark_fraction = 0.3;
  int repartition_every = 0; // 0 = never
  // sparsity
  int image_size = 64;

  /// Throws Error when the config cannot run (no strategy, no k, n < 1, ...).
  void validate() const;
};

/// Reads a JSON config; keys mirror the field names ("dfn", "generator", "seed", "n",
/// "strategies", "parts", "scheme", "threads", "rtol", "maxit", "balance_tol", "out",
/// "rounds", "marking", "mark_fraction", "repartition_every", "image_size").
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

Dfn make_dfn(const ExperimentConfig& config);
/// Minimal mesh uniformly refined to n Dofs per fracture.
PolyMesh make_mesh(const Dfn& dfn, int n);

/// One partition of one strategy and the numbering built on it.
struct StrategyRun
{
  Strategy strategy = Strategy::Pg;
  int k = 1;
  Partition partition;
  PartitionMetrics metrics;
  DofNumbering numbering;
  double partition_seconds = 0.0;
};

/// Builds the strategy graph, partitions it into k parts and numbers the Dofs. With
/// Scheme::Serial the numbering is the serial one cut into k even stripes.
/// Throws PartitionError when the balance is infeasible.
StrategyRun run_strategy(const PolyMesh& mesh, Strategy s, int k, Scheme scheme, double balance_tol,
                         std::uint64_t seed);

struct TableRow
{
  int num_fractures = 0;
  int num_dofs = 0;
  int k = 1;
  Strategy strategy = Strategy::Pg;
  std::string status = "ok"; // "ok" or "infeasible"
  int cut_C = 0;
  double imbalance_I = 0.0;
  long long graph_edge_cut = 0;
  bool balance_satisfied = false;
  double partition_seconds = 0.0;
  double solve_seconds = 0.0;
  int iterations = 0;
  long long volume_per_iteration = 0;
  long long max_halo = 0;
};

std::vector<TableRow> cmd_partition_table(const ExperimentConfig& config, const PolyMesh& mesh);
std::string table_csv(const std::vector<TableRow>& rows);

struct SparsitySummary
{
  std::string label; // "serial" or the strategy name
  int n = 0;
  long long nnz = 0;
  long long off_block_nnz = 0;
  /// share of nonzeros in the first [T] rows (interface rows under serial numbering)
  double interface_rows_fraction = 0.0;
  std::vector<std::pair<int, int>> stripes;
};

/// For the serial numbering and each configured strategy (reordered, k = first entry of
/// parts): writes <out>/sparsity_<label>.coo (0-based "row col" lines after a header
/// carrying the stripes) and <out>/sparsity_<label>_grid.csv (image_size^2 counts).
std::vector<SparsitySummary> cmd_sparsity(const ExperimentConfig& config, const PolyMesh& mesh);
std::string sparsity_csv(const std::vector<SparsitySummary>& rows);

struct SpeedupRow
{
  Strategy strategy = Strategy::Pg;
  Scheme scheme = Scheme::Serial;
  int p = 1;
  int iterations = 0;
  double wall_seconds = 0.0;
  double speedup = 1.0;
  long long volume_per_iteration = 0;
  int messages_per_iteration = 0;
  long long max_halo = 0;
};

/// p processes = p parts = p stripes = p worker threads, for each p in config.threads,
/// each strategy and both schemes. S_p = t_1 / t_p within a (strategy, scheme) series.
std::vector<SpeedupRow> cmd_speedup(const ExperimentConfig& config, const PolyMesh& mesh);
std::string speedup_csv(const std::vector<SpeedupRow>& rows);

struct DecayRow
{
  int round = 0;
  int num_dofs = 0;
  double imbalance_I = 0.0;
  int cut_C = 0;
  bool repartitioned = false;
  int marked_cells = 0;
  std::vector<long long> dof_per_part;
};

/// Partitions the starting mesh once (first strategy, first k), then runs config.rounds
/// marked refinements, recomputing I each round. "trace" marking refines the cells of
/// the heaviest part's fractures nearest one of its traces; "uniform" marks every cell.
/// With repartition_every > 0 the mesh is re-partitioned after every such round. When one
/// graph node outweighs the balance bound, the tolerance is widened just enough to fit it.
std::vector<DecayRow> cmd_refine_decay(const ExperimentConfig& config, const PolyMesh& mesh);
std::string decay_csv(const std::vector<DecayRow>& rows);

} // namespace dfnpart

#endif // DFNPART_EXPERIMENTS_HPP
