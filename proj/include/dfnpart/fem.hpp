// SPDX-License-Identifier: Apache-2.0
#ifndef DFNPART_FEM_HPP
#define DFNPART_FEM_HPP

#include "dfnpart/dofs.hpp"
#include "dfnpart/mesh.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace dfnpart {

/// Row-major dense square matrix.
struct DenseMatrix
{
  int n = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  explicit DenseMatrix(int size) : n(size), a(static_cast<std::size_t>(size) * static_cast<std::size_t>(size), 0.0) {}
  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; }
  double operator()(int i, int j) const
  {
    return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
  }
};

/// Order-1 VEM stiffness of one polygon (local 2D vertices, counter-clockwise),
/// scaled by the transmissivity. Rows follow the vertex order.
/// Throws SolverError for a polygon with non-positive area.
DenseMatrix vem_local_stiffness(const std::vector<Vec2>& poly, double transmissivity);

/// Compressed sparse rows with ascending column indices.
struct CsrMatrix
{
  int n = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col;
  std::vector<double> val;

  long long nnz() const { return static_cast<long long>(col.size()); }
  double at(int i, int j) const;
  std::vector<double> multiply(const std::vector<double>& x) const;
};

struct Problem
{
  /// Per fracture (index r-1); empty means the fractures' own transmissivity.
  std::vector<double> transmissivity;
  /// Source term f(fracture id, point); empty means zero.
  std::function<double(int, Vec3)> forcing;
  /// Value on Dirichlet nodes; empty means zero.
  std::function<double(Vec3)> dirichlet;
};

/// Global system in the numbering's index space, rows split into the numbering's stripes.
struct StripedSystem
{
  CsrMatrix matrix;
  std::vector<double> rhs;
  std::vector<std::pair<int, int>> stripes;
  /// comm_plan[p][q]: ascending columns of stripe q referenced by rows of stripe p (empty for q == p).
  std::vector<std::vector<std::vector<int>>> comm_plan;
};

/// Throws SolverError on a degenerate cell, NumberingError if the numbering does not
/// cover the mesh's Dofs.
StripedSystem assemble(const PolyMesh& mesh, const DofNumbering& num, const Problem& problem = {});

/// Wraps a matrix and right-hand side with stripes and computes the plan.
StripedSystem make_system(CsrMatrix matrix, std::vector<double> rhs, std::vector<std::pair<int, int>> stripes);

void build_comm_plan(StripedSystem& system);

/// Entries of the matrix outside the stripes' diagonal blocks.
long long off_block_nnz(const StripedSystem& system);

struct SolveReport
{
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<long long> halo_sizes;    // per process: entries received each matvec
  long long volume_per_iteration = 0;   // sum of halo sizes
  int messages_per_iteration = 0;       // non-empty (p, q) plan entries
  double wall_seconds = 0.0;
  int threads = 1;
  /// r^T M^-1 r before each iteration, then after the last
  std::vector<double> preconditioned_residuals;
  /// -x^T (b + r) / 2 = x^T A x / 2 - x^T b before each iteration, then after the last
  std::vector<double> energies;
};

struct SolveResult
{
  std::vector<double> x;
  SolveReport report;
};

std::string report_csv_header();
std::string report_csv_row(const SolveReport& r);

/// Jacobi-preconditioned CG, stops when ||r||_2 / ||b||_2 <= rtol. maxit < 0 means
/// 10 * n. Throws SolverError on breakdown (p^T A p <= 0, zero diagonal) or when maxit
/// is reached.
SolveResult pcg_jacobi(const StripedSystem& system, double rtol = 1e-8, int maxit = -1);

/// Same iteration with one worker thread per group of stripes; halo entries move
/// through a shared staging vector between barriers, reductions are summed in stripe
/// order, so the result is bitwise identical for any thread count.
SolveResult run_parallel(const StripedSystem& system, int threads, double rtol = 1e-8, int maxit = -1);

/// Symmetric coordinate format, lower triangle, 1-based.
std::string matrix_market(const CsrMatrix& m);
void save_matrix_market(const CsrMatrix& m, const std::filesystem::path& path);
void save_vector(const std::vector<double>& v, const std::filesystem::path& path);
std::vector<double> load_vector(const std::filesystem::path& path);

} // namespace dfnpart

#endif // DFNPART_FEM_HPP
