// SPDX-License-Identifier: Apache-2.0
#include "dfnpart/fem.hpp"

#include "dfnpart/errors.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace dfnpart {

// ---- local VEM matrices ------------------------------------------------------------

namespace {

// Solves G X = B for a 3x3 G and 3xn B (row-major), partial pivoting.
std::vector<double> solve3(std::array<double, 9> g, std::vector<double> b, int ncols)
{
  const auto cols = static_cast<std::size_t>(ncols);
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(g[static_cast<std::size_t>(r * 3 + c)]) > std::abs(g[static_cast<std::size_t>(piv * 3 + c)]))
        piv = r;
    if (g[static_cast<std::size_t>(piv * 3 + c)] == 0.0)
      throw SolverError("singular VEM projection matrix");
    if (piv != c) {
      for (int j = 0; j < 3; ++j)
        std::swap(g[static_cast<std::size_t>(c * 3 + j)], g[static_cast<std::size_t>(piv * 3 + j)]);
      for (std::size_t j = 0; j < cols; ++j)
        std::swap(b[static_cast<std::size_t>(c) * cols + j], b[static_cast<std::size_t>(piv) * cols + j]);
    }
    for (int r = 0; r < 3; ++r) {
      if (r == c)
        continue;
      const double f = g[static_cast<std::size_t>(r * 3 + c)] / g[static_cast<std::size_t>(c * 3 + c)];
      for (int j = 0; j < 3; ++j)
        g[static_cast<std::size_t>(r * 3 + j)] -= f * g[static_cast<std::size_t>(c * 3 + j)];
      for (std::size_t j = 0; j < cols; ++j)
        b[static_cast<std::size_t>(r) * cols + j] -= f * b[static_cast<std::size_t>(c) * cols + j];
    }
  }
  for (int r = 0; r < 3; ++r)
    for (std::size_t j = 0; j < cols; ++j)
      b[static_cast<std::size_t>(r) * cols + j] /= g[static_cast<std::size_t>(r * 3 + r)];
  return b;
}

} // namespace

DenseMatrix vem_local_stiffness(const std::vector<Vec2>& poly, double transmissivity)
{
  const int n = static_cast<int>(poly.size());
  const double area = n >= 3 ? polygon_area(poly) : 0.0;
  if (!(area > 0.0))
    throw SolverError("cell with non-positive area");
  const auto nn = static_cast<std::size_t>(n);

  const Vec2 o = poly.front();
  double cx = 0.0, cy = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec2 p = poly[static_cast<std::size_t>(i)] - o;
    const Vec2 q = poly[static_cast<std::size_t>((i + 1) % n)] - o;
    const double w = cross(p, q);
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
  }
  const Vec2 c = o + Vec2{cx / (6.0 * area), cy / (6.0 * area)};
  double h = 0.0;
  for (const Vec2& p : poly)
    for (const Vec2& q : poly)
      h = std::max(h, norm(p - q));

  // D: monomials (1, (x-cx)/h, (y-cy)/h) at the vertices
  std::vector<double> d(nn * 3);
  for (std::size_t i = 0; i < nn; ++i) {
    d[i * 3 + 0] = 1.0;
    d[i * 3 + 1] = (poly[i].x - c.x) / h;
    d[i * 3 + 2] = (poly[i].y - c.y) / h;
  }
  // B: row 0 is the vertex average, rows 1-2 the boundary integrals of grad m . n phi_i
  std::vector<double> b(3 * nn);
  for (std::size_t i = 0; i < nn; ++i) {
    const Vec2 prev = poly[(i + nn - 1) % nn];
    const Vec2 next = poly[(i + 1) % nn];
    // outward normals scaled by edge length, half to each endpoint
    const Vec2 e0 = poly[i] - prev;
    const Vec2 e1 = next - poly[i];
    const double nx = 0.5 * (e0.y + e1.y);
    const double ny = -0.5 * (e0.x + e1.x);
    b[0 * nn + i] = 1.0 / static_cast<double>(n);
    b[1 * nn + i] = nx / h;
    b[2 * nn + i] = ny / h;
  }
  std::array<double, 9> g{};
  for (int a = 0; a < 3; ++a)
    for (int z = 0; z < 3; ++z)
      for (std::size_t i = 0; i < nn; ++i)
        g[static_cast<std::size_t>(a * 3 + z)] += b[static_cast<std::size_t>(a) * nn + i] * d[i * 3 + static_cast<std::size_t>(z)];
  const std::vector<double> pis = solve3(g, b, n); // Pi* = G^-1 B, 3 x n

  std::array<double, 9> gt = g;
  gt[0] = gt[1] = gt[2] = 0.0;

  DenseMatrix k(n);
  // consistency: Pi*^T Gt Pi*
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int a = 1; a < 3; ++a)
        for (int z = 0; z < 3; ++z)
          s += pis[static_cast<std::size_t>(a) * nn + static_cast<std::size_t>(i)] * gt[static_cast<std::size_t>(a * 3 + z)] *
               pis[static_cast<std::size_t>(z) * nn + static_cast<std::size_t>(j)];
      k(i, j) = s;
    }
  double tr = 0.0;
  for (int i = 0; i < n; ++i)
    tr += k(i, i);
  const double tau = tr / n;

  // stabilisation: tau (I - Pi)^T (I - Pi), Pi = D Pi*
  DenseMatrix ip(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int a = 0; a < 3; ++a)
        s += d[static_cast<std::size_t>(i) * 3 + static_cast<std::size_t>(a)] * pis[static_cast<std::size_t>(a) * nn + static_cast<std::size_t>(j)];
      ip(i, j) = (i == j ? 1.0 : 0.0) - s;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int l = 0; l < n; ++l)
        s += ip(l, i) * ip(l, j);
      k(i, j) += tau * s;
    }

  DenseMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out(i, j) = transmissivity * 0.5 * (k(i, j) + k(j, i));
  return out;
}

// ---- sparse matrix -----------------------------------------------------------------

double CsrMatrix::at(int i, int j) const
{
  const auto first = col.begin() + row_ptr[static_cast<std::size_t>(i)];
  const auto last = col.begin() + row_ptr[static_cast<std::size_t>(i) + 1];
  const auto it = std::lower_bound(first, last, j);
  return it != last && *it == j ? val[static_cast<std::size_t>(it - col.begin())] : 0.0;
}

std::vector<double> CsrMatrix::multiply(const std::vector<double>& x) const
{
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int e = row_ptr[static_cast<std::size_t>(i)]; e < row_ptr[static_cast<std::size_t>(i) + 1]; ++e)
      s += val[static_cast<std::size_t>(e)] * x[static_cast<std::size_t>(col[static_cast<std::size_t>(e)])];
    y[static_cast<std::size_t>(i)] = s;
  }
  return y;
}

namespace {

int stripe_of(const std::vector<std::pair<int, int>>& stripes, int i)
{
  const auto it = std::upper_bound(stripes.begin(), stripes.end(), i,
                                   [](int x, const std::pair<int, int>& s) { return x < s.second; });
  return static_cast<int>(it - stripes.begin());
}

struct Triplet
{
  int row, col;
  double val;
};

} // namespace

StripedSystem assemble(const PolyMesh& mesh, const DofNumbering& num, const Problem& problem)
{
  const Dfn& dfn = mesh.dfn();
  if (num.global_index.size() != mesh.nodes().size())
    throw NumberingError("numbering does not match the mesh");
  for (const MeshNode& node : mesh.nodes())
    if (node.is_dof() && num.global_index[static_cast<std::size_t>(node.id)] < 0)
      throw NumberingError("Dof node " + std::to_string(node.id) + " has no global index");
  if (!problem.transmissivity.empty() && problem.transmissivity.size() != dfn.num_fractures())
    throw Error("transmissivity list must have one entry per fracture");

  const int n = num.num_dofs();
  std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
  std::vector<Triplet> trip;
  for (const Cell& cell : mesh.cells()) {
    const Fracture& f = dfn.fracture(cell.fracture_id);
    const double mu = problem.transmissivity.empty() ? f.transmissivity
                                                     : problem.transmissivity[static_cast<std::size_t>(f.id - 1)];
    const std::vector<Vec2> poly = mesh.cell_polygon(cell.id);
    const DenseMatrix k = vem_local_stiffness(poly, mu);
    const int nv = static_cast<int>(cell.node_ids.size());

    double load = 0.0;
    if (problem.forcing) {
      Vec2 c{0.0, 0.0};
      for (const Vec2& p : poly)
        c = c + p;
      c = (1.0 / nv) * c;
      load = problem.forcing(f.id, f.basis.to_global(c)) * polygon_area(poly) / nv;
    }
    std::vector<int> gi(static_cast<std::size_t>(nv));
    std::vector<double> bc(static_cast<std::size_t>(nv), 0.0);
    for (int i = 0; i < nv; ++i) {
      const int node = cell.node_ids[static_cast<std::size_t>(i)];
      gi[static_cast<std::size_t>(i)] = num.global_index[static_cast<std::size_t>(node)];
      if (gi[static_cast<std::size_t>(i)] < 0 && problem.dirichlet)
        bc[static_cast<std::size_t>(i)] = problem.dirichlet(mesh.node(node).position);
    }
    for (int i = 0; i < nv; ++i) {
      const int r = gi[static_cast<std::size_t>(i)];
      if (r < 0)
        continue;
      rhs[static_cast<std::size_t>(r)] += load;
      for (int j = 0; j < nv; ++j) {
        const int c = gi[static_cast<std::size_t>(j)];
        if (c >= 0)
          trip.push_back({r, c, k(i, j)});
        else
          rhs[static_cast<std::size_t>(r)] -= k(i, j) * bc[static_cast<std::size_t>(j)];
      }
    }
  }
  // stable sort keeps cell order inside each (row, col): A and A^T sum identically
  std::stable_sort(trip.begin(), trip.end(),
                   [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  CsrMatrix m;
  m.n = n;
  m.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t t = 0; t < trip.size();) {
    std::size_t u = t;
    double s = 0.0;
    for (; u < trip.size() && trip[u].row == trip[t].row && trip[u].col == trip[t].col; ++u)
      s += trip[u].val;
    m.col.push_back(trip[t].col);
    m.val.push_back(s);
    ++m.row_ptr[static_cast<std::size_t>(trip[t].row) + 1];
    t = u;
  }
  for (int i = 0; i < n; ++i)
    m.row_ptr[static_cast<std::size_t>(i) + 1] += m.row_ptr[static_cast<std::size_t>(i)];
  return make_system(std::move(m), std::move(rhs), num.stripes);
}

StripedSystem make_system(CsrMatrix matrix, std::vector<double> rhs, std::vector<std::pair<int, int>> stripes)
{
  if (rhs.size() != static_cast<std::size_t>(matrix.n))
    throw Error("right-hand side size does not match the matrix");
  if (stripes.empty())
    stripes.emplace_back(0, matrix.n);
  if (stripes.front().first != 0 || stripes.back().second != matrix.n)
    throw Error("stripes do not cover the matrix rows");
  StripedSystem s;
  s.matrix = std::move(matrix);
  s.rhs = std::move(rhs);
  s.stripes = std::move(stripes);
  build_comm_plan(s);
  return s;
}

void build_comm_plan(StripedSystem& system)
{
  const std::size_t k = system.stripes.size();
  system.comm_plan.assign(k, std::vector<std::vector<int>>(k));
  const CsrMatrix& m = system.matrix;
  for (std::size_t p = 0; p < k; ++p) {
    auto& plan = system.comm_plan[p];
    for (int i = system.stripes[p].first; i < system.stripes[p].second; ++i)
      for (int e = m.row_ptr[static_cast<std::size_t>(i)]; e < m.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
        const int j = m.col[static_cast<std::size_t>(e)];
        const auto q = static_cast<std::size_t>(stripe_of(system.stripes, j));
        if (q != p)
          plan[q].push_back(j);
      }
    for (auto& cols : plan) {
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    }
  }
}

long long off_block_nnz(const StripedSystem& system)
{
  long long count = 0;
  const CsrMatrix& m = system.matrix;
  for (std::size_t p = 0; p < system.stripes.size(); ++p)
    for (int i = system.stripes[p].first; i < system.stripes[p].second; ++i)
      for (int e = m.row_ptr[static_cast<std::size_t>(i)]; e < m.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
        const int j = m.col[static_cast<std::size_t>(e)];
        if (j < system.stripes[p].first || j >= system.stripes[p].second)
          ++count;
      }
  return count;
}

// ---- PCG ---------------------------------------------------------------------------

namespace {

// Rows of one stripe with columns renumbered: [0, nloc) own, nloc + g for ghost g.
struct LocalStripe
{
  int begin = 0, end = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col;
  std::vector<double> val;
  std::vector<int> ghosts; // global indices, plan order (q ascending, then column)
  std::vector<double> ghost_values;
  std::vector<double> inv_diag;
};

LocalStripe make_local(const StripedSystem& s, std::size_t p)
{
  LocalStripe ls;
  ls.begin = s.stripes[p].first;
  ls.end = s.stripes[p].second;
  const int nloc = ls.end - ls.begin;
  for (const auto& cols : s.comm_plan[p])
    ls.ghosts.insert(ls.ghosts.end(), cols.begin(), cols.end());
  ls.ghost_values.assign(ls.ghosts.size(), 0.0);
  const CsrMatrix& m = s.matrix;
  for (int i = ls.begin; i < ls.end; ++i) {
    double diag = 0.0;
    for (int e = m.row_ptr[static_cast<std::size_t>(i)]; e < m.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
      const int j = m.col[static_cast<std::size_t>(e)];
      int lj = 0;
      if (j >= ls.begin && j < ls.end)
        lj = j - ls.begin;
      else {
        // ghosts are sorted within each q block and q blocks ascend, so the list is sorted
        const auto it = std::lower_bound(ls.ghosts.begin(), ls.ghosts.end(), j);
        lj = nloc + static_cast<int>(it - ls.ghosts.begin());
      }
      if (j == i)
        diag = m.val[static_cast<std::size_t>(e)];
      ls.col.push_back(lj);
      ls.val.push_back(m.val[static_cast<std::size_t>(e)]);
    }
    if (!(diag > 0.0))
      throw SolverError("non-positive diagonal entry in row " + std::to_string(i));
    ls.inv_diag.push_back(1.0 / diag);
    ls.row_ptr.push_back(static_cast<int>(ls.col.size()));
  }
  return ls;
}

enum Sum
{
  S_RZ,
  S_RR,
  S_PAP,
  S_XB,
  S_XR,
  S_COUNT
};

} // namespace

SolveResult run_parallel(const StripedSystem& system, int threads, double rtol, int maxit)
{
  const int n = system.matrix.n;
  const int k = static_cast<int>(system.stripes.size());
  if (threads < 1 || threads > std::max(1, k))
    throw SolverError("thread count must be in 1.." + std::to_string(std::max(1, k)));
  if (maxit < 0)
    maxit = 10 * std::max(1, n);

  std::vector<LocalStripe> stripes;
  for (std::size_t p = 0; p < static_cast<std::size_t>(k); ++p)
    stripes.push_back(make_local(system, p));

  SolveResult result;
  SolveReport& rep = result.report;
  rep.threads = threads;
  for (int p = 0; p < k; ++p) {
    long long h = 0;
    for (int q = 0; q < k; ++q) {
      h += static_cast<long long>(system.comm_plan[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)].size());
      rep.messages_per_iteration += system.comm_plan[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)].empty() ? 0 : 1;
    }
    rep.halo_sizes.push_back(h);
    rep.volume_per_iteration += h;
  }

  const std::vector<double>& b = system.rhs;
  std::vector<double>& x = result.x;
  x.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> r = b, z(static_cast<std::size_t>(n)), pv(static_cast<std::size_t>(n)), ap(static_cast<std::size_t>(n));
  // per-stripe partial sums, reduced in stripe order
  std::vector<std::array<double, S_COUNT>> partial(static_cast<std::size_t>(k));
  std::atomic<long long> gathered{0};

  struct Shared
  {
    double rz = 0.0, bnorm = 0.0;
    int iterations = 0;
    double rel = 0.0;
    bool failed = false;
    std::string error;
  } sh;

  auto total = [&](Sum s) {
    double t = 0.0;
    for (const auto& a : partial)
      t += a[s];
    return t;
  };

  std::barrier sync(threads);
  const auto start = std::chrono::steady_clock::now();

  auto worker = [&](int w) {
    auto mine = [&](auto&& fn) {
      for (int p = w; p < k; p += threads)
        fn(stripes[static_cast<std::size_t>(p)], partial[static_cast<std::size_t>(p)]);
    };
    // setup: r = b, z = M^-1 r, p = z
    mine([&](LocalStripe& ls, std::array<double, S_COUNT>& part) {
      part.fill(0.0);
      for (int i = ls.begin; i < ls.end; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        z[ui] = ls.inv_diag[static_cast<std::size_t>(i - ls.begin)] * r[ui];
        pv[ui] = z[ui];
        part[S_RZ] += r[ui] * z[ui];
        part[S_RR] += b[ui] * b[ui];
      }
    });
    sync.arrive_and_wait();
    double rz = total(S_RZ);
    const double bnorm = std::sqrt(total(S_RR));
    if (w == 0) {
      sh.bnorm = bnorm;
      rep.preconditioned_residuals.push_back(rz);
      rep.energies.push_back(0.0);
    }
    if (bnorm == 0.0)
      return;
    double rel = 1.0;
    int it = 0;
    while (rel > rtol && it < maxit) {
      // pv segments are published; gather halos and multiply
      sync.arrive_and_wait();
      mine([&](LocalStripe& ls, std::array<double, S_COUNT>& part) {
        for (std::size_t g = 0; g < ls.ghosts.size(); ++g)
          ls.ghost_values[g] = pv[static_cast<std::size_t>(ls.ghosts[g])];
        if (it == 0)
          gathered += static_cast<long long>(ls.ghosts.size());
        const int nloc = ls.end - ls.begin;
        part[S_PAP] = 0.0;
        for (int li = 0; li < nloc; ++li) {
          double s = 0.0;
          for (int e = ls.row_ptr[static_cast<std::size_t>(li)]; e < ls.row_ptr[static_cast<std::size_t>(li) + 1]; ++e) {
            const int c = ls.col[static_cast<std::size_t>(e)];
            const double v = c < nloc ? pv[static_cast<std::size_t>(ls.begin + c)] : ls.ghost_values[static_cast<std::size_t>(c - nloc)];
            s += ls.val[static_cast<std::size_t>(e)] * v;
          }
          ap[static_cast<std::size_t>(ls.begin + li)] = s;
          part[S_PAP] += pv[static_cast<std::size_t>(ls.begin + li)] * s;
        }
      });
      sync.arrive_and_wait();
      const double pap = total(S_PAP);
      if (!(pap > 0.0)) {
        if (w == 0) {
          sh.failed = true;
          sh.error = "CG breakdown: p^T A p = " + std::to_string(pap) + " at iteration " + std::to_string(it);
        }
        return;
      }
      const double alpha = rz / pap;
      mine([&](LocalStripe& ls, std::array<double, S_COUNT>& part) {
        part[S_RZ] = part[S_RR] = part[S_XB] = part[S_XR] = 0.0;
        for (int i = ls.begin; i < ls.end; ++i) {
          const auto ui = static_cast<std::size_t>(i);
          x[ui] += alpha * pv[ui];
          r[ui] -= alpha * ap[ui];
          z[ui] = ls.inv_diag[static_cast<std::size_t>(i - ls.begin)] * r[ui];
          part[S_RZ] += r[ui] * z[ui];
          part[S_RR] += r[ui] * r[ui];
          part[S_XB] += x[ui] * b[ui];
          part[S_XR] += x[ui] * r[ui];
        }
      });
      sync.arrive_and_wait();
      const double rz_new = total(S_RZ);
      rel = std::sqrt(total(S_RR)) / bnorm;
      ++it;
      if (w == 0) {
        rep.preconditioned_residuals.push_back(rz_new);
        rep.energies.push_back(-0.5 * (total(S_XB) + total(S_XR)));
      }
      const double beta = rz_new / rz;
      rz = rz_new;
      mine([&](LocalStripe& ls, std::array<double, S_COUNT>&) {
        for (int i = ls.begin; i < ls.end; ++i)
          pv[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + beta * pv[static_cast<std::size_t>(i)];
      });
    }
    if (w == 0) {
      sh.iterations = it;
      sh.rel = rel;
    }
  };

  std::vector<std::thread> pool;
  for (int w = 1; w < threads; ++w)
    pool.emplace_back(worker, w);
  worker(0);
  for (auto& t : pool)
    t.join();
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (sh.failed)
    throw SolverError(sh.error);
  rep.iterations = sh.iterations;
  rep.relative_residual = sh.bnorm == 0.0 ? 0.0 : sh.rel;
  if (sh.bnorm != 0.0 && gathered.load() != rep.volume_per_iteration)
    throw SolverError("internal: halo traffic differs from the communication plan");
  if (rep.relative_residual > rtol)
    throw SolverError("CG did not converge in " + std::to_string(maxit) + " iterations (relative residual " +
                      std::to_string(rep.relative_residual) + ")");
  return result;
}

SolveResult pcg_jacobi(const StripedSystem& system, double rtol, int maxit)
{
  return run_parallel(system, 1, rtol, maxit);
}

std::string report_csv_header()
{
  return "iterations,relative_residual,threads,volume_per_iteration,messages_per_iteration,max_halo,wall_seconds";
}

std::string report_csv_row(const SolveReport& r)
{
  long long max_halo = 0;
  for (long long h : r.halo_sizes)
    max_halo = std::max(max_halo, h);
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.6e,%d,%lld,%d,%lld,%.6f", r.iterations, r.relative_residual, r.threads,
                r.volume_per_iteration, r.messages_per_iteration, max_halo, r.wall_seconds);
  return buf;
}

std::string matrix_market(const CsrMatrix& m)
{
  std::ostringstream out;
  long long lower = 0;
  for (int i = 0; i < m.n; ++i)
    for (int e = m.row_ptr[static_cast<std::size_t>(i)]; e < m.row_ptr[static_cast<std::size_t>(i) + 1]; ++e)
      lower += m.col[static_cast<std::size_t>(e)] <= i ? 1 : 0;
  out << "%%MatrixMarket matrix coordinate real symmetric\n" << m.n << ' ' << m.n << ' ' << lower << '\n';
  char buf[64];
  for (int i = 0; i < m.n; ++i)
    for (int e = m.row_ptr[static_cast<std::size_t>(i)]; e < m.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
      const int j = m.col[static_cast<std::size_t>(e)];
      if (j > i)
        continue;
      std::snprintf(buf, sizeof buf, "%.17g", m.val[static_cast<std::size_t>(e)]);
      out << i + 1 << ' ' << j + 1 << ' ' << buf << '\n';
    }
  return out.str();
}

void save_matrix_market(const CsrMatrix& m, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());
  out << matrix_market(m);
}

void save_vector(const std::vector<double>& v, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());
  char buf[64];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, "%.17g\n", x);
    out << buf;
  }
}

std::vector<double> load_vector(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error("cannot read " + path.string());
  std::vector<double> v;
  double x = 0.0;
  while (in >> x)
    v.push_back(x);
  if (!in.eof())
    throw ParseError(path.string() + ": non-numeric entry after " + std::to_string(v.size()) + " values");
  return v;
}

} // namespace dfnpart
