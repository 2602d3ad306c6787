// SPDX-License-Identifier: Apache-2.0
#include "dfnpart/errors.hpp"
#include "dfnpart/fem.hpp"
#include "dfnpart/partition.hpp"
#include "support.hpp"

#include <Eigen/Dense>
#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>

using namespace dfnpart;
using namespace dfnpart::test;

namespace {

Eigen::MatrixXd to_dense(const CsrMatrix& m)
{
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m.n, m.n);
  for (int i = 0; i < m.n; ++i)
    for (int e = m.row_ptr[static_cast<std::size_t>(i)]; e < m.row_ptr[static_cast<std::size_t>(i) + 1]; ++e)
      d(i, m.col[static_cast<std::size_t>(e)]) = m.val[static_cast<std::size_t>(e)];
  return d;
}

double max_abs(const std::vector<double>& v)
{
  double m = 0.0;
  for (double x : v)
    m = std::max(m, std::abs(x));
  return m;
}

// Solves with Dirichlet data g and zero forcing, returns max |u_h - g| over Dof nodes.
double patch_error(const PolyMesh& mesh, const std::function<double(Vec3)>& g)
{
  const DofNumbering num = number_serial(mesh);
  Problem problem;
  problem.dirichlet = g;
  const StripedSystem sys = assemble(mesh, num, problem);
  const Eigen::MatrixXd a = to_dense(sys.matrix);
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(sys.rhs.data(), static_cast<Eigen::Index>(sys.rhs.size()));
  const Eigen::VectorXd x = a.ldlt().solve(b);
  double err = 0.0;
  for (const MeshNode& n : mesh.nodes())
    if (n.is_dof())
      err = std::max(err, std::abs(x(num.global_index[static_cast<std::size_t>(n.id)]) - g(n.position)));
  return err;
}

std::vector<std::vector<std::vector<int>>> brute_plan(const StripedSystem& s)
{
  const std::size_t k = s.stripes.size();
  std::vector<int> stripe_of(static_cast<std::size_t>(s.matrix.n));
  for (std::size_t p = 0; p < k; ++p)
    for (int i = s.stripes[p].first; i < s.stripes[p].second; ++i)
      stripe_of[static_cast<std::size_t>(i)] = static_cast<int>(p);
  std::vector<std::vector<std::set<int>>> sets(k, std::vector<std::set<int>>(k));
  for (int i = 0; i < s.matrix.n; ++i)
    for (int e = s.matrix.row_ptr[static_cast<std::size_t>(i)]; e < s.matrix.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
      const int j = s.matrix.col[static_cast<std::size_t>(e)];
      const int p = stripe_of[static_cast<std::size_t>(i)];
      const int q = stripe_of[static_cast<std::size_t>(j)];
      if (p != q)
        sets[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)].insert(j);
    }
  std::vector<std::vector<std::vector<int>>> plan(k, std::vector<std::vector<int>>(k));
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t q = 0; q < k; ++q)
      plan[p][q].assign(sets[p][q].begin(), sets[p][q].end());
  return plan;
}

PolyMesh small_mesh(std::uint64_t seed)
{
  return refine_uniform(build_minimal_mesh(random_dfn(seed, 6)), 20);
}

Problem unit_forcing()
{
  Problem p;
  p.forcing = [](int, Vec3) { return 1.0; };
  return p;
}

} // namespace

TEST_CASE("local VEM stiffness", "[fem]")
{
  SECTION("unit square")
  {
    const DenseMatrix k = vem_local_stiffness({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 1.0);
    REQUIRE(k.n == 4);
    Eigen::MatrixXd e(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        e(i, j) = k(i, j);
    CHECK((e - e.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(e.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-14);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(e);
    CHECK(std::abs(eig.eigenvalues()(0)) <= 1e-12);
    CHECK(eig.eigenvalues()(1) > 1e-6);
    // linear fields: K u equals the boundary flux, here u = x gives +-1/2 on the vertical sides
    const Eigen::Vector4d ux(0, 1, 1, 0);
    const Eigen::Vector4d flux = e * ux;
    CHECK(flux.isApprox(Eigen::Vector4d(-0.5, 0.5, 0.5, -0.5), 1e-12));
  }
  SECTION("transmissivity scales linearly")
  {
    const std::vector<Vec2> hex{{0, 0}, {2, 0}, {3, 1}, {2, 2}, {0, 2}, {-1, 1}};
    const DenseMatrix a = vem_local_stiffness(hex, 1.0);
    const DenseMatrix b = vem_local_stiffness(hex, 3.5);
    for (std::size_t i = 0; i < a.a.size(); ++i)
      CHECK(b.a[i] == Catch::Approx(3.5 * a.a[i]).margin(1e-14));
  }
  SECTION("degenerate polygon")
  {
    CHECK_THROWS_AS(vem_local_stiffness({{0, 0}, {1, 0}, {2, 0}}, 1.0), SolverError);
  }
}

TEST_CASE("patch test with linear solutions", "[fem]")
{
  const auto linear = [](Vec3 p) { return 0.3 + 1.1 * p.x - 0.7 * p.y + 0.45 * p.z; };
  SECTION("single fracture")
  {
    const Dfn dfn = build_dfn({square(2, {0, 0, 0}, 1.0)});
    CHECK(patch_error(refine_uniform(build_minimal_mesh(dfn), 80), linear) <= 1e-10);
  }
  SECTION("tilted single fracture")
  {
    const Dfn dfn = build_dfn({{{0, 0, 0}, {2, 0, 1}, {2, 2, 1.5}, {0, 2, 0.5}}});
    CHECK(patch_error(refine_uniform(build_minimal_mesh(dfn), 80), linear) <= 1e-10);
  }
  SECTION("two crossing fractures")
  {
    const PolyMesh mesh = refine_uniform(build_minimal_mesh(fixture("two_fractures.json")), 60);
    CHECK(patch_error(mesh, linear) <= 1e-10);
  }
  SECTION("constant Dirichlet data")
  {
    const PolyMesh mesh = refine_uniform(build_minimal_mesh(fixture("frac6.json")), 20);
    CHECK(patch_error(mesh, [](Vec3) { return 2.5; }) <= 1e-10);
  }
}

TEST_CASE("assembled operator without boundary conditions annihilates constants", "[fem]")
{
  // with no Dirichlet fracture every node is a Dof and the row sums vanish
  MeshOptions opt = MeshOptions::no_dirichlet();
  const PolyMesh mesh = refine_uniform(build_minimal_mesh(fixture("two_fractures.json"), opt), 30);
  const StripedSystem sys = assemble(mesh, number_serial(mesh));
  const std::vector<double> ones(static_cast<std::size_t>(sys.matrix.n), 1.0);
  CHECK(max_abs(sys.matrix.multiply(ones)) <= 1e-10);
}

TEST_CASE("CG agrees with a dense direct solve", "[fem][solver]")
{
  int solved = 0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const PolyMesh mesh = small_mesh(seed);
    if (mesh.counts().n_total > 200 || mesh.counts().n_total == 0)
      continue;
    const StripedSystem sys = assemble(mesh, number_serial(mesh), unit_forcing());
    const Eigen::MatrixXd a = to_dense(sys.matrix);
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(sys.rhs.data(), static_cast<Eigen::Index>(sys.rhs.size()));
    const Eigen::VectorXd ref = a.ldlt().solve(b);
    const SolveResult res = pcg_jacobi(sys, 1e-12);
    ++solved;
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(res.x.data(), static_cast<Eigen::Index>(res.x.size()));
    CHECK((x - ref).cwiseAbs().maxCoeff() <= 1e-8 * ref.cwiseAbs().maxCoeff());
    CHECK(res.report.relative_residual <= 1e-12);
    // energy decreases along CG iterates
    const auto& en = res.report.energies;
    for (std::size_t i = 1; i < en.size(); ++i)
      CHECK(en[i] <= en[i - 1] + 1e-12 * std::abs(en[0] == 0.0 ? en.back() : en[0]));
  }
  CHECK(solved >= 4);
}

TEST_CASE("solver edge cases", "[fem][solver]")
{
  SECTION("identity converges in one iteration")
  {
    CsrMatrix id;
    id.n = 5;
    for (int i = 0; i < 5; ++i) {
      id.col.push_back(i);
      id.val.push_back(1.0);
      id.row_ptr.push_back(i + 1);
    }
    const StripedSystem sys = make_system(id, {1, 2, 3, 4, 5}, {{0, 5}});
    const SolveResult res = pcg_jacobi(sys, 1e-12);
    CHECK(res.report.iterations == 1);
    CHECK(res.x == std::vector<double>{1, 2, 3, 4, 5});
  }
  SECTION("zero right-hand side")
  {
    const PolyMesh mesh = small_mesh(2);
    StripedSystem sys = assemble(mesh, number_serial(mesh));
    const SolveResult res = pcg_jacobi(sys);
    CHECK(res.report.iterations == 0);
    CHECK(max_abs(res.x) == 0.0);
  }
  SECTION("indefinite matrix breaks down")
  {
    CsrMatrix m;
    m.n = 2;
    m.row_ptr = {0, 2, 4};
    m.col = {0, 1, 0, 1};
    m.val = {1.0, 2.0, 2.0, 1.0};
    CHECK_THROWS_AS(pcg_jacobi(make_system(m, {1.0, -1.0}, {{0, 2}})), SolverError);
  }
  SECTION("iteration limit")
  {
    const PolyMesh mesh = small_mesh(3);
    const StripedSystem sys = assemble(mesh, number_serial(mesh), unit_forcing());
    CHECK_THROWS_AS(pcg_jacobi(sys, 1e-14, 2), SolverError);
  }
}

TEST_CASE("permutation equivariance", "[fem][solver]")
{
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const PolyMesh mesh = refine_uniform(build_minimal_mesh(random_dfn(seed, 12)), 30);
    const FractureAssignment a = assignment_from_parts(mesh.dfn(), [&] {
      std::vector<int> parts;
      for (std::size_t r = 0; r < mesh.dfn().num_fractures(); ++r)
        parts.push_back(static_cast<int>(r % 3));
      return parts;
    }(), 3);
    const DofNumbering ns = number_serial(mesh, 3);
    const DofNumbering nr = number_reordered(mesh, a, build_local_networks(mesh.dfn(), a));
    const StripedSystem ss = assemble(mesh, ns, unit_forcing());
    const StripedSystem sr = assemble(mesh, nr, unit_forcing());
    REQUIRE(ss.matrix.nnz() == sr.matrix.nnz());
    // P A P^T entry by entry
    double worst = 0.0;
    for (int i = 0; i < ss.matrix.n; ++i) {
      const int pi = nr.global_index[static_cast<std::size_t>(ns.node_of_index[static_cast<std::size_t>(i)])];
      CHECK(ss.rhs[static_cast<std::size_t>(i)] == Catch::Approx(sr.rhs[static_cast<std::size_t>(pi)]).epsilon(1e-14));
      for (int e = ss.matrix.row_ptr[static_cast<std::size_t>(i)]; e < ss.matrix.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
        const int j = ss.matrix.col[static_cast<std::size_t>(e)];
        const int pj = nr.global_index[static_cast<std::size_t>(ns.node_of_index[static_cast<std::size_t>(j)])];
        worst = std::max(worst, std::abs(ss.matrix.val[static_cast<std::size_t>(e)] - sr.matrix.at(pi, pj)));
      }
    }
    CHECK(worst <= 1e-14);
    const SolveResult xs = pcg_jacobi(ss, 1e-13);
    const SolveResult xr = pcg_jacobi(sr, 1e-13);
    double scale = max_abs(xs.x), diff = 0.0;
    for (int i = 0; i < ss.matrix.n; ++i) {
      const int pi = nr.global_index[static_cast<std::size_t>(ns.node_of_index[static_cast<std::size_t>(i)])];
      diff = std::max(diff, std::abs(xs.x[static_cast<std::size_t>(i)] - xr.x[static_cast<std::size_t>(pi)]));
    }
    CHECK(diff <= 1e-12 * scale);
    CHECK(std::abs(xs.report.iterations - xr.report.iterations) <= 1);
  }
}

TEST_CASE("communication plan", "[fem]")
{
  SECTION("recount against a row scan")
  {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const PolyMesh mesh = refine_uniform(build_minimal_mesh(random_dfn(seed, 16)), 30);
      const DfnGraph g = build_graph(Strategy::Wg, mesh);
      const Partition p = partition_multilevel(g, 4, default_balance_tol, seed);
      const FractureAssignment a = fracture_assignment(p, g, mesh.dfn());
      const DofNumbering num = number_reordered(mesh, a, build_local_networks(mesh.dfn(), a));
      const StripedSystem sys = assemble(mesh, num, unit_forcing());
      CHECK(sys.comm_plan == brute_plan(sys));
      long long off = 0;
      for (int i = 0; i < sys.matrix.n; ++i)
        for (int e = sys.matrix.row_ptr[static_cast<std::size_t>(i)]; e < sys.matrix.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
          const int j = sys.matrix.col[static_cast<std::size_t>(e)];
          off += num.stripe_of_index(i) != num.stripe_of_index(j);
        }
      CHECK(off_block_nnz(sys) == off);

      const SolveResult r = run_parallel(sys, 2);
      long long volume = 0;
      int messages = 0;
      for (std::size_t q = 0; q < 4; ++q) {
        long long h = 0;
        for (std::size_t s = 0; s < 4; ++s) {
          h += static_cast<long long>(sys.comm_plan[q][s].size());
          messages += !sys.comm_plan[q][s].empty();
        }
        CHECK(r.report.halo_sizes[q] == h);
        volume += h;
      }
      CHECK(r.report.volume_per_iteration == volume);
      CHECK(r.report.messages_per_iteration == messages);
    }
  }
  SECTION("block diagonal matrix needs no halo")
  {
    CsrMatrix m;
    m.n = 4;
    m.row_ptr = {0, 2, 4, 6, 8};
    m.col = {0, 1, 0, 1, 2, 3, 2, 3};
    m.val = {2, -1, -1, 2, 2, -1, -1, 2};
    const StripedSystem sys = make_system(m, {1, 1, 1, 1}, {{0, 2}, {2, 4}});
    CHECK(sys.comm_plan[0][1].empty());
    CHECK(sys.comm_plan[1][0].empty());
    CHECK(off_block_nnz(sys) == 0);
  }
}

TEST_CASE("assembled matrix structure", "[fem]")
{
  const PolyMesh mesh = refine_uniform(build_minimal_mesh(random_dfn(7, 12)), 30);
  const FractureAssignment a = assignment_from_parts(mesh.dfn(), std::vector<int>(12, 0), 1);
  const DofNumbering num = number_reordered(mesh, a, build_local_networks(mesh.dfn(), a));
  const StripedSystem sys = assemble(mesh, num, unit_forcing());
  for (int i = 0; i < sys.matrix.n; ++i) {
    CHECK(sys.matrix.at(i, i) > 0.0);
    for (int e = sys.matrix.row_ptr[static_cast<std::size_t>(i)]; e < sys.matrix.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
      const int j = sys.matrix.col[static_cast<std::size_t>(e)];
      CHECK(sys.matrix.at(j, i) == sys.matrix.val[static_cast<std::size_t>(e)]);
      if (e > sys.matrix.row_ptr[static_cast<std::size_t>(i)])
        CHECK(j > sys.matrix.col[static_cast<std::size_t>(e) - 1]);
    }
  }
}

TEST_CASE("parallel solve is reproducible", "[fem][solver]")
{
  const PolyMesh mesh = refine_uniform(build_minimal_mesh(random_dfn(4, 16)), 40);
  const DfnGraph g = build_graph(Strategy::Wg, mesh);
  const Partition p = partition_multilevel(g, 4);
  const FractureAssignment a = fracture_assignment(p, g, mesh.dfn());
  const StripedSystem sys = assemble(mesh, number_reordered(mesh, a, build_local_networks(mesh.dfn(), a)), unit_forcing());
  const SolveResult one = run_parallel(sys, 1);
  const SolveResult serial = pcg_jacobi(sys);
  CHECK(one.x == serial.x);
  CHECK(one.report.iterations == serial.report.iterations);
  for (int t : {2, 3, 4}) {
    const SolveResult r = run_parallel(sys, t);
    CHECK(r.x == one.x);
    CHECK(r.report.iterations == one.report.iterations);
    CHECK(r.report.threads == t);
  }
}

TEST_CASE("matrix and vector files", "[fem][io]")
{
  CsrMatrix m;
  m.n = 2;
  m.row_ptr = {0, 2, 4};
  m.col = {0, 1, 0, 1};
  m.val = {2.0, -1.0, -1.0, 2.0};
  const std::string mm = matrix_market(m);
  CHECK(mm.rfind("%%MatrixMarket matrix coordinate real symmetric\n", 0) == 0);
  CHECK(mm.find("\n2 2 3\n") != std::string::npos);

  const auto path = std::filesystem::temp_directory_path() / "dfnpart_vec_test.txt";
  const std::vector<double> v{1.0, -2.5e-17, 3.141592653589793, 1e300};
  save_vector(v, path);
  CHECK(load_vector(path) == v);
  std::filesystem::remove(path);
}
