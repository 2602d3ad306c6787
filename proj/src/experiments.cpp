// SPDX-License-Identifier: Apache-2.0
#include "dfnpart/experiments.hpp"

#include "dfnpart/dfn_io.hpp"
#include "dfnpart/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace dfnpart {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double x, const char* spec = "%.6g")
{
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

void ensure_dir(const std::filesystem::path& dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw Error("cannot create " + dir.string() + ": " + ec.message());
}

Problem unit_source()
{
  Problem p;
  p.forcing = [](int, Vec3) { return 1.0; };
  return p;
}

} // namespace

void ExperimentConfig::validate() const
{
  if (strategies.empty())
    throw Error("config: at least one strategy is required");
  if (parts.empty())
    throw Error("config: at least one part count is required");
  for (int k : parts)
    if (k < 1)
      throw Error("config: part counts must be >= 1");
  for (int t : threads)
    if (t < 1)
      throw Error("config: thread counts must be >= 1");
  if (n < 1)
    throw Error("config: n must be >= 1");
  if (!(rtol > 0.0))
    throw Error("config: rtol must be positive");
  if (rounds < 0)
    throw Error("config: rounds must be >= 0");
  if (marking != "trace" && marking != "uniform")
    throw Error("config: marking must be \"trace\" or \"uniform\"");
  if (!(mark_fraction > 0.0 && mark_fraction <= 1.0))
    throw Error("config: mark_fraction must be in (0, 1]");
  if (image_size < 1)
    throw Error("config: image_size must be >= 1");
}

ExperimentConfig config_from_json(std::string_view text)
{
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  }
  catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object())
    throw ParseError("config: expected an object");
  ExperimentConfig c;
  try {
    if (j.contains("dfn"))
      c.dfn_path = j.at("dfn").get<std::string>();
    if (j.contains("generator")) {
      const json& g = j.at("generator");
      c.generator.num_fractures = g.value("num_fractures", c.generator.num_fractures);
      c.generator.min_size = g.value("min_size", c.generator.min_size);
      c.generator.max_size = g.value("max_size", c.generator.max_size);
      if (g.contains("domain_lo")) {
        const auto v = g.at("domain_lo").get<std::array<double, 3>>();
        c.generator.domain_lo = {v[0], v[1], v[2]};
      }
      if (g.contains("domain_hi")) {
        const auto v = g.at("domain_hi").get<std::array<double, 3>>();
        c.generator.domain_hi = {v[0], v[1], v[2]};
      }
    }
    c.seed = j.value("seed", c.seed);
    c.n = j.value("n", c.n);
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : j.at("strategies"))
        c.strategies.push_back(strategy_from_string(s.get<std::string>()));
    }
    if (j.contains("parts"))
      c.parts = j.at("parts").get<std::vector<int>>();
    if (j.contains("scheme"))
      c.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    if (j.contains("threads"))
      c.threads = j.at("threads").get<std::vector<int>>();
    c.rtol = j.value("rtol", c.rtol);
    c.maxit = j.value("maxit", c.maxit);
    c.balance_tol = j.value("balance_tol", c.balance_tol);
    if (j.contains("out"))
      c.out_dir = j.at("out").get<std::string>();
    c.rounds = j.value("rounds", c.rounds);
    c.marking = j.value("marking", c.marking);
    c.mark_fraction = j.value("mark_fraction", c.mark_fraction);
    c.repartition_every = j.value("repartition_every", c.repartition_every);
    c.image_size = j.value("image_size", c.image_size);
  }
  catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

Dfn make_dfn(const ExperimentConfig& config)
{
  return config.dfn_path ? load_dfn(*config.dfn_path) : generate_dfn(config.generator, config.seed);
}

PolyMesh make_mesh(const Dfn& dfn, int n) { return refine_uniform(build_minimal_mesh(dfn), n); }

StrategyRun run_strategy(const PolyMesh& mesh, Strategy s, int k, Scheme scheme, double balance_tol,
                         std::uint64_t seed)
{
  StrategyRun run;
  run.strategy = s;
  run.k = k;
  const DfnGraph g = build_graph(s, mesh);
  const auto t = Clock::now();
  run.partition = partition_multilevel(g, k, balance_tol, seed);
  run.partition_seconds = seconds_since(t);
  if (s == Strategy::MeshP) {
    run.metrics = compute_mesh_metrics(mesh, g, run.partition);
    run.numbering = scheme == Scheme::Serial ? number_serial(mesh, k) : number_by_dof_partition(mesh, g, run.partition);
  }
  else {
    const FractureAssignment a = fracture_assignment(run.partition, g, mesh.dfn());
    run.metrics = compute_metrics(mesh, a, run.partition.edge_cut);
    run.numbering = scheme == Scheme::Serial ? number_serial(mesh, k)
                                             : number_reordered(mesh, a, build_local_networks(mesh.dfn(), a));
  }
  return run;
}

std::vector<TableRow> cmd_partition_table(const ExperimentConfig& config, const PolyMesh& mesh)
{
  config.validate();
  std::vector<TableRow> rows;
  for (int k : config.parts)
    for (Strategy s : config.strategies) {
      TableRow row;
      row.num_fractures = static_cast<int>(mesh.dfn().num_fractures());
      row.num_dofs = mesh.counts().n_total;
      row.k = k;
      row.strategy = s;
      try {
        const StrategyRun run = run_strategy(mesh, s, k, config.scheme, config.balance_tol, config.seed);
        row.cut_C = run.metrics.cut_C;
        row.imbalance_I = run.metrics.imbalance_I;
        row.graph_edge_cut = run.metrics.graph_edge_cut;
        row.balance_satisfied = run.partition.balance_satisfied;
        row.partition_seconds = run.partition_seconds;
        const StripedSystem sys = assemble(mesh, run.numbering, unit_source());
        const SolveResult res = pcg_jacobi(sys, config.rtol, config.maxit);
        row.solve_seconds = res.report.wall_seconds;
        row.iterations = res.report.iterations;
        row.volume_per_iteration = res.report.volume_per_iteration;
        for (long long h : res.report.halo_sizes)
          row.max_halo = std::max(row.max_halo, h);
      }
      catch (const PartitionError&) {
        row.status = "infeasible";
      }
      rows.push_back(row);
    }
  return rows;
}

std::string table_csv(const std::vector<TableRow>& rows)
{
  std::ostringstream out;
  out << "num_fractures,num_dofs,k,strategy,status,C,I,graph_edge_cut,balance_satisfied,partition_seconds,"
         "solve_seconds,iterations,volume_per_iteration,max_halo\n";
  for (const TableRow& r : rows)
    out << r.num_fractures << ',' << r.num_dofs << ',' << r.k << ',' << to_string(r.strategy) << ',' << r.status << ','
        << r.cut_C << ',' << fmt(r.imbalance_I) << ',' << r.graph_edge_cut << ',' << (r.balance_satisfied ? 1 : 0)
        << ',' << fmt(r.partition_seconds, "%.6f") << ',' << fmt(r.solve_seconds, "%.6f") << ',' << r.iterations
        << ',' << r.volume_per_iteration << ',' << r.max_halo << '\n';
  return out.str();
}

namespace {

SparsitySummary write_pattern(const ExperimentConfig& config, const std::string& label, const StripedSystem& sys,
                              int interface_rows)
{
  const CsrMatrix& m = sys.matrix;
  SparsitySummary s;
  s.label = label;
  s.n = m.n;
  s.nnz = m.nnz();
  s.off_block_nnz = off_block_nnz(sys);
  s.stripes = sys.stripes;
  s.interface_rows_fraction =
      m.nnz() == 0 ? 0.0 : static_cast<double>(m.row_ptr[static_cast<std::size_t>(interface_rows)]) / static_cast<double>(m.nnz());

  std::ofstream coo(config.out_dir / ("sparsity_" + label + ".coo"));
  if (!coo)
    throw Error("cannot write pattern for " + label);
  coo << "# n " << m.n << " nnz " << m.nnz() << " stripes";
  for (const auto& [a, b] : sys.stripes)
    coo << ' ' << a << ':' << b;
  coo << '\n';
  const int px = config.image_size;
  std::vector<long long> grid(static_cast<std::size_t>(px) * static_cast<std::size_t>(px), 0);
  for (int i = 0; i < m.n; ++i)
    for (int e = m.row_ptr[static_cast<std::size_t>(i)]; e < m.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
      const int j = m.col[static_cast<std::size_t>(e)];
      coo << i << ' ' << j << '\n';
      const long long gi = static_cast<long long>(i) * px / std::max(1, m.n);
      const long long gj = static_cast<long long>(j) * px / std::max(1, m.n);
      ++grid[static_cast<std::size_t>(gi * px + gj)];
    }
  std::ofstream img(config.out_dir / ("sparsity_" + label + "_grid.csv"));
  if (!img)
    throw Error("cannot write pattern grid for " + label);
  for (int r = 0; r < px; ++r) {
    for (int c = 0; c < px; ++c)
      img << (c ? "," : "") << grid[static_cast<std::size_t>(r * px + c)];
    img << '\n';
  }
  return s;
}

} // namespace

std::vector<SparsitySummary> cmd_sparsity(const ExperimentConfig& config, const PolyMesh& mesh)
{
  config.validate();
  ensure_dir(config.out_dir);
  const int k = config.parts.front();
  const int interface_rows = mesh.counts().n_trace;
  std::vector<SparsitySummary> out;
  const DofNumbering serial = number_serial(mesh, k);
  out.push_back(write_pattern(config, "serial", assemble(mesh, serial, unit_source()), interface_rows));
  for (Strategy s : config.strategies) {
    const StrategyRun run = run_strategy(mesh, s, k, Scheme::Reordered, config.balance_tol, config.seed);
    out.push_back(write_pattern(config, std::string(to_string(s)), assemble(mesh, run.numbering, unit_source()),
                                interface_rows));
  }
  return out;
}

std::string sparsity_csv(const std::vector<SparsitySummary>& rows)
{
  std::ostringstream out;
  out << "label,n,nnz,off_block_nnz,off_block_fraction,interface_rows_fraction,stripes\n";
  for (const SparsitySummary& s : rows) {
    out << s.label << ',' << s.n << ',' << s.nnz << ',' << s.off_block_nnz << ','
        << fmt(s.nnz ? static_cast<double>(s.off_block_nnz) / static_cast<double>(s.nnz) : 0.0) << ','
        << fmt(s.interface_rows_fraction) << ',';
    for (std::size_t i = 0; i < s.stripes.size(); ++i)
      out << (i ? " " : "") << s.stripes[i].first << ':' << s.stripes[i].second;
    out << '\n';
  }
  return out.str();
}

std::vector<SpeedupRow> cmd_speedup(const ExperimentConfig& config, const PolyMesh& mesh)
{
  config.validate();
  std::vector<SpeedupRow> rows;
  for (Strategy s : config.strategies)
    for (Scheme scheme : {Scheme::Serial, Scheme::Reordered}) {
      double t1 = 0.0;
      for (int p : config.threads) {
        const StrategyRun run = run_strategy(mesh, s, p, scheme, config.balance_tol, config.seed);
        const StripedSystem sys = assemble(mesh, run.numbering, unit_source());
        const SolveResult res = run_parallel(sys, p, config.rtol, config.maxit);
        SpeedupRow row;
        row.strategy = s;
        row.scheme = scheme;
        row.p = p;
        row.iterations = res.report.iterations;
        row.wall_seconds = res.report.wall_seconds;
        if (p == 1)
          t1 = row.wall_seconds;
        row.speedup = t1 > 0.0 && row.wall_seconds > 0.0 ? t1 / row.wall_seconds : (p == 1 ? 1.0 : 0.0);
        row.volume_per_iteration = res.report.volume_per_iteration;
        row.messages_per_iteration = res.report.messages_per_iteration;
        for (long long h : res.report.halo_sizes)
          row.max_halo = std::max(row.max_halo, h);
        rows.push_back(row);
      }
    }
  return rows;
}

std::string speedup_csv(const std::vector<SpeedupRow>& rows)
{
  std::ostringstream out;
  out << "strategy,scheme,p,iterations,wall_seconds,speedup,volume_per_iteration,messages_per_iteration,max_halo\n";
  for (const SpeedupRow& r : rows)
    out << to_string(r.strategy) << ',' << to_string(r.scheme) << ',' << r.p << ',' << r.iterations << ','
        << fmt(r.wall_seconds, "%.6f") << ',' << fmt(r.speedup, "%.4f") << ',' << r.volume_per_iteration << ','
        << r.messages_per_iteration << ',' << r.max_halo << '\n';
  return out.str();
}

namespace {

struct DecayState
{
  Strategy strategy;
  int k;
  // fracture-level assignment, or the Dof-level part of every mesh node for MeshP
  FractureAssignment assignment;
  std::vector<int> node_part;
};

DecayState partition_for_decay(const PolyMesh& mesh, Strategy s, int k, const ExperimentConfig& config)
{
  DecayState st{s, k, {}, {}};
  const DfnGraph g = build_graph(s, mesh);
  // Localized refinement can leave one fracture heavier than a balanced part; then the
  // best reachable balance is the one that just fits the heaviest node.
  double tol = config.balance_tol;
  const long long total = g.total_node_weight();
  const long long heaviest = *std::max_element(g.node_weights.begin(), g.node_weights.end());
  const auto per_part = static_cast<double>((total + k - 1) / k);
  if (static_cast<double>(heaviest) > (1.0 + tol) * per_part)
    tol = static_cast<double>(heaviest) / per_part - 1.0 + 1e-9;
  const Partition p = partition_multilevel(g, k, tol, config.seed);
  if (s == Strategy::MeshP) {
    st.node_part.assign(mesh.nodes().size(), -1);
    for (int u = 0; u < g.num_nodes(); ++u)
      st.node_part[static_cast<std::size_t>(g.labels[static_cast<std::size_t>(u)].id)] = p.part_of[static_cast<std::size_t>(u)];
  }
  else
    st.assignment = fracture_assignment(p, g, mesh.dfn());
  return st;
}

// Without repartitioning a Dof-level partition, new nodes join the part of the
// lowest-id node of their first cell that already has a part.
void extend_node_parts(const PolyMesh& mesh, std::vector<int>& node_part)
{
  node_part.resize(mesh.nodes().size(), -1);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const MeshNode& n : mesh.nodes()) {
      if (node_part[static_cast<std::size_t>(n.id)] >= 0)
        continue;
      for (int c : n.cells)
        for (int m : mesh.cell(c).node_ids)
          if (node_part[static_cast<std::size_t>(n.id)] < 0 && node_part[static_cast<std::size_t>(m)] >= 0) {
            node_part[static_cast<std::size_t>(n.id)] = node_part[static_cast<std::size_t>(m)];
            changed = true;
          }
    }
  }
}

PartitionMetrics decay_metrics(const PolyMesh& mesh, DecayState& st)
{
  if (st.strategy != Strategy::MeshP)
    return compute_metrics(mesh, st.assignment);
  extend_node_parts(mesh, st.node_part);
  const DfnGraph g = build_mesh_dof_graph(mesh);
  std::vector<int> part;
  for (const NodeLabel& l : g.labels)
    part.push_back(std::max(0, st.node_part[static_cast<std::size_t>(l.id)]));
  return compute_mesh_metrics(mesh, g, make_partition(g, std::move(part), st.k));
}

// Cells to refine around the target segment (a trace, or a single point): those of the
// target fractures, nearest first.
struct MarkTarget
{
  Vec3 a, b;
  std::vector<int> fractures;
};

std::set<int> trace_marking(const PolyMesh& mesh, const MarkTarget& target, double fraction)
{
  const std::vector<int>& fractures = target.fractures;
  std::vector<std::pair<double, int>> cand;
  for (int r : fractures) {
    const PlaneBasis& basis = mesh.dfn().fracture(r).basis;
    for (int c : mesh.cells_of_fracture(r)) {
      Vec2 centroid{0.0, 0.0};
      const auto poly = mesh.cell_polygon(c);
      for (const Vec2& p : poly)
        centroid = centroid + p;
      centroid = (1.0 / static_cast<double>(poly.size())) * centroid;
      cand.emplace_back(distance_to_segment(basis.to_global(centroid), target.a, target.b), c);
    }
  }
  std::sort(cand.begin(), cand.end());
  const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(cand.size())));
  std::set<int> marked;
  for (std::size_t i = 0; i < std::min(count, cand.size()); ++i)
    marked.insert(cand[i].second);
  return marked;
}

// Picks the trace to refine around and the fractures whose cells get marked. A heaviest
// part without traces is refined around the centroid of its largest fracture.
MarkTarget choose_target(const PolyMesh& mesh, const DecayState& st, const PartitionMetrics& m0)
{
  const Dfn& dfn = mesh.dfn();
  const int heavy = static_cast<int>(std::max_element(m0.dof_per_part.begin(), m0.dof_per_part.end()) -
                                     m0.dof_per_part.begin());
  auto part_of_fracture = [&](int r) {
    if (st.strategy != Strategy::MeshP)
      return st.assignment.part_of_fracture(r);
    // majority part of the fracture's nodes
    std::vector<int> votes(static_cast<std::size_t>(st.k), 0);
    for (int node : mesh.nodes_of_fracture(r))
      if (st.node_part[static_cast<std::size_t>(node)] >= 0)
        ++votes[static_cast<std::size_t>(st.node_part[static_cast<std::size_t>(node)])];
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  };
  const Trace* fallback = nullptr;
  int fallback_fracture = 0;
  for (const Trace& t : dfn.traces()) {
    const bool r_heavy = part_of_fracture(t.it_pair.first) == heavy;
    const bool s_heavy = part_of_fracture(t.it_pair.second) == heavy;
    if (r_heavy && s_heavy)
      return {t.endpoints[0], t.endpoints[1], {t.it_pair.first, t.it_pair.second}};
    if (!fallback && (r_heavy || s_heavy)) {
      fallback = &t;
      fallback_fracture = r_heavy ? t.it_pair.first : t.it_pair.second;
    }
  }
  if (fallback)
    return {fallback->endpoints[0], fallback->endpoints[1], {fallback_fracture}};
  int largest = 0;
  double area = -1.0;
  for (const Fracture& f : dfn.fractures())
    if (part_of_fracture(f.id) == heavy && f.area() > area) {
      largest = f.id;
      area = f.area();
    }
  if (largest == 0)
    throw Error("refine-decay: the heaviest part holds no fracture");
  Vec3 c{0.0, 0.0, 0.0};
  for (const Vec3& v : dfn.fracture(largest).vertices)
    c = c + v;
  c = (1.0 / static_cast<double>(dfn.fracture(largest).vertices.size())) * c;
  return {c, c, {largest}};
}

} // namespace

std::vector<DecayRow> cmd_refine_decay(const ExperimentConfig& config, const PolyMesh& start)
{
  config.validate();
  const Strategy s = config.strategies.front();
  const int k = config.parts.front();
  PolyMesh mesh = start;
  DecayState st = partition_for_decay(mesh, s, k, config);
  PartitionMetrics m = decay_metrics(mesh, st);

  std::vector<DecayRow> rows;
  rows.push_back({0, mesh.counts().n_total, m.imbalance_I, m.cut_C, false, 0, m.dof_per_part});
  const MarkTarget target = config.marking == "trace" ? choose_target(mesh, st, m) : MarkTarget{};
  for (int round = 1; round <= config.rounds; ++round) {
    std::set<int> marked;
    if (config.marking == "uniform")
      for (const Cell& c : mesh.cells())
        marked.insert(c.id);
    else
      marked = trace_marking(mesh, target, config.mark_fraction);
    mesh = refine_marked(mesh, marked);
    const bool repartition = config.repartition_every > 0 && round % config.repartition_every == 0;
    if (repartition)
      st = partition_for_decay(mesh, s, k, config);
    m = decay_metrics(mesh, st);
    rows.push_back({round, mesh.counts().n_total, m.imbalance_I, m.cut_C, repartition,
                    static_cast<int>(marked.size()), m.dof_per_part});
  }
  return rows;
}

std::string decay_csv(const std::vector<DecayRow>& rows)
{
  std::ostringstream out;
  out << "round,num_dofs,I,C,repartitioned,marked_cells,dof_per_part\n";
  for (const DecayRow& r : rows) {
    out << r.round << ',' << r.num_dofs << ',' << fmt(r.imbalance_I) << ',' << r.cut_C << ','
        << (r.repartitioned ? 1 : 0) << ',' << r.marked_cells << ',';
    for (std::size_t i = 0; i < r.dof_per_part.size(); ++i)
      out << (i ? " " : "") << r.dof_per_part[i];
    out << '\n';
  }
  return out.str();
}

} // namespace dfnpart
