// SPDX-License-Identifier: Apache-2.0
// dfnpart: command line front end of the experiment harness.
#include "dfnpart/dfn_io.hpp"
#include "dfnpart/errors.hpp"
#include "dfnpart/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace dfnpart;

namespace {

struct Flags
{
  std::string config;
  std::string dfn;
  std::uint64_t seed = 1;
  int num_fractures = 16;
  int n = 50;
  std::vector<std::string> strategies;
  std::vector<int> parts;
  std::string scheme;
  std::vector<int> threads;
  double rtol = 1e-8;
  std::string out;
  int rounds = 10;
  std::string marking;
  int repartition_every = 0;
  double mark_fraction = 0.3;
};

void add_common(CLI::App* cmd, Flags& f)
{
  cmd->add_option("--config", f.config, "JSON experiment config; flags override it")->check(CLI::ExistingFile);
  cmd->add_option("--dfn", f.dfn, "DFN file (JSON); default: generated")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "generator and partitioner seed");
  cmd->add_option("--num-fractures", f.num_fractures, "fractures to generate when --dfn is absent");
  cmd->add_option("--n", f.n, "target Dofs per fracture")->check(CLI::PositiveNumber);
  cmd->add_option("--strategies", f.strategies, "Pg,Wg,Pb,Wb,Pt,Wt,MeshP")->delimiter(',');
  cmd->add_option("--parts", f.parts, "process counts k")->delimiter(',');
  cmd->add_option("--scheme", f.scheme, "serial | reordered");
  cmd->add_option("--threads", f.threads, "worker counts p")->delimiter(',');
  cmd->add_option("--rtol", f.rtol, "CG relative residual tolerance");
  cmd->add_option("--out", f.out, "output directory");
}

ExperimentConfig resolve(const CLI::App* cmd, const Flags& f)
{
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  auto given = [&](const char* name) { return cmd->get_option_no_throw(name) && cmd->count(name) > 0; };
  if (given("--dfn"))
    c.dfn_path = f.dfn;
  if (given("--seed"))
    c.seed = f.seed;
  if (given("--num-fractures"))
    c.generator.num_fractures = f.num_fractures;
  if (given("--n"))
    c.n = f.n;
  if (given("--strategies")) {
    c.strategies.clear();
    for (const auto& s : f.strategies)
      c.strategies.push_back(strategy_from_string(s));
  }
  if (given("--parts"))
    c.parts = f.parts;
  if (given("--scheme"))
    c.scheme = scheme_from_string(f.scheme);
  if (given("--threads"))
    c.threads = f.threads;
  if (given("--rtol"))
    c.rtol = f.rtol;
  if (given("--out"))
    c.out_dir = f.out;
  if (given("--rounds"))
    c.rounds = f.rounds;
  if (given("--marking"))
    c.marking = f.marking;
  if (given("--repartition-every"))
    c.repartition_every = f.repartition_every;
  if (given("--mark-fraction"))
    c.mark_fraction = f.mark_fraction;
  c.validate();
  return c;
}

void write_output(const ExperimentConfig& c, const std::string& name, const std::string& text)
{
  std::filesystem::create_directories(c.out_dir);
  const auto path = c.out_dir / name;
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());
  out << text;
  std::cout << text;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"DFN partitioning, Dof reordering and striped PCG experiments"};
  app.require_subcommand(1);
  Flags f;

  auto* table = app.add_subcommand("partition-table", "C, I and timings per (k, strategy)");
  auto* sparsity = app.add_subcommand("sparsity", "matrix patterns under serial and reordered numberings");
  auto* speedup = app.add_subcommand("speedup", "t_p, S_p and halo volumes per (strategy, scheme, p)");
  auto* decay = app.add_subcommand("refine-decay", "imbalance under marked refinement");
  for (auto* cmd : {table, sparsity, speedup, decay})
    add_common(cmd, f);
  decay->add_option("--rounds", f.rounds, "refinement rounds");
  decay->add_option("--marking", f.marking, "trace | uniform");
  decay->add_option("--mark-fraction", f.mark_fraction, "share of candidate cells marked per round");
  decay->add_option("--repartition-every", f.repartition_every, "re-partition period in rounds (0 = never)");

  auto* gen = app.add_subcommand("gen-dfn", "generate a random DFN");
  std::string gen_out;
  gen->add_option("--num-fractures", f.num_fractures, "number of fractures");
  gen->add_option("--seed", f.seed, "generator seed");
  gen->add_option("--out", gen_out, "output file (default: stdout)");

  auto* mesh_cmd = app.add_subcommand("mesh", "mesh a DFN and export mesh, graphs, partitions, numbering, matrix");
  add_common(mesh_cmd, f);
  bool export_matrix = false;
  mesh_cmd->add_flag("--matrix", export_matrix, "also write matrix.mtx and rhs.txt (first strategy and k)");

  try {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      GeneratorSpec spec;
      spec.num_fractures = f.num_fractures;
      const std::string text = dfn_to_string(generate_dfn(spec, f.seed));
      if (gen_out.empty())
        std::cout << text;
      else {
        std::ofstream out(gen_out);
        if (!out)
          throw Error("cannot write " + gen_out);
        out << text;
      }
      return 0;
    }

    CLI::App* cmd = app.get_subcommands().front();
    const ExperimentConfig c = resolve(cmd, f);
    const Dfn dfn = make_dfn(c);
    const PolyMesh mesh = make_mesh(dfn, c.n);

    if (table->parsed())
      write_output(c, "partition_table.csv", table_csv(cmd_partition_table(c, mesh)));
    else if (sparsity->parsed())
      write_output(c, "sparsity.csv", sparsity_csv(cmd_sparsity(c, mesh)));
    else if (speedup->parsed())
      write_output(c, "speedup.csv", speedup_csv(cmd_speedup(c, mesh)));
    else if (decay->parsed())
      write_output(c, "refine_decay.csv", decay_csv(cmd_refine_decay(c, mesh)));
    else if (mesh_cmd->parsed()) {
      std::filesystem::create_directories(c.out_dir);
      save_dfn(dfn, c.out_dir / "dfn.json");
      save_mesh(mesh, c.out_dir / "mesh.json");
      for (Strategy s : c.strategies) {
        const DfnGraph g = build_graph(s, mesh);
        export_graph(g, c.out_dir / ("graph_" + std::string(to_string(s)) + ".graph"));
        for (int k : c.parts) {
          const StrategyRun run = run_strategy(mesh, s, k, c.scheme, c.balance_tol, c.seed);
          const std::string tag = std::string(to_string(s)) + "_k" + std::to_string(k);
          export_partition(run.partition, c.out_dir / ("partition_" + tag + ".txt"));
          save_numbering_csv(mesh, run.numbering, c.out_dir / ("numbering_" + tag + ".csv"));
        }
      }
      if (export_matrix) {
        const StrategyRun run =
            run_strategy(mesh, c.strategies.front(), c.parts.front(), c.scheme, c.balance_tol, c.seed);
        Problem p;
        p.forcing = [](int, Vec3) { return 1.0; };
        const StripedSystem sys = assemble(mesh, run.numbering, p);
        save_matrix_market(sys.matrix, c.out_dir / "matrix.mtx");
        save_vector(sys.rhs, c.out_dir / "rhs.txt");
      }
      const DofCounts& k = mesh.counts();
      std::cout << "fractures " << dfn.num_fractures() << " traces " << dfn.num_traces() << " cross_points "
                << dfn.num_cross_points() << " cells " << mesh.cells().size() << " dofs " << k.n_total
                << " trace_dofs " << k.n_trace << '\n';
    }
  }
  catch (const std::exception& e) {
    std::cerr << "dfnpart: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
