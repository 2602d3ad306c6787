// SPDX-License-Identifier: Apache-2.0
#include "dfnpart/dfn_io.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace dfnpart;
using namespace dfnpart::test;

namespace {

fs::path scratch(const std::string& name)
{
  const fs::path dir = fs::temp_directory_path() / ("dfnpart_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const fs::path& log)
{
  const std::string cmd = std::string(DFNPART_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return status == 0 ? 0 : (status == -1 ? -1 : 1);
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

using Row = std::map<std::string, std::string>;

std::vector<Row> read_csv(const fs::path& p)
{
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> header;
  std::vector<Row> rows;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream s(l);
    std::string cell;
    while (std::getline(s, cell, ','))
      out.push_back(cell);
    return out;
  };
  if (std::getline(in, line))
    header = split(line);
  while (std::getline(in, line)) {
    const auto cells = split(line);
    Row r;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i)
      r[header[i]] = cells[i];
    rows.push_back(r);
  }
  return rows;
}

} // namespace

TEST_CASE("gen-dfn writes a loadable network", "[cli]")
{
  const fs::path dir = scratch("gen");
  REQUIRE(run("gen-dfn --num-fractures 12 --seed 9 --out " + (dir / "g.json").string(), dir / "log") == 0);
  const Dfn dfn = load_dfn(dir / "g.json");
  CHECK(dfn.num_fractures() == 12);
  CHECK(dfn == random_dfn(9, 12));
}

TEST_CASE("mesh exports every artefact", "[cli]")
{
  const fs::path dir = scratch("mesh");
  REQUIRE(run("mesh --dfn " + data_path("frac6.json") + " --n 10 --strategies Pg,Wt --parts 2 --matrix --out " +
                  dir.string(),
              dir / "log") == 0);
  for (const char* f : {"dfn.json", "mesh.json", "graph_Pg.graph", "graph_Wt.graph", "partition_Pg_k2.txt",
                        "numbering_Pg_k2.csv", "matrix.mtx", "rhs.txt"})
    CHECK(fs::exists(dir / f));
  CHECK(slurp(dir / "graph_Pg.graph").rfind("6 6", 0) == 0);
  CHECK(load_dfn(dir / "dfn.json") == fixture("frac6.json"));
}

TEST_CASE("partition-table with one process", "[cli]")
{
  const fs::path dir = scratch("table");
  REQUIRE(run("partition-table --dfn " + data_path("frac6.json") + " --n 10 --strategies Pg,Wg,Pb,Wb,Pt,Wt,MeshP --parts 1 --out " +
                  dir.string(),
              dir / "log") == 0);
  const auto rows = read_csv(dir / "partition_table.csv");
  REQUIRE(rows.size() == 7);
  for (const Row& r : rows) {
    CHECK(r.at("C") == "0");
    CHECK(std::stod(r.at("I")) == 1.0);
    CHECK(r.at("status") == "ok");
  }
}

TEST_CASE("bad arguments fail", "[cli]")
{
  const fs::path dir = scratch("bad");
  CHECK(run("partition-table --no-such-flag", dir / "log") != 0);
  CHECK(run("partition-table --strategies Xx --out " + dir.string(), dir / "log") != 0);
  CHECK(slurp(dir / "log").find("dfnpart:") != std::string::npos);
  CHECK(run("partition-table --dfn " + (dir / "missing.json").string(), dir / "log") != 0);
  CHECK(run("", dir / "log") != 0);
}

TEST_CASE("config file with flag override", "[cli]")
{
  const fs::path dir = scratch("config");
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"dfn": ")" << data_path("frac6.json") << R"(", "n": 10, "strategies": ["Wg"], "parts": [2, 3], "out": ")"
        << dir.string() << "\"}";
  }
  REQUIRE(run("partition-table --config " + (dir / "cfg.json").string(), dir / "log") == 0);
  CHECK(read_csv(dir / "partition_table.csv").size() == 2);
  REQUIRE(run("partition-table --config " + (dir / "cfg.json").string() + " --parts 2", dir / "log") == 0);
  const auto rows = read_csv(dir / "partition_table.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].at("k") == "2");
  CHECK(rows[0].at("strategy") == "Wg");
}

TEST_CASE("sparsity and speedup", "[cli]")
{
  const fs::path dir = scratch("solve");
  REQUIRE(run("sparsity --num-fractures 8 --seed 3 --n 20 --parts 3 --out " + dir.string(), dir / "log") == 0);
  const auto sp = read_csv(dir / "sparsity.csv");
  REQUIRE(sp.size() >= 2);
  for (const Row& r : sp)
    CHECK(std::stoll(r.at("nnz")) == std::stoll(sp[0].at("nnz")));

  REQUIRE(run("speedup --num-fractures 8 --seed 3 --n 20 --threads 1,2 --out " + dir.string(), dir / "log") == 0);
  const auto rows = read_csv(dir / "speedup.csv");
  REQUIRE(rows.size() == 4); // serial and reordered, p = 1, 2
  for (const Row& r : rows) {
    CHECK(r.at("iterations") == rows[0].at("iterations"));
    if (r.at("p") == "1") {
      CHECK(std::stod(r.at("speedup")) == 1.0);
      CHECK(r.at("max_halo") == "0");
    }
  }
}

TEST_CASE("refine-decay under uniform marking", "[cli]")
{
  const fs::path dir = scratch("decay");
  REQUIRE(run("refine-decay --num-fractures 8 --seed 4 --n 10 --parts 2 --rounds 2 --marking uniform --out " +
                  dir.string(),
              dir / "log") == 0);
  const auto rows = read_csv(dir / "refine_decay.csv");
  REQUIRE(rows.size() == 3);
  // uniform splitting scales every part by the same factor only approximately, so check it stays balanced
  for (const Row& r : rows)
    CHECK(std::stod(r.at("I")) > 0.5);
  CHECK(std::stoi(rows[2].at("num_dofs")) > std::stoi(rows[0].at("num_dofs")));
}
