#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "medgmm/io.hpp"
#include "medgmm/runner.hpp"
#include "medgmm/simulate.hpp"

using namespace medgmm;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("medgmm_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string medgmm_bin() {
  const char* bin = std::getenv("MEDGMM_BIN");
  return bin ? bin : "";
}

int run_cli(const std::string& args) {
  const int rc = std::system((medgmm_bin() + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("matrix csv round trip with provenance comments") {
  const fs::path dir = temp_dir("csv");
  RngStream rng(101);
  Eigen::MatrixXd m(5, 3);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = rng.normal() * std::pow(10.0, int(rng.uniform() * 6) - 3);
  write_matrix_csv((dir / "m.csv").string(), m, {"a", "b", "c"}, provenance_line(7, 9));
  const NamedMatrix back = read_matrix_csv((dir / "m.csv").string());
  CHECK(back.columns == std::vector<std::string>{"a", "b", "c"});
  CHECK(back.values == m);  // byte-exact float round trip
  fs::remove_all(dir);
}

TEST_CASE("edge list round trip") {
  const fs::path dir = temp_dir("edges");
  const NeighborGraph g = NeighborGraph::from_edges(6, {{0, 1}, {2, 5}, {1, 3}});
  write_edge_list((dir / "g.txt").string(), g, "# test");
  const NeighborGraph back = read_edge_list((dir / "g.txt").string(), 6);
  CHECK(back.edges == g.edges);
  CHECK_THROWS_AS(read_edge_list((dir / "missing.txt").string(), 6), std::invalid_argument);
  fs::remove_all(dir);
}

TEST_CASE("config parsing") {
  SUBCASE("fit config defaults and overrides") {
    const RunConfig c = parse_fit_config(R"({"method": "potts", "iterations": 500,
      "burnin": 100, "seed": 9, "structure": {"source": "auto"}})");
    CHECK(c.method == Method::Potts);
    CHECK(c.fit.iterations == 500);
    CHECK(c.fit.thin == 10);  // default
    CHECK(c.seed == 9);
  }
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_AS(parse_fit_config(R"({"metod": "gmm"})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_fit_config(R"({"hyper": {"dff": 3}})"), std::invalid_argument);
  }
  SUBCASE("grid config") {
    const GridConfig g = parse_grid_config(R"({
      "designs": [{"id": "d1", "n": 50, "p": 20, "block_size": 5, "block_count": 2,
                   "active_count": 2}],
      "methods": ["gmm"], "replicates": 4, "seed": 2,
      "fit": {"iterations": 200, "burnin": 50}})");
    CHECK(g.designs.size() == 1);
    CHECK(g.designs[0].n == 50);
    CHECK(g.replicates == 4);
  }
  SUBCASE("sim config validation") {
    CHECK_THROWS_AS(parse_sim_config(R"({"replicates": 0})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_sim_config(R"({"design": {"placement": "sideways"}})"),
                    std::invalid_argument);
  }
}

TEST_CASE("structure resolution error paths") {
  MediationDataset tiny;
  tiny.exposure.resize(2);
  tiny.exposure << 0.0, 1.0;
  tiny.outcome.resize(2);
  tiny.outcome << 1.0, -1.0;
  tiny.mediators.resize(2, 3);
  tiny.mediators << 0, 1, 2, 3, 4, 5;
  tiny.covariates.resize(2, 0);
  // too small to estimate a correlation structure and no file given
  CHECK_THROWS_AS(resolve_structure(tiny, Method::Potts, StructureSpec{}), std::invalid_argument);
  CHECK_THROWS_AS(resolve_structure(tiny, Method::Corrs, StructureSpec{}), std::invalid_argument);
  StructureSpec wrong;
  wrong.source = StructureSpec::Source::MatrixFile;
  wrong.path = "whatever.csv";
  CHECK_THROWS_AS(resolve_structure(tiny, Method::Potts, wrong), std::invalid_argument);
}

TEST_CASE("cli end to end: simulate, fit, evaluate, diagnose") {
  REQUIRE_FALSE(medgmm_bin().empty());
  const fs::path dir = temp_dir("cli");

  write_text_file((dir / "sim.json").string(), R"({
    "design": {"id": "cli_toy", "n": 80, "p": 12, "block_size": 4, "block_count": 3,
               "active_count": 3, "rho1_c0": 0.6, "rho1_c1": 0.0},
    "seed": 5, "replicates": 1})");
  REQUIRE(run_cli("simulate --config " + (dir / "sim.json").string() + " --out " +
                  (dir / "data").string()) == 0);
  CHECK(fs::exists(dir / "data" / "A.csv"));
  CHECK(fs::exists(dir / "data" / "M.csv"));
  CHECK(fs::exists(dir / "data" / "Y.csv"));
  CHECK(fs::exists(dir / "data" / "truth.csv"));
  CHECK(fs::exists(dir / "data" / "design.json"));

  // simulate then load: identical matrices
  const MediationDataset loaded = read_dataset_dir((dir / "data").string());
  CHECK(loaded.n() == 80);
  CHECK(loaded.p() == 12);
  {
    RngStream rng = RngStream(5).stream(0);
    const SimConfig sim = parse_sim_config(slurp(dir / "sim.json"));
    const SimBundle bundle = simulate_bundle(sim.design, rng);
    CHECK(loaded.mediators == bundle.data.mediators);
    CHECK(loaded.outcome == bundle.data.outcome);
  }

  write_text_file((dir / "fit.json").string(), R"({
    "method": "gmm", "iterations": 400, "burnin": 100, "thin": 3,
    "chains": 2, "seed": 11, "fdr": 0.1})");
  REQUIRE(run_cli("fit --config " + (dir / "fit.json").string() + " --data " +
                  (dir / "data").string() + " --out " + (dir / "fit1").string()) == 0);
  for (const char* f : {"pips.csv", "effects.csv", "psrf.csv", "summary.json",
                        "trace_gamma_chain0.csv", "trace_gamma_chain1.csv",
                        "trace_scalars_chain0.csv", "timings.txt"})
    CHECK(fs::exists(dir / "fit1" / f));

  // output files carry the provenance comment
  CHECK(slurp(dir / "fit1" / "pips.csv").substr(0, 8) == "# medgmm");

  // same config and seed: identical deterministic outputs
  REQUIRE(run_cli("fit --config " + (dir / "fit.json").string() + " --data " +
                  (dir / "data").string() + " --out " + (dir / "fit2").string()) == 0);
  CHECK(slurp(dir / "fit1" / "pips.csv") == slurp(dir / "fit2" / "pips.csv"));
  CHECK(slurp(dir / "fit1" / "effects.csv") == slurp(dir / "fit2" / "effects.csv"));

  REQUIRE(run_cli("evaluate --report " + (dir / "fit1").string() + " --truth " +
                  (dir / "data" / "truth.csv").string() + " --out " +
                  (dir / "metrics.csv").string()) == 0);
  const std::string metrics = slurp(dir / "metrics.csv");
  CHECK(metrics.find("tpr_at_fdr") != std::string::npos);
  CHECK(metrics.find("mse_null") != std::string::npos);

  REQUIRE(run_cli("diagnose --trace " + (dir / "fit1").string() + " --out " +
                  (dir / "psrf_diag.csv").string()) == 0);
  CHECK(fs::exists(dir / "psrf_diag.csv"));

  // potts on the same data via the flag overrides
  REQUIRE(run_cli("fit --data " + (dir / "data").string() + " --method potts --seed 3 " +
                  "--iterations 300 --burnin 100 --thin 2 --chains 1 --out " +
                  (dir / "fit3").string()) == 0);
  CHECK(fs::exists(dir / "fit3" / "pips.csv"));

  fs::remove_all(dir);
}

TEST_CASE("cli validation failures exit with code 2") {
  REQUIRE_FALSE(medgmm_bin().empty());
  const fs::path dir = temp_dir("clierr");

  // zero replicates
  write_text_file((dir / "bad_sim.json").string(), R"({"replicates": 0})");
  CHECK(run_cli("simulate --config " + (dir / "bad_sim.json").string() + " --out " +
                (dir / "x").string()) == 2);

  // missing dataset directory
  CHECK(run_cli("fit --data " + (dir / "nothing").string() + " --method gmm --out " +
                (dir / "y").string()) == 2);

  // diagnose with a single chain
  write_text_file((dir / "sim.json").string(), R"({
    "design": {"id": "t", "n": 40, "p": 6, "block_size": 3, "block_count": 2,
               "active_count": 2}, "seed": 1})");
  REQUIRE(run_cli("simulate --config " + (dir / "sim.json").string() + " --out " +
                  (dir / "data").string()) == 0);
  REQUIRE(run_cli("fit --data " + (dir / "data").string() +
                  " --method gmm --chains 1 --iterations 200 --burnin 50 --out " +
                  (dir / "fit1").string()) == 0);
  CHECK(run_cli("diagnose --trace " + (dir / "fit1").string()) == 2);

  // evaluate with mismatched truth
  write_text_file((dir / "short_truth.csv").string(), "mediator,label,alpha_a,beta_m\nM0001,4,0,0\n");
  CHECK(run_cli("evaluate --report " + (dir / "fit1").string() + " --truth " +
                (dir / "short_truth.csv").string()) == 2);

  fs::remove_all(dir);
}

TEST_CASE("grid cli writes results, summary and timings") {
  REQUIRE_FALSE(medgmm_bin().empty());
  const fs::path dir = temp_dir("grid");
  write_text_file((dir / "grid.json").string(), R"({
    "designs": [{"id": "toy", "n": 60, "p": 10, "block_size": 5, "block_count": 2,
                 "active_count": 2, "rho1_c0": 0.6, "rho1_c1": 0.0}],
    "methods": ["gmm"], "replicates": 2, "seed": 4,
    "fit": {"iterations": 300, "burnin": 100, "thin": 2}})");
  REQUIRE(run_cli("grid --config " + (dir / "grid.json").string() + " --out " +
                  (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "results.csv"));
  CHECK(fs::exists(dir / "out" / "summary.csv"));
  CHECK(fs::exists(dir / "out" / "timings.csv"));

  // byte-identical reruns under the same seed (timings excluded by design)
  REQUIRE(run_cli("grid --config " + (dir / "grid.json").string() + " --out " +
                  (dir / "out2").string()) == 0);
  CHECK(slurp(dir / "out" / "results.csv") == slurp(dir / "out2" / "results.csv"));
  CHECK(slurp(dir / "out" / "summary.csv") == slurp(dir / "out2" / "summary.csv"));
  fs::remove_all(dir);
}
