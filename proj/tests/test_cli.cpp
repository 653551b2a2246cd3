#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "potkit/metrics.hpp"
#include "sweep.hpp"
#include "testutil.hpp"

using namespace potkit;
using namespace potkit::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const char* tag) {
  fs::path dir = fs::temp_directory_path() / (std::string("potkit_cli_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> row;
    std::string field;
    for (char ch : line) {
      if (ch == ',') {
        row.push_back(field);
        field.clear();
      } else {
        field += ch;
      }
    }
    row.push_back(field);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_CASE("epsilon_grid expands fractional exponent steps inclusively") {
  SweepConfig cfg;
  cfg.eps_start = -0.2;
  cfg.eps_stop = -1.0;
  cfg.eps_step = -0.2;
  auto grid = epsilon_grid(cfg);
  REQUIRE(grid.size() == 5);
  CHECK(grid.front().value == doctest::Approx(std::pow(10.0, -0.2)));
  CHECK(grid.back().value == doctest::Approx(0.1));
  CHECK(grid.front().label == "-0.2");

  cfg.eps_step = 0.2;  // wrong direction
  CHECK_THROWS_AS(epsilon_grid(cfg), ParameterError);

  cfg.eps_values = {2e-7};
  auto explicit_grid = epsilon_grid(cfg);
  REQUIRE(explicit_grid.size() == 1);
  CHECK(explicit_grid[0].value == 2e-7);
}

TEST_CASE("csv quoting and float formatting are deterministic") {
  CHECK(csv_quote("plain") == "plain");
  CHECK(csv_quote("with,comma") == "\"with,comma\"");
  CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(format_double(0.7) == "0.7");
  CHECK(format_double(1e-10) == "1e-10");
  CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
}

TEST_CASE("emit_heatmap renders below-threshold entries white") {
  auto dir = fresh_dir("heatmap");
  auto zeros = test::plan_from(3, std::vector<double>(9, 0.0));
  REQUIRE(emit_heatmap(zeros, 1e-10, (dir / "w.pgm").string()) == 0);
  auto white = read_pgm((dir / "w.pgm").string());
  CHECK(white.width == 3);
  CHECK(white.height == 3);
  for (auto px : white.pixels) CHECK(px == 255);

  auto ones = test::plan_from(3, std::vector<double>(9, 1.0));
  REQUIRE(emit_heatmap(ones, 1e-10, (dir / "b.pgm").string()) == 0);
  auto black = read_pgm((dir / "b.pgm").string());
  for (auto px : black.pixels) CHECK(px == 0);

  CHECK_THROWS_AS(emit_heatmap(TransportPlan{}, 1e-10, (dir / "x.pgm").string()),
                  ParameterError);
}

TEST_CASE("plan dumps round-trip bit-exactly") {
  auto dir = fresh_dir("dump");
  Rng rng(3);
  TransportPlan plan;
  plan.entries = SquareMatrix(17);
  for (auto& v : plan.entries.data) v = rng.uniform01() * 1e-7;
  dump_plan(plan, (dir / "p.bin").string());
  auto back = load_plan((dir / "p.bin").string());
  CHECK(back.size() == 17);
  CHECK(back.entries.data == plan.entries.data);
}

TEST_CASE("run_sweep writes deterministic CSV rows and heatmaps") {
  auto dir = fresh_dir("sweep");
  SweepConfig cfg;
  cfg.experiment = ExperimentKind::ToyEps;
  cfg.lambdas = {0.0, 0.7};
  cfg.eps_start = -1.0;
  cfg.eps_stop = -2.0;
  cfg.eps_step = -1.0;
  cfg.samples = 2000;
  cfg.bins = 25;
  cfg.output_dir = (dir / "run1").string();
  cfg.dump_plans = true;
  cfg.deterministic_timing = true;
  REQUIRE(run_sweep(cfg) == 0);

  const auto csv = parse_csv(slurp(dir / "run1" / "toy-eps.csv"));
  REQUIRE(csv.size() == 9);  // header + 2 lambdas * 2 eps * 2 methods
  CHECK(csv[0][0] == "experiment");

  SUBCASE("lambda = 0 rows are the zero plan") {
    for (std::size_t k = 1; k < csv.size(); ++k) {
      if (csv[k][1] == "0") {
        CHECK(csv[k][4] == "1");  // sparsity
        CHECK(csv[k][5] == "0");  // objective
        CHECK(csv[k][9] == "true");
      }
    }
  }

  SUBCASE("CSV sparsity matches a recount from the dumped plan") {
    for (std::size_t k = 1; k < csv.size(); k += 3) {
      const std::string stem = std::string("toy-eps_") + csv[k][3] + "_l" + csv[k][1] +
                               "_e" + format_double(std::log10(std::stod(csv[k][2])));
      auto plan = load_plan((dir / "run1" / (stem + ".bin")).string());
      CHECK(format_double(sparsity(plan, cfg.threshold)) == csv[k][4]);
      auto hm = read_pgm((dir / "run1" / (stem + ".pgm")).string());
      CHECK(hm.width == plan.size());
      CHECK(hm.height == plan.size());
    }
  }

  SUBCASE("repeated runs are byte-identical") {
    SweepConfig cfg2 = cfg;
    cfg2.output_dir = (dir / "run2").string();
    REQUIRE(run_sweep(cfg2) == 0);
    CHECK(slurp(dir / "run1" / "toy-eps.csv") == slurp(dir / "run2" / "toy-eps.csv"));
  }
}

TEST_CASE("run_sweep honors the worker pool size") {
  auto dir = fresh_dir("pool");
  SweepConfig cfg;
  cfg.experiment = ExperimentKind::ToyEps;
  cfg.lambdas = {0.7};
  cfg.eps_start = -1.0;
  cfg.eps_stop = -1.5;
  cfg.eps_step = -0.5;
  cfg.samples = 1000;
  cfg.bins = 16;
  cfg.threads = 2;
  cfg.deterministic_timing = true;
  cfg.output_dir = (dir / "a").string();
  REQUIRE(run_sweep(cfg) == 0);
  cfg.threads = 1;
  cfg.output_dir = (dir / "b").string();
  REQUIRE(run_sweep(cfg) == 0);
  CHECK(slurp(dir / "a" / "toy-eps.csv") == slurp(dir / "b" / "toy-eps.csv"));
}
