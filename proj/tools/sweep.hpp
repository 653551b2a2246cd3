#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "potkit/apps.hpp"
#include "potkit/types.hpp"

namespace potkit::cli {

enum class ExperimentKind {
  ToyPairs,
  ToyMass,
  ToyEps,
  ImageHist,
  ColorTransfer,
  DomainAdaptation,
};

enum class MethodSel { Qpot, Epot, Both };

struct SweepConfig {
  ExperimentKind experiment = ExperimentKind::ToyEps;
  std::vector<double> lambdas{0.7};
  // Base-10 exponent grid: eps = 10^e for e = start, start+step, ..., stop.
  double eps_start = -0.5;
  double eps_stop = -6.0;
  double eps_step = -0.5;
  // Explicit epsilon values; when nonempty they replace the exponent grid.
  std::vector<double> eps_values;
  MethodSel method = MethodSel::Both;
  std::uint64_t seed = 42;
  double threshold = 1e-10;
  std::string output_dir = ".";
  bool dump_plans = false;
  CostKind cost = CostKind::SquaredEuclidean;
  std::string source_image;
  std::string target_image;
  std::size_t bins_per_axis = 32;
  std::size_t samples = 100000;
  std::size_t bins = 100;
  double kkt_tolerance = 1e-9;
  long qpot_max_iterations = 50000;
  long epot_max_sweeps = 20000;
  bool deterministic_timing = false;  // write wall_ms as 0 for byte-stable CSVs
  std::size_t threads = 0;            // 0: POTKIT_THREADS or hardware default
};

std::string experiment_name(ExperimentKind kind);

// Expand the exponent grid (or the explicit value list) into epsilon values
// with their exponent labels.
struct EpsPoint {
  double value;
  std::string label;  // exponent text used in file names
};
std::vector<EpsPoint> epsilon_grid(const SweepConfig& config);

// Run the configured experiment over (lambda, eps, method); writes
// <experiment>.csv, one PGM heatmap per grid point, transferred images for
// color-transfer, an accuracy CSV for domain-adaptation, and optional binary
// plan dumps. Returns nonzero only on I/O failure.
int run_sweep(const SweepConfig& config);

// Binary PGM, one pixel per entry: 255 (white) below the threshold, 0 (black)
// otherwise. Returns nonzero on I/O failure.
int emit_heatmap(const TransportPlan& plan, double threshold, const std::string& path);

// RFC 4180 field quoting; only quotes when the field needs it.
std::string csv_quote(const std::string& field);

// Shortest round-trip decimal form, '.' separator, locale-independent.
std::string format_double(double v);

// Dense little-endian plan dump: u64 n, then n*n f64 row-major.
void dump_plan(const TransportPlan& plan, const std::string& path);
TransportPlan load_plan(const std::string& path);

}  // namespace potkit::cli
