#include "sweep.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "potkit/epot.hpp"
#include "potkit/metrics.hpp"
#include "potkit/qpot.hpp"
#include "potkit/rng.hpp"

namespace potkit::cli {

namespace fs = std::filesystem;

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::ToyPairs: return "toy-pairs";
    case ExperimentKind::ToyMass: return "toy-mass";
    case ExperimentKind::ToyEps: return "toy-eps";
    case ExperimentKind::ImageHist: return "image-hist";
    case ExperimentKind::ColorTransfer: return "color-transfer";
    case ExperimentKind::DomainAdaptation: return "domain-adaptation";
  }
  return "?";
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::vector<EpsPoint> epsilon_grid(const SweepConfig& config) {
  std::vector<EpsPoint> grid;
  if (!config.eps_values.empty()) {
    for (double v : config.eps_values) {
      if (!(v > 0.0)) throw ParameterError("epsilon values must be positive");
      grid.push_back({v, format_double(std::log10(v))});
    }
    return grid;
  }
  const double span = config.eps_stop - config.eps_start;
  if (span != 0.0 && (config.eps_step == 0.0 || (span > 0.0) != (config.eps_step > 0.0))) {
    throw ParameterError("epsilon grid: step sign must match start->stop direction");
  }
  if (span == 0.0) {
    grid.push_back({std::pow(10.0, config.eps_start), format_double(config.eps_start)});
    return grid;
  }
  const double dir = config.eps_step > 0.0 ? 1.0 : -1.0;
  for (double e = config.eps_start; (config.eps_stop - e) * dir >= -1e-9;
       e += config.eps_step) {
    grid.push_back({std::pow(10.0, e), format_double(e)});
  }
  return grid;
}

int emit_heatmap(const TransportPlan& plan, double threshold, const std::string& path) {
  if (plan.size() == 0) throw ParameterError("emit_heatmap: empty plan");
  GrayImage img;
  img.width = plan.size();
  img.height = plan.size();
  img.pixels.resize(plan.entries.data.size());
  for (std::size_t k = 0; k < img.pixels.size(); ++k) {
    img.pixels[k] = std::abs(plan.entries.data[k]) < threshold ? 255 : 0;
  }
  try {
    write_pgm(img, path);
  } catch (const IoError&) {
    return 1;
  }
  return 0;
}

void dump_plan(const TransportPlan& plan, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("dump_plan: cannot open " + path);
  const std::uint64_t n = plan.size();
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(plan.entries.data.data()),
            static_cast<std::streamsize>(8 * plan.entries.data.size()));
  if (!out) throw IoError("dump_plan: write failed");
}

TransportPlan load_plan(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_plan: cannot open " + path);
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  TransportPlan plan;
  plan.entries = SquareMatrix(static_cast<std::size_t>(n));
  in.read(reinterpret_cast<char*>(plan.entries.data.data()),
          static_cast<std::streamsize>(8 * plan.entries.data.size()));
  if (!in) throw IoError("load_plan: truncated file");
  return plan;
}

namespace {

struct GridPoint {
  std::string tag;       // CSV experiment column
  std::string file_tag;  // filename-safe prefix
  std::size_t dataset = 0;
  double lambda = 0.0;
  EpsPoint eps;
  Method method = Method::Qpot;
};

struct PointOutcome {
  bool failed = false;
  std::string error;
  bool has_plan = false;
  TransportPlan plan;
  double sparsity = 0.0;
  double objective = 0.0;
  double max_violation = 0.0;
  bool has_gap = false;
  double duality_gap = 0.0;
  long iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
  bool has_accuracy = false;
  double accuracy = 0.0;
  bool degenerate_labels = false;
  bool has_image = false;
  RgbImage transferred;
};

struct ToyDataset {
  std::string label;  // e.g. "MG-G"
  HistogramPair pair;
  CostMatrix cost;
};

const char* method_name(Method m) { return m == Method::Qpot ? "qpot" : "epot"; }

SolverConfig solver_for(const SweepConfig& config, Method method) {
  SolverConfig sc;
  sc.kkt_tolerance = config.kkt_tolerance;
  sc.max_iterations =
      method == Method::Qpot ? config.qpot_max_iterations : config.epot_max_sweeps;
  return sc;
}

PointOutcome solve_histogram_point(const MassVector& r, const MassVector& c,
                                   const CostMatrix& cost, const GridPoint& pt,
                                   const SweepConfig& config) {
  PointOutcome out;
  const double s = lambda_to_mass(pt.lambda, r, c);
  const Regularizer reg =
      pt.method == Method::Qpot ? Regularizer::Quadratic : Regularizer::Entropic;
  PotProblem problem(r, c, cost, s, pt.eps.value, reg);
  const SolverConfig sc = solver_for(config, pt.method);
  if (pt.method == Method::Qpot) {
    auto [plan, cert] = solve_qpot(problem, sc);
    out.plan = std::move(plan);
    out.objective = cert.primal_value;
    out.duality_gap = cert.primal_value - cert.dual_value;
    out.has_gap = true;
  } else {
    out.plan = solve_epot(problem, sc);
    out.objective = objective_epot(problem, out.plan);
  }
  out.has_plan = true;
  out.sparsity = sparsity(out.plan, config.threshold);
  out.max_violation = check_feasibility(problem, out.plan, 0.0).max_violation();
  out.iterations = out.plan.iterations;
  out.converged = out.plan.converged;
  return out;
}

std::size_t resolve_threads(const SweepConfig& config) {
  if (config.threads > 0) return config.threads;
  if (const char* env = std::getenv("POTKIT_THREADS")) {
    const long v = std::atol(env);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

std::string csv_bool(bool b) { return b ? "true" : "false"; }

}  // namespace

int run_sweep(const SweepConfig& config) {
  try {
    fs::create_directories(config.output_dir);

    const std::vector<EpsPoint> eps_grid = epsilon_grid(config);
    std::vector<Method> methods;
    if (config.method == MethodSel::Qpot || config.method == MethodSel::Both) {
      methods.push_back(Method::Qpot);
    }
    if (config.method == MethodSel::Epot || config.method == MethodSel::Both) {
      methods.push_back(Method::Epot);
    }
    for (double l : config.lambdas) {
      if (!(l >= 0.0 && l <= 1.0)) throw ParameterError("lambda values must lie in [0, 1]");
    }

    const std::string exp_name = experiment_name(config.experiment);

    // Shared per-experiment inputs, built once up front.
    std::vector<ToyDataset> toys;
    MassVector image_r(std::vector<double>{1.0}), image_c(std::vector<double>{1.0});
    CostMatrix image_cost(SquareMatrix(1));
    RgbImage ct_source, ct_target;
    std::uint64_t da_source_seed = 0, da_target_seed = 0, da_kmeans_seed = 0;

    switch (config.experiment) {
      case ExperimentKind::ToyPairs:
      case ExperimentKind::ToyMass:
      case ExperimentKind::ToyEps: {
        std::vector<std::pair<DistributionSpec, DistributionSpec>> pairs;
        if (config.experiment == ExperimentKind::ToyPairs) {
          pairs = {{DistributionSpec::mixed_gaussian(), DistributionSpec::gamma()},
                   {DistributionSpec::mixed_gaussian(), DistributionSpec::beta_dist()},
                   {DistributionSpec::poisson(), DistributionSpec::beta_dist()},
                   {DistributionSpec::gamma(), DistributionSpec::binomial()}};
        } else if (config.experiment == ExperimentKind::ToyMass) {
          pairs = {{DistributionSpec::binomial(), DistributionSpec::mixed_gaussian()}};
        } else {
          pairs = {{DistributionSpec::poisson(), DistributionSpec::beta_dist()}};
        }
        for (auto& [a, b] : pairs) {
          a.sample_count = b.sample_count = config.samples;
          a.bin_count = b.bin_count = config.bins;
          HistogramPair hp = paired_histograms(a, b, config.seed);
          std::vector<std::vector<double>> pos;
          pos.reserve(hp.bin_centers.size());
          for (double x : hp.bin_centers) pos.push_back({x});
          CostMatrix cost = cost_matrix_from_positions(pos, pos, true);
          toys.push_back({a.tag() + "-" + b.tag(), std::move(hp), std::move(cost)});
        }
        break;
      }
      case ExperimentKind::ImageHist: {
        if (config.source_image.empty() || config.target_image.empty()) {
          throw ParameterError("image-hist: --source and --target PGM images required");
        }
        const ImageHistogram a =
            image_to_histogram(to_field(read_pgm(config.source_image)), 10);
        const ImageHistogram b =
            image_to_histogram(to_field(read_pgm(config.target_image)), 10);
        image_r = a.mass;
        image_c = b.mass;
        image_cost = cost_matrix_from_positions(a.positions, b.positions, true);
        break;
      }
      case ExperimentKind::ColorTransfer: {
        if (config.source_image.empty() || config.target_image.empty()) {
          throw ParameterError("color-transfer: --source and --target PPM images required");
        }
        ct_source = read_ppm(config.source_image);
        ct_target = read_ppm(config.target_image);
        break;
      }
      case ExperimentKind::DomainAdaptation: {
        SplitMix64 sm(config.seed);
        da_source_seed = sm.next();
        da_target_seed = sm.next();
        da_kmeans_seed = sm.next();
        break;
      }
    }

    // Grid in deterministic order: dataset, lambda, epsilon, method.
    std::vector<GridPoint> points;
    const std::size_t datasets = toys.empty() ? 1 : toys.size();
    for (std::size_t d = 0; d < datasets; ++d) {
      std::string tag = exp_name;
      std::string file_tag = exp_name;
      if (!toys.empty() && config.experiment == ExperimentKind::ToyPairs) {
        tag += ":" + toys[d].label;
        file_tag += "_" + toys[d].label;
      }
      for (double lambda : config.lambdas) {
        for (const EpsPoint& ep : eps_grid) {
          for (Method m : methods) {
            points.push_back({tag, file_tag, d, lambda, ep, m});
          }
        }
      }
    }

    std::vector<PointOutcome> outcomes(points.size());
    std::atomic<std::size_t> cursor{0};
    const std::size_t pool = std::min(resolve_threads(config), std::max<std::size_t>(points.size(), 1));
    auto worker = [&]() {
      for (;;) {
        const std::size_t k = cursor.fetch_add(1);
        if (k >= points.size()) break;
        const GridPoint& pt = points[k];
        PointOutcome& out = outcomes[k];
        const auto t0 = std::chrono::steady_clock::now();
        try {
          switch (config.experiment) {
            case ExperimentKind::ToyPairs:
            case ExperimentKind::ToyMass:
            case ExperimentKind::ToyEps: {
              const ToyDataset& ds = toys[pt.dataset];
              out = solve_histogram_point(ds.pair.r, ds.pair.c, ds.cost, pt, config);
              break;
            }
            case ExperimentKind::ImageHist: {
              out = solve_histogram_point(image_r, image_c, image_cost, pt, config);
              break;
            }
            case ExperimentKind::ColorTransfer: {
              ColorTransferResult res =
                  color_transfer(ct_source, ct_target, pt.lambda, pt.eps.value, pt.method,
                                 config.bins_per_axis, solver_for(config, pt.method));
              out.plan = std::move(res.plan);
              out.has_plan = true;
              out.sparsity = sparsity(out.plan, config.threshold);
              out.objective = res.objective;
              out.max_violation = res.max_violation;
              if (res.certificate) {
                out.duality_gap = res.certificate->primal_value - res.certificate->dual_value;
                out.has_gap = true;
              }
              out.iterations = out.plan.iterations;
              out.converged = out.plan.converged;
              out.transferred = std::move(res.output_image);
              out.has_image = true;
              break;
            }
            case ExperimentKind::DomainAdaptation: {
              AdaptationConfig ac;
              ac.lambda = pt.lambda;
              ac.epsilon = pt.eps.value;
              ac.method = pt.method;
              ac.source_seed = da_source_seed;
              ac.target_seed = da_target_seed;
              ac.kmeans_seed = da_kmeans_seed;
              ac.cost = config.cost;
              ac.sparsity_threshold = config.threshold;
              ac.solver = solver_for(config, pt.method);
              AdaptationResult res = domain_adaptation_experiment(ac);
              out.plan = std::move(res.plan);
              out.has_plan = true;
              out.sparsity = res.sparsity;
              out.objective = res.objective;
              out.max_violation = res.max_violation;
              if (res.certificate) {
                out.duality_gap = res.certificate->primal_value - res.certificate->dual_value;
                out.has_gap = true;
              }
              out.iterations = out.plan.iterations;
              out.converged = out.plan.converged;
              out.has_accuracy = true;
              out.accuracy = res.accuracy;
              out.degenerate_labels = res.degenerate_labels;
              break;
            }
          }
        } catch (const std::exception& e) {
          out.failed = true;
          out.error = e.what();
          out.converged = false;
        }
        const auto t1 = std::chrono::steady_clock::now();
        out.wall_ms = config.deterministic_timing
                          ? 0.0
                          : std::chrono::duration<double, std::milli>(t1 - t0).count();
      }
    };
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    // Serialize outputs in grid order.
    const fs::path dir(config.output_dir);
    std::ofstream csv(dir / (exp_name + ".csv"), std::ios::binary);
    if (!csv) throw IoError("run_sweep: cannot write CSV");
    csv << "experiment,lambda,epsilon,method,sparsity,objective,"
           "feasibility_max_violation,duality_gap,iterations,converged,wall_ms,seed\n";

    std::ofstream acc_csv;
    if (config.experiment == ExperimentKind::DomainAdaptation) {
      acc_csv.open(dir / (exp_name + "_accuracy.csv"), std::ios::binary);
      if (!acc_csv) throw IoError("run_sweep: cannot write accuracy CSV");
      acc_csv << "experiment,lambda,epsilon,method,accuracy,degenerate_labels\n";
    }

    int status = 0;
    for (std::size_t k = 0; k < points.size(); ++k) {
      const GridPoint& pt = points[k];
      const PointOutcome& out = outcomes[k];
      csv << csv_quote(pt.tag) << ',' << format_double(pt.lambda) << ','
          << format_double(pt.eps.value) << ',' << method_name(pt.method) << ',';
      if (!out.failed) {
        csv << format_double(out.sparsity) << ',' << format_double(out.objective) << ','
            << format_double(out.max_violation) << ',';
        if (out.has_gap) csv << format_double(out.duality_gap);
        csv << ',' << out.iterations << ',' << csv_bool(out.converged) << ','
            << format_double(out.wall_ms) << ',' << config.seed << '\n';
      } else {
        csv << ",,,," << out.iterations << ",false," << format_double(out.wall_ms) << ','
            << config.seed << '\n';
        std::cerr << "[potkit] grid point failed: " << pt.tag << " lambda="
                  << pt.lambda << " eps=" << pt.eps.value << " (" << method_name(pt.method)
                  << "): " << out.error << "\n";
      }

      if (out.has_plan) {
        const std::string stem = pt.file_tag + "_" + method_name(pt.method) + "_l" +
                                 format_double(pt.lambda) + "_e" + pt.eps.label;
        status |= emit_heatmap(out.plan, config.threshold, (dir / (stem + ".pgm")).string());
        if (config.dump_plans) dump_plan(out.plan, (dir / (stem + ".bin")).string());
        if (out.has_image) write_ppm(out.transferred, (dir / (stem + ".ppm")).string());
      }
      if (out.has_accuracy && acc_csv) {
        acc_csv << csv_quote(pt.tag) << ',' << format_double(pt.lambda) << ','
                << format_double(pt.eps.value) << ',' << method_name(pt.method) << ','
                << format_double(out.accuracy) << ',' << csv_bool(out.degenerate_labels)
                << '\n';
      }
    }
    if (!csv) throw IoError("run_sweep: CSV write failed");
    return status;
  } catch (const IoError& e) {
    std::cerr << "[potkit] I/O error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace potkit::cli
