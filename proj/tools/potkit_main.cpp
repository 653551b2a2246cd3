#include <cmath>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sweep.hpp"

namespace {

using potkit::CostKind;
using potkit::cli::ExperimentKind;
using potkit::cli::MethodSel;
using potkit::cli::SweepConfig;

void add_common_options(CLI::App* cmd, SweepConfig& config, std::string& method,
                        std::string& cost) {
  cmd->set_config("--config")->configurable(false);
  cmd->add_option("--lambdas", config.lambdas, "Transported-mass fractions in [0,1]")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--eps-start", config.eps_start, "Base-10 exponent of the first epsilon")
      ->capture_default_str();
  cmd->add_option("--eps-stop", config.eps_stop, "Base-10 exponent of the last epsilon")
      ->capture_default_str();
  cmd->add_option("--eps-step", config.eps_step, "Base-10 exponent step")
      ->capture_default_str();
  cmd->add_option("--eps", config.eps_values,
                  "Explicit epsilon values (overrides the exponent grid)")
      ->delimiter(',');
  cmd->add_option("--method", method, "qpot | epot | both")->capture_default_str();
  cmd->add_option("--seed", config.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--threshold", config.threshold, "Sparsity threshold")
      ->capture_default_str();
  cmd->add_option("--out", config.output_dir, "Output directory")->capture_default_str();
  cmd->add_flag("--dump-plans", config.dump_plans,
                "Also write binary plan dumps next to the heatmaps");
  cmd->add_option("--cost", cost, "euclidean | sqeuclidean (domain adaptation)")
      ->capture_default_str();
  cmd->add_option("--kkt-tol", config.kkt_tolerance, "Solver feasibility/KKT tolerance")
      ->capture_default_str();
  cmd->add_option("--qpot-max-iters", config.qpot_max_iterations,
                  "Iteration cap for the quadratic solver")
      ->capture_default_str();
  cmd->add_option("--epot-max-sweeps", config.epot_max_sweeps,
                  "Sweep cap for the entropic solver")
      ->capture_default_str();
  cmd->add_option("--threads", config.threads,
                  "Worker pool size (0: POTKIT_THREADS or hardware)")
      ->capture_default_str();
  cmd->add_flag("--deterministic-timing", config.deterministic_timing,
                "Write wall_ms as 0 so CSV output is byte-stable");
}

bool parse_method(const std::string& text, MethodSel& out) {
  if (text == "qpot") out = MethodSel::Qpot;
  else if (text == "epot") out = MethodSel::Epot;
  else if (text == "both") out = MethodSel::Both;
  else return false;
  return true;
}

bool parse_cost(const std::string& text, CostKind& out) {
  if (text == "euclidean") out = CostKind::Euclidean;
  else if (text == "sqeuclidean") out = CostKind::SquaredEuclidean;
  else return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"potkit: partial optimal transport sweeps (quadratic vs entropic)"};
  app.require_subcommand(1);

  struct Sub {
    SweepConfig config;
    std::string method = "both";
    std::string cost = "sqeuclidean";
    CLI::App* cmd = nullptr;
  };
  Sub toy_pairs, toy_mass, toy_eps, image_hist, color_transfer, domain_adaptation;

  toy_pairs.config.experiment = ExperimentKind::ToyPairs;
  toy_pairs.config.lambdas = {0.7};
  toy_pairs.config.eps_start = toy_pairs.config.eps_stop = -6.0;
  toy_pairs.config.eps_step = -1.0;
  toy_pairs.cmd = app.add_subcommand(
      "toy-pairs", "Sparsity across distribution pairs (MG-G, MG-Be, P-Be, G-Bi)");

  toy_mass.config.experiment = ExperimentKind::ToyMass;
  toy_mass.config.lambdas = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
  toy_mass.config.eps_start = toy_mass.config.eps_stop = -6.0;
  toy_mass.config.eps_step = -1.0;
  toy_mass.cmd = app.add_subcommand(
      "toy-mass", "Sparsity versus transported mass on Binomial vs MixedGaussian");

  toy_eps.config.experiment = ExperimentKind::ToyEps;
  toy_eps.config.lambdas = {0.7, 0.99};
  toy_eps.config.eps_start = -0.5;
  toy_eps.config.eps_stop = -6.0;
  toy_eps.config.eps_step = -0.5;
  toy_eps.cmd = app.add_subcommand(
      "toy-eps", "Sparsity versus regularizer strength on Poisson vs Beta");

  image_hist.config.experiment = ExperimentKind::ImageHist;
  image_hist.config.lambdas = {0.7};
  image_hist.config.eps_values = {2e-7};
  image_hist.cmd = app.add_subcommand(
      "image-hist", "Position-cost transport between two 32x32 grayscale images");

  color_transfer.config.experiment = ExperimentKind::ColorTransfer;
  color_transfer.config.lambdas = {0.7};
  color_transfer.config.eps_start = -0.2;
  color_transfer.config.eps_stop = -6.0;
  color_transfer.config.eps_step = -0.2;
  color_transfer.config.qpot_max_iterations = 6000;
  color_transfer.config.epot_max_sweeps = 3000;
  color_transfer.cmd = app.add_subcommand(
      "color-transfer", "UV-histogram transport and barycentric remap of a PPM pair");

  domain_adaptation.config.experiment = ExperimentKind::DomainAdaptation;
  domain_adaptation.config.lambdas = {0.7};
  domain_adaptation.config.eps_start = -0.3;
  domain_adaptation.config.eps_stop = -15.0;
  domain_adaptation.config.eps_step = -1.05;
  domain_adaptation.config.qpot_max_iterations = 20000;
  domain_adaptation.config.epot_max_sweeps = 5000;
  domain_adaptation.cmd = app.add_subcommand(
      "domain-adaptation", "Two-moons label propagation under a 50 degree shift");

  for (Sub* sub : {&toy_pairs, &toy_mass, &toy_eps, &image_hist, &color_transfer,
                   &domain_adaptation}) {
    add_common_options(sub->cmd, sub->config, sub->method, sub->cost);
  }
  for (Sub* sub : {&toy_pairs, &toy_mass, &toy_eps}) {
    sub->cmd->add_option("--samples", sub->config.samples, "Samples per distribution")
        ->capture_default_str();
    sub->cmd->add_option("--bins", sub->config.bins, "Histogram bins")
        ->capture_default_str();
  }
  for (Sub* sub : {&image_hist, &color_transfer}) {
    sub->cmd->add_option("--source", sub->config.source_image, "Source image path")
        ->required();
    sub->cmd->add_option("--target", sub->config.target_image, "Target image path")
        ->required();
  }
  color_transfer.cmd->add_option("--bins-per-axis", color_transfer.config.bins_per_axis,
                                 "UV histogram bins per axis")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  for (Sub* sub : {&toy_pairs, &toy_mass, &toy_eps, &image_hist, &color_transfer,
                   &domain_adaptation}) {
    if (!sub->cmd->parsed()) continue;
    if (!parse_method(sub->method, sub->config.method)) {
      std::cerr << "unknown --method: " << sub->method << "\n";
      return 2;
    }
    if (!parse_cost(sub->cost, sub->config.cost)) {
      std::cerr << "unknown --cost: " << sub->cost << "\n";
      return 2;
    }
    try {
      return potkit::cli::run_sweep(sub->config);
    } catch (const std::exception& e) {
      std::cerr << "potkit: " << e.what() << "\n";
      return 2;
    }
  }
  return 2;
}
