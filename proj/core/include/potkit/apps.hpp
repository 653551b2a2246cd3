#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "potkit/data.hpp"
#include "potkit/epot.hpp"
#include "potkit/image.hpp"
#include "potkit/qpot.hpp"

namespace potkit {

enum class Method { Qpot, Epot };
enum class CostKind { SquaredEuclidean, Euclidean };

struct ColorTransferResult {
  RgbImage output_image;
  TransportPlan plan;
  double sparsity = 0.0;
  MassVector source_hist;
  MassVector target_hist;
  double objective = 0.0;
  double max_violation = 0.0;
  std::optional<DualCertificate> certificate;  // quadratic solves only
};

// Solve POT between the UV histograms of the two images and remap the source
// pixels by the barycentric displacement of their bin. Pixels whose bin row
// carries no mass keep their color; a non-converged solve still remaps.
ColorTransferResult color_transfer(const RgbImage& source, const RgbImage& target,
                                   double lambda, double epsilon, Method method,
                                   std::size_t bins_per_axis = 32,
                                   const SolverConfig& config = {});

// Target j takes the class with the largest plan mass in column j (ties go to
// the lower class id). Zero-mass columns inherit the label of the nearest
// labeled target point.
std::vector<int> propagate_labels(const TransportPlan& plan,
                                  const std::vector<int>& source_labels,
                                  const PointCloud& targets);

// Deterministic binary classifier: (K + ridge I) alpha = y with an RBF Gram
// matrix; prediction is the sign of the kernel expansion.
class KernelRidgeClassifier {
 public:
  static KernelRidgeClassifier train(const PointCloud& labeled, double rbf_width,
                                     double ridge);
  double decision(const std::array<double, 2>& x) const;
  int predict(const std::array<double, 2>& x) const {
    return decision(x) >= 0.0 ? 1 : 0;
  }

 private:
  std::vector<std::array<double, 2>> points_;
  std::vector<double> alpha_;
  double width_ = 1.0;
};

double median_pairwise_distance(const PointCloud& cloud);

struct AdaptationConfig {
  double lambda = 0.7;
  double epsilon = 1e-4;
  Method method = Method::Qpot;
  std::uint64_t source_seed = 1;
  std::uint64_t target_seed = 2;
  std::uint64_t kmeans_seed = 3;
  double rotation_degrees = 50.0;
  double noise = 0.1;
  std::size_t source_count = 300;
  std::size_t target_count = 400;
  std::size_t reduced_count = 300;
  CostKind cost = CostKind::SquaredEuclidean;
  double rbf_width = 0.0;  // 0: median pairwise distance heuristic
  double ridge = 1e-3;
  double sparsity_threshold = 1e-10;
  SolverConfig solver;
};

struct AdaptationResult {
  std::vector<int> propagated_labels;
  double accuracy = 0.0;
  TransportPlan plan;
  double sparsity = 0.0;
  bool degenerate_labels = false;  // all targets got one class
  double objective = 0.0;
  double max_violation = 0.0;
  std::optional<DualCertificate> certificate;  // quadratic solves only
};

// moons -> rotate -> k-means -> uniform masses -> normalized cost -> solve ->
// propagate -> train on the labeled target -> score on the source points.
AdaptationResult domain_adaptation_experiment(const AdaptationConfig& config);

// Pairwise cost between two clouds (squared Euclidean or Euclidean),
// max-normalized.
CostMatrix cloud_cost(const PointCloud& a, const PointCloud& b, CostKind kind);

}  // namespace potkit
