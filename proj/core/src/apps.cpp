#include "potkit/apps.hpp"

#include <algorithm>
#include <cmath>

#include "potkit/dense.hpp"
#include "potkit/metrics.hpp"

namespace potkit {

namespace {

std::pair<TransportPlan, std::optional<DualCertificate>> solve_with(
    const PotProblem& problem, Method method, const SolverConfig& config) {
  if (method == Method::Qpot) {
    auto [plan, cert] = solve_qpot(problem, config);
    return {std::move(plan), std::move(cert)};
  }
  return {solve_epot(problem, config), std::nullopt};
}

double plan_objective(const PotProblem& problem, const TransportPlan& plan) {
  return problem.regularizer() == Regularizer::Quadratic
             ? objective_qpot(problem, plan)
             : objective_epot(problem, plan);
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
}

}  // namespace

ColorTransferResult color_transfer(const RgbImage& source, const RgbImage& target,
                                   double lambda, double epsilon, Method method,
                                   std::size_t bins_per_axis,
                                   const SolverConfig& config) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ParameterError("color_transfer: lambda must lie in [0, 1]");
  }
  if (!(epsilon > 0.0)) throw ParameterError("color_transfer: epsilon must be > 0");

  const LuvHistogram src = rgb_to_luv_histogram(source, bins_per_axis);
  const LuvHistogram tgt = rgb_to_luv_histogram(target, bins_per_axis);
  CostMatrix cost = cost_matrix_from_positions(src.bin_centers, tgt.bin_centers, false);
  const double s = lambda_to_mass(lambda, src.mass, tgt.mass);
  const Regularizer reg =
      method == Method::Qpot ? Regularizer::Quadratic : Regularizer::Entropic;
  PotProblem problem(src.mass, tgt.mass, std::move(cost), s, epsilon, reg);
  auto [plan, cert] = solve_with(problem, method, config);

  // Barycentric displacement per source bin: rows with mass move to the
  // plan-weighted average of target bin centers; empty rows stay put.
  const std::size_t cells = bins_per_axis * bins_per_axis;
  std::vector<std::array<double, 2>> shift(cells, {0.0, 0.0});
  for (std::size_t i = 0; i < cells; ++i) {
    const double* row = plan.entries.row(i);
    double mass = 0.0, su = 0.0, sv = 0.0;
    for (std::size_t j = 0; j < cells; ++j) {
      mass += row[j];
      su += row[j] * tgt.bin_centers[j][0];
      sv += row[j] * tgt.bin_centers[j][1];
    }
    if (mass > 0.0) {
      shift[i] = {su / mass - src.bin_centers[i][0], sv / mass - src.bin_centers[i][1]};
    }
  }

  ColorTransferResult result{source, std::move(plan), 0.0, src.mass, tgt.mass,
                             0.0,    0.0,             std::move(cert)};
  result.sparsity = sparsity(result.plan, 1e-10);
  result.objective = plan_objective(problem, result.plan);
  result.max_violation = check_feasibility(problem, result.plan, 0.0).max_violation();
  const auto bins = static_cast<long>(bins_per_axis);
  for (std::size_t k = 0; k < source.width * source.height; ++k) {
    const std::uint8_t* px = source.pixels.data() + 3 * k;
    const double l = static_cast<double>(px[0]) + px[1] + px[2];
    double u = 1.0 / 3.0, v = 1.0 / 3.0;
    if (l > 0.0) {
      u = px[1] / l;
      v = px[2] / l;
    }
    const auto ub = std::clamp<long>(static_cast<long>(u * static_cast<double>(bins)), 0, bins - 1);
    const auto vb = std::clamp<long>(static_cast<long>(v * static_cast<double>(bins)), 0, bins - 1);
    const auto& d = shift[static_cast<std::size_t>(ub * bins + vb)];
    if (d[0] == 0.0 && d[1] == 0.0) continue;  // untouched bin: keep the pixel

    double u2 = std::clamp(u + d[0], 0.0, 1.0);
    double v2 = std::clamp(v + d[1], 0.0, 1.0);
    const double uv = u2 + v2;
    if (uv > 1.0) {
      u2 /= uv;
      v2 /= uv;
    }
    std::uint8_t* out = result.output_image.pixels.data() + 3 * k;
    const double g = u2 * l;
    const double b = v2 * l;
    out[1] = quantize(g);
    out[2] = quantize(b);
    out[0] = quantize(l - g - b);
  }
  return result;
}

std::vector<int> propagate_labels(const TransportPlan& plan,
                                  const std::vector<int>& source_labels,
                                  const PointCloud& targets) {
  const std::size_t n = plan.size();
  if (source_labels.size() != n) {
    throw ShapeError("propagate_labels: one label per plan row required");
  }
  if (targets.points.size() != n) {
    throw ShapeError("propagate_labels: one target point per plan column required");
  }
  if (!(plan.total_mass() > 0.0)) {
    throw DegeneratePlanError("propagate_labels: all-zero plan");
  }
  int max_label = 0;
  for (int l : source_labels) {
    if (l < 0) throw ParameterError("propagate_labels: labels must be >= 0");
    max_label = std::max(max_label, l);
  }
  const std::size_t classes = static_cast<std::size_t>(max_label) + 1;

  std::vector<int> labels(n, -1);
  std::vector<double> score(classes);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(score.begin(), score.end(), 0.0);
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = plan.entries(i, j);
      score[static_cast<std::size_t>(source_labels[i])] += x;
      mass += x;
    }
    if (mass <= 0.0) continue;  // resolved by nearest labeled neighbor below
    std::size_t best = 0;
    for (std::size_t k = 1; k < classes; ++k) {
      if (score[k] > score[best]) best = k;  // ties keep the lower class id
    }
    labels[j] = static_cast<int>(best);
  }

  for (std::size_t j = 0; j < n; ++j) {
    if (labels[j] >= 0) continue;
    double best_d = std::numeric_limits<double>::infinity();
    int best_label = 0;
    for (std::size_t q = 0; q < n; ++q) {
      if (labels[q] < 0) continue;
      const double dx = targets.points[j][0] - targets.points[q][0];
      const double dy = targets.points[j][1] - targets.points[q][1];
      const double d = dx * dx + dy * dy;
      if (d < best_d) {
        best_d = d;
        best_label = labels[q];
      }
    }
    labels[j] = best_label;
  }
  return labels;
}

KernelRidgeClassifier KernelRidgeClassifier::train(const PointCloud& labeled,
                                                   double rbf_width, double ridge) {
  const std::size_t n = labeled.points.size();
  if (labeled.labels.size() != n || n == 0) {
    throw ShapeError("train: labeled cloud required");
  }
  if (!(ridge > 0.0) || !(rbf_width > 0.0)) {
    throw ParameterError("train: rbf_width and ridge must be positive");
  }
  bool has0 = false, has1 = false;
  for (int l : labeled.labels) {
    if (l == 0) has0 = true;
    else if (l == 1) has1 = true;
    else throw ParameterError("train: binary labels {0, 1} required");
  }
  if (!has0 || !has1) {
    throw ParameterError("train: need at least one point of each class");
  }

  const double inv2w2 = 1.0 / (2.0 * rbf_width * rbf_width);
  std::vector<double> k(n * n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = labeled.labels[i] == 1 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = labeled.points[i][0] - labeled.points[j][0];
      const double dy = labeled.points[i][1] - labeled.points[j][1];
      k[i * n + j] = std::exp(-(dx * dx + dy * dy) * inv2w2);
    }
    k[i * n + i] += ridge;
  }
  auto alpha = solve_dense(k, y, n);
  if (!alpha) throw InternalError("train: ridge system unexpectedly singular");

  // Residual audit of the training solve.
  double resid = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = -y[i] + ridge * (*alpha)[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = labeled.points[i][0] - labeled.points[j][0];
      const double dy = labeled.points[i][1] - labeled.points[j][1];
      acc += std::exp(-(dx * dx + dy * dy) * inv2w2) * (*alpha)[j];
    }
    resid = std::max(resid, std::abs(acc));
  }
  if (resid > 1e-8) throw InternalError("train: solve residual above 1e-8");

  KernelRidgeClassifier clf;
  clf.points_ = labeled.points;
  clf.alpha_ = std::move(*alpha);
  clf.width_ = rbf_width;
  return clf;
}

double KernelRidgeClassifier::decision(const std::array<double, 2>& x) const {
  const double inv2w2 = 1.0 / (2.0 * width_ * width_);
  double acc = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double dx = points_[i][0] - x[0];
    const double dy = points_[i][1] - x[1];
    acc += alpha_[i] * std::exp(-(dx * dx + dy * dy) * inv2w2);
  }
  return acc;
}

double median_pairwise_distance(const PointCloud& cloud) {
  const std::size_t n = cloud.points.size();
  if (n < 2) throw ParameterError("median_pairwise_distance: need >= 2 points");
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = cloud.points[i][0] - cloud.points[j][0];
      const double dy = cloud.points[i][1] - cloud.points[j][1];
      d.push_back(std::sqrt(dx * dx + dy * dy));
    }
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

CostMatrix cloud_cost(const PointCloud& a, const PointCloud& b, CostKind kind) {
  CostMatrix sq = cost_matrix_from_positions(as_positions(a), as_positions(b), false);
  SquareMatrix m = sq.entries();
  if (kind == CostKind::Euclidean) {
    for (double& v : m.data) v = std::sqrt(v);
  }
  double mx = 0.0;
  for (double v : m.data) mx = std::max(mx, v);
  if (mx > 0.0) {
    for (double& v : m.data) v /= mx;
  }
  return CostMatrix(std::move(m), mx > 0.0);
}

AdaptationResult domain_adaptation_experiment(const AdaptationConfig& config) {
  PointCloud source = make_moons(config.source_count, config.noise, config.source_seed);
  PointCloud target_raw = make_moons(config.target_count, config.noise, config.target_seed);
  PointCloud target =
      kmeans_reduce(rotate_cloud(target_raw, config.rotation_degrees),
                    config.reduced_count, config.kmeans_seed);

  const std::size_t n = config.source_count;
  if (config.reduced_count != n) {
    throw ParameterError("domain_adaptation_experiment: source and reduced target sizes must match");
  }
  MassVector r(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  MassVector c(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  CostMatrix cost = cloud_cost(source, target, config.cost);
  const double s = lambda_to_mass(config.lambda, r, c);
  const Regularizer reg =
      config.method == Method::Qpot ? Regularizer::Quadratic : Regularizer::Entropic;
  PotProblem problem(std::move(r), std::move(c), std::move(cost), s, config.epsilon, reg);

  AdaptationResult result;
  auto [plan, cert] = solve_with(problem, config.method, config.solver);
  result.plan = std::move(plan);
  result.certificate = std::move(cert);
  result.sparsity = sparsity(result.plan, config.sparsity_threshold);
  result.objective = plan_objective(problem, result.plan);
  result.max_violation = check_feasibility(problem, result.plan, 0.0).max_violation();
  result.propagated_labels = propagate_labels(result.plan, source.labels, target);

  bool has0 = false, has1 = false;
  for (int l : result.propagated_labels) {
    (l == 0 ? has0 : has1) = true;
  }
  result.degenerate_labels = !(has0 && has1);

  std::size_t hits = 0;
  if (result.degenerate_labels) {
    // One-class training set: the classifier is the constant predictor.
    const int only = result.propagated_labels.front();
    for (std::size_t i = 0; i < source.points.size(); ++i) {
      if (source.labels[i] == only) ++hits;
    }
  } else {
    PointCloud labeled = target;
    labeled.labels = result.propagated_labels;
    const double width =
        config.rbf_width > 0.0 ? config.rbf_width : median_pairwise_distance(labeled);
    const auto clf = KernelRidgeClassifier::train(labeled, width, config.ridge);
    for (std::size_t i = 0; i < source.points.size(); ++i) {
      if (clf.predict(source.points[i]) == source.labels[i]) ++hits;
    }
  }
  result.accuracy = static_cast<double>(hits) / static_cast<double>(source.points.size());
  return result;
}

}  // namespace potkit
