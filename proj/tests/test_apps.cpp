#include <doctest.h>

#include <cmath>

#include "potkit/apps.hpp"
#include "potkit/metrics.hpp"
#include "testutil.hpp"

using namespace potkit;

#ifndef POTKIT_SOURCE_DIR
#define POTKIT_SOURCE_DIR "."
#endif

namespace {

RgbImage asset_ppm(const char* name) {
  return read_ppm(std::string(POTKIT_SOURCE_DIR) + "/assets/" + name);
}

RgbImage shrink(const RgbImage& img, std::size_t factor) {
  RgbImage out;
  out.width = img.width / factor;
  out.height = img.height / factor;
  out.pixels.resize(3 * out.width * out.height);
  for (std::size_t r = 0; r < out.height; ++r) {
    for (std::size_t c = 0; c < out.width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        out.at(r, c)[ch] = img.at(r * factor, c * factor)[ch];
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("color_transfer with lambda = 0 is the identity") {
  auto source = shrink(asset_ppm("warm_256.ppm"), 8);
  auto target = shrink(asset_ppm("cool_256.ppm"), 8);
  auto res = color_transfer(source, target, 0.0, 1e-2, Method::Qpot, 8);
  CHECK(res.output_image.pixels == source.pixels);
  CHECK(res.sparsity == 1.0);
}

TEST_CASE("self color transfer at full mass stays within quantization error") {
  auto source = shrink(asset_ppm("warm_256.ppm"), 8);
  auto res = color_transfer(source, source, 1.0, 1e-3, Method::Qpot, 16);
  REQUIRE(res.output_image.pixels.size() == source.pixels.size());
  int worst = 0;
  for (std::size_t k = 0; k < source.pixels.size(); ++k) {
    worst = std::max(worst, std::abs(static_cast<int>(res.output_image.pixels[k]) -
                                     static_cast<int>(source.pixels[k])));
  }
  CHECK(worst <= 1);
}

TEST_CASE("color_transfer sparsity ordering holds on a small pair") {
  auto source = shrink(asset_ppm("warm_256.ppm"), 4);
  auto target = shrink(asset_ppm("cool_256.ppm"), 4);
  SolverConfig cfg;
  cfg.max_iterations = 20000;
  auto q = color_transfer(source, target, 0.7, 1e-2, Method::Qpot, 8, cfg);
  auto e = color_transfer(source, target, 0.7, 1e-2, Method::Epot, 8, cfg);
  CHECK(q.sparsity > e.sparsity);
  CHECK(q.max_violation <= 1e-9);
  CHECK(e.max_violation <= 1e-9);
  REQUIRE(q.certificate.has_value());
  CHECK(q.certificate->primal_value - q.certificate->dual_value >= -1e-8);
}

TEST_CASE("barycentric targets stay inside the target hull") {
  auto source = shrink(asset_ppm("warm_256.ppm"), 8);
  auto target = shrink(asset_ppm("cool_256.ppm"), 8);
  const std::size_t bins = 8;
  auto res = color_transfer(source, target, 0.7, 1e-2, Method::Qpot, bins);
  const auto src = rgb_to_luv_histogram(source, bins);
  const auto tgt = rgb_to_luv_histogram(target, bins);
  for (std::size_t i = 0; i < bins * bins; ++i) {
    double mass = 0.0, su = 0.0, sv = 0.0;
    for (std::size_t j = 0; j < bins * bins; ++j) {
      const double x = res.plan.entries(i, j);
      mass += x;
      su += x * tgt.bin_centers[j][0];
      sv += x * tgt.bin_centers[j][1];
    }
    if (mass <= 0.0) continue;
    const double mu = su / mass, mv = sv / mass;
    // convex combination of cell centers stays inside their bounding box
    CHECK(mu >= 0.5 / bins - 1e-12);
    CHECK(mu <= 1.0 - 0.5 / bins + 1e-12);
    CHECK(mv >= 0.5 / bins - 1e-12);
    CHECK(mv <= 1.0 - 0.5 / bins + 1e-12);
  }
}

TEST_CASE("propagate_labels follows the plan mass") {
  PointCloud targets;
  targets.points = {{0, 0}, {1, 0}, {2, 0}};
  SUBCASE("diagonal plans copy labels") {
    auto plan = test::plan_from(3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    auto labels = propagate_labels(plan, {1, 0, 1}, targets);
    CHECK(labels == std::vector<int>{1, 0, 1});
  }
  SUBCASE("columns take their dominant class, ties to the lower id") {
    auto plan = test::plan_from(3, {0.3, 0.2, 0, 0.3, 0.2, 0, 0, 0.2, 0});
    auto labels = propagate_labels(plan, {0, 0, 1}, targets);
    CHECK(labels[0] == 0);
    CHECK(labels[1] == 0);  // 0.4 class 0 vs 0.2 class 1
  }
  SUBCASE("zero-mass columns inherit the nearest labeled neighbor") {
    auto plan = test::plan_from(3, {1, 0, 0, 0, 0, 0, 0, 0, 0});
    auto labels = propagate_labels(plan, {1, 0, 0}, targets);
    CHECK(labels[0] == 1);
    CHECK(labels[1] == 1);  // nearest decided target is column 0
    CHECK(labels[2] == 1);
  }
  SUBCASE("uniform scaling leaves labels unchanged") {
    auto plan = test::plan_from(3, {0.3, 0.2, 0.01, 0.3, 0.2, 0.02, 0, 0.2, 0.5});
    auto l1 = propagate_labels(plan, {0, 1, 1}, targets);
    for (auto& v : plan.entries.data) v *= 7.5;
    auto l2 = propagate_labels(plan, {0, 1, 1}, targets);
    CHECK(l1 == l2);
  }
  SUBCASE("all-zero plans are an error") {
    auto plan = test::plan_from(3, std::vector<double>(9, 0.0));
    CHECK_THROWS_AS(propagate_labels(plan, {0, 1, 0}, targets), DegeneratePlanError);
  }
}

TEST_CASE("kernel ridge classifier basics") {
  SUBCASE("two separated points classify themselves") {
    PointCloud cloud;
    cloud.points = {{0, 0}, {5, 5}};
    cloud.labels = {0, 1};
    auto clf = KernelRidgeClassifier::train(cloud, 1.0, 1e-3);
    CHECK(clf.predict({0, 0}) == 0);
    CHECK(clf.predict({5, 5}) == 1);
  }
  SUBCASE("noise-free moons are interpolated exactly") {
    auto moons = make_moons(80, 0.0, 3);
    auto clf = KernelRidgeClassifier::train(moons, 0.5, 1e-3);
    std::size_t hits = 0;
    for (std::size_t k = 0; k < moons.points.size(); ++k) {
      hits += clf.predict(moons.points[k]) == moons.labels[k];
    }
    CHECK(hits == moons.points.size());
  }
  SUBCASE("flipping the labels negates the decision function") {
    auto moons = make_moons(40, 0.05, 9);
    auto clf = KernelRidgeClassifier::train(moons, 0.7, 1e-3);
    PointCloud flipped = moons;
    for (int& l : flipped.labels) l = 1 - l;
    auto neg = KernelRidgeClassifier::train(flipped, 0.7, 1e-3);
    for (double x = -1.0; x <= 2.0; x += 0.37) {
      CHECK(clf.decision({x, 0.3}) ==
            doctest::Approx(-neg.decision({x, 0.3})).epsilon(1e-9));
    }
  }
  SUBCASE("one-class training sets are rejected") {
    PointCloud cloud;
    cloud.points = {{0, 0}, {1, 1}};
    cloud.labels = {0, 0};
    CHECK_THROWS_AS(KernelRidgeClassifier::train(cloud, 1.0, 1e-3), ParameterError);
  }
}

TEST_CASE("domain adaptation pipeline is reproducible and sane") {
  AdaptationConfig cfg;
  cfg.source_count = 60;
  cfg.target_count = 80;
  cfg.reduced_count = 60;
  cfg.epsilon = 1e-3;
  cfg.solver.max_iterations = 30000;

  auto r1 = domain_adaptation_experiment(cfg);
  auto r2 = domain_adaptation_experiment(cfg);
  CHECK(r1.propagated_labels == r2.propagated_labels);
  CHECK(r1.accuracy == r2.accuracy);
  CHECK(r1.plan.entries.data == r2.plan.entries.data);
  CHECK(r1.accuracy >= 0.0);
  CHECK(r1.accuracy <= 1.0);
  CHECK(r1.propagated_labels.size() == 60);
  CHECK(r1.max_violation <= 1e-9);

  SUBCASE("no covariate shift is at least as easy as a 50 degree shift") {
    AdaptationConfig easy = cfg;
    easy.rotation_degrees = 0.0;
    easy.lambda = 0.99;
    AdaptationConfig hard = easy;
    hard.rotation_degrees = 50.0;
    const double easy_acc = domain_adaptation_experiment(easy).accuracy;
    const double hard_acc = domain_adaptation_experiment(hard).accuracy;
    CHECK(easy_acc >= hard_acc);
  }
}

TEST_CASE("cloud_cost normalizes and honors the metric flag") {
  PointCloud a;
  a.points = {{0, 0}, {3, 0}};
  PointCloud b;
  b.points = {{0, 0}, {0, 4}};
  auto sq = cloud_cost(a, b, CostKind::SquaredEuclidean);
  CHECK(sq.max_entry() == 1.0);
  CHECK(sq(1, 1) == doctest::Approx(25.0 / 25.0).epsilon(1e-12));
  CHECK(sq(0, 1) == doctest::Approx(16.0 / 25.0).epsilon(1e-12));
  auto eu = cloud_cost(a, b, CostKind::Euclidean);
  CHECK(eu(0, 1) == doctest::Approx(4.0 / 5.0).epsilon(1e-12));
}
