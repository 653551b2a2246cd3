#include <doctest.h>

#include <cmath>

#include "potkit/data.hpp"
#include "potkit/epot.hpp"
#include "potkit/metrics.hpp"
#include "potkit/oracle.hpp"
#include "potkit/rng.hpp"
#include "testutil.hpp"

using namespace potkit;

TEST_CASE("solve_epot short-circuits s = 0 and forced instances") {
  Rng rng(3);
  auto p0 = test::random_problem(rng, 5, 0.0, 0.3, Regularizer::Entropic);
  auto plan0 = solve_epot(p0);
  CHECK(plan0.converged);
  for (double v : plan0.entries.data) CHECK(v == 0.0);

  auto p1 = PotProblem(MassVector({1.0}), MassVector({1.0}),
                       CostMatrix(SquareMatrix(1, {0.7})), 1.0, 0.4,
                       Regularizer::Entropic);
  auto plan1 = solve_epot(p1);
  CHECK(plan1.entries(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("solve_epot matches the entropic oracle on random instances") {
  Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    auto p = test::random_problem(rng, 3, 0.7, 0.5, Regularizer::Entropic);
    auto oplan = oracle_epot(p);
    SolverConfig cfg;
    cfg.kkt_tolerance = 1e-10;
    cfg.max_iterations = 100000;
    auto plan = solve_epot(p, cfg);
    CHECK(std::abs(objective_epot(p, plan) - objective_epot(p, oplan)) < 1e-5);
  }
}

TEST_CASE("each Dykstra projection clears the marginal it targets") {
  Rng rng(11);
  for (int rep = 0; rep < 8; ++rep) {
    auto p = test::random_problem(rng, 6, 0.6, 0.4, Regularizer::Entropic);
    DykstraScaler scaler(p);
    // run a couple of mixed sweeps so the state is generic
    scaler.sweep();
    scaler.project_rows();
    CHECK(check_feasibility(p, scaler.implied_plan(), 0.0).row_violation <= 1e-12);
    scaler.project_cols();
    CHECK(check_feasibility(p, scaler.implied_plan(), 0.0).col_violation <= 1e-12);
    scaler.project_mass();
    CHECK(check_feasibility(p, scaler.implied_plan(), 0.0).mass_error <=
          1e-12 * std::max(1.0, p.s()));
  }
}

TEST_CASE("log-domain and direct-domain solves agree on benign instances") {
  Rng rng(13);
  for (int rep = 0; rep < 6; ++rep) {
    auto p = test::random_problem(rng, 5, 0.7, 0.1 + 0.2 * (rep % 3),
                                  Regularizer::Entropic);
    SolverConfig cfg;
    cfg.kkt_tolerance = 1e-11;
    cfg.max_iterations = 100000;
    auto log_plan = solve_epot_in_domain(p, cfg, DykstraDomain::Log);
    auto direct_plan = solve_epot_in_domain(p, cfg, DykstraDomain::Direct);
    CHECK(test::max_abs_diff(log_plan.entries.data, direct_plan.entries.data) < 1e-10);
  }
}

TEST_CASE("converged entropic plans on live problems are strictly dense") {
  // Fully-supported pair so no bin is empty on either side.
  auto a = DistributionSpec::beta_dist(2.0, 2.0);
  auto b = DistributionSpec::beta_dist(2.0, 5.0);
  a.sample_count = b.sample_count = 20000;
  a.bin_count = b.bin_count = 100;
  auto pair = paired_histograms(a, b, 99);
  std::vector<std::vector<double>> pos;
  for (double x : pair.bin_centers) pos.push_back({x});
  auto cost = cost_matrix_from_positions(pos, pos, true);
  const double s = lambda_to_mass(0.7, pair.r, pair.c);
  PotProblem p(pair.r, pair.c, cost, s, 1e-2, Regularizer::Entropic);
  auto plan = solve_epot(p);
  REQUIRE(plan.converged);
  std::size_t live_rows = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    if (pair.r[i] == 0.0) continue;
    ++live_rows;
    for (std::size_t j = 0; j < 100; ++j) {
      if (pair.c[j] == 0.0) continue;
      CHECK(plan.entries(i, j) > 0.0);
    }
  }
  CHECK(live_rows == 100);  // the chosen pair keeps every bin occupied
}

TEST_CASE("round_to_feasible repairs plans and is idempotent") {
  Rng rng(17);
  auto p = test::random_problem(rng, 10, 0.6, 0.3, Regularizer::Entropic);

  SUBCASE("feasible plans are unchanged") {
    SolverConfig cfg;
    auto plan = solve_epot(p, cfg);
    auto again = round_to_feasible(plan, p);
    CHECK(test::max_abs_diff(plan.entries.data, again.entries.data) <= 1e-15);
  }

  SUBCASE("doubled plans are rescaled back") {
    auto plan = solve_epot(p);
    TransportPlan doubled = plan;
    for (auto& v : doubled.entries.data) v *= 2.0;
    auto out = round_to_feasible(doubled, p);
    CHECK(test::max_abs_diff(out.entries.data, plan.entries.data) < 1e-12);
  }

  SUBCASE("loose Dykstra iterates become tightly feasible") {
    SolverConfig cfg;
    cfg.kkt_tolerance = 1e-4;
    auto loose = solve_epot(p, cfg);  // already rounded inside, perturb it
    TransportPlan noisy = loose;
    Rng nrng(23);
    for (auto& v : noisy.entries.data) v *= 1.0 + 1e-4 * (nrng.uniform01() - 0.5);
    auto fixed = round_to_feasible(noisy, p);
    auto fr = check_feasibility(p, fixed, 0.0);
    CHECK(fr.max_violation() <= 1e-9 * std::max(1.0, p.s()));
    CHECK(std::abs(objective_epot(p, fixed) - objective_epot(p, noisy)) <= 1e-3);

    auto twice = round_to_feasible(fixed, p);
    CHECK(test::max_abs_diff(twice.entries.data, fixed.entries.data) <= 1e-12);
  }
}

TEST_CASE("round_to_feasible moves mass at most proportionally to violations") {
  Rng rng(29);
  for (int rep = 0; rep < 8; ++rep) {
    const std::size_t n = 8;
    auto p = test::random_problem(rng, n, 0.6, 0.3, Regularizer::Entropic);
    auto base = solve_epot(p);
    TransportPlan noisy = base;
    for (auto& v : noisy.entries.data) v *= 1.0 + 0.02 * rng.uniform01();
    const auto before = check_feasibility(p, noisy, 0.0);
    auto fixed = round_to_feasible(noisy, p);
    double l1 = 0.0;
    for (std::size_t k = 0; k < noisy.entries.data.size(); ++k) {
      l1 += std::abs(fixed.entries.data[k] - noisy.entries.data[k]);
    }
    const double budget = 3.0 * (before.row_violation * n + before.col_violation * n +
                                 before.mass_error);
    CHECK(l1 <= budget + 1e-12);
  }
}

TEST_CASE("round_to_feasible distributes deficits into marginal slack") {
  // Plan far short of the target mass: the repair must add the deficit along
  // rows/columns that still have slack, never exceeding either cap.
  MassVector r({0.4, 0.4, 0.4});
  MassVector c({0.4, 0.4, 0.4});
  PotProblem p(r, c, CostMatrix(SquareMatrix(3, std::vector<double>(9, 1.0))), 0.9,
               0.5, Regularizer::Entropic);
  auto plan = test::plan_from(3, {0.2, 0, 0, 0, 0.2, 0, 0, 0, 0.1});  // mass 0.5
  auto out = round_to_feasible(plan, p);
  auto fr = check_feasibility(p, out, 0.0);
  CHECK(fr.max_violation() <= 1e-9);
  CHECK(out.total_mass() == doctest::Approx(0.9).epsilon(1e-12));
}
