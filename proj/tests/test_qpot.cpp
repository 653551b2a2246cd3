#include <doctest.h>

#include <cmath>

#include "potkit/metrics.hpp"
#include "potkit/oracle.hpp"
#include "potkit/qpot.hpp"
#include "potkit/rng.hpp"
#include "testutil.hpp"

using namespace potkit;

namespace {

PotProblem symmetric2(double s, double eps) {
  return PotProblem(MassVector({0.5, 0.5}), MassVector({0.5, 0.5}),
                    CostMatrix(SquareMatrix(2, {0, 1, 1, 0})), s, eps,
                    Regularizer::Quadratic);
}

}  // namespace

TEST_CASE("primal_from_dual recovers the Lagrangian minimizer") {
  SUBCASE("tau at the cost minimum leaves the plan at zero") {
    Rng rng(3);
    auto p = test::random_problem(rng, 4, 0.5, 0.2, Regularizer::Quadratic);
    std::vector<double> zero(4, 0.0);
    auto plan = primal_from_dual(p, zero, zero, p.cost().min_entry());
    for (double v : plan.entries.data) CHECK(v == 0.0);
  }
  SUBCASE("single entry arithmetic") {
    auto p = PotProblem(MassVector({5.0}), MassVector({5.0}),
                        CostMatrix(SquareMatrix(1, {1.0})), 2.0, 0.5,
                        Regularizer::Quadratic);
    auto plan = primal_from_dual(p, {0.0}, {0.0}, 2.0);
    CHECK(plan.entries(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("oracle duals reproduce the oracle plan") {
    Rng rng(9);
    for (int rep = 0; rep < 10; ++rep) {
      auto p = test::random_problem(rng, 2, 0.7, 0.5, Regularizer::Quadratic);
      auto [oplan, cert] = oracle_qpot(p);
      auto plan = primal_from_dual(p, cert.u, cert.v, cert.tau);
      CHECK(test::max_abs_diff(plan.entries.data, oplan.entries.data) < 1e-8);
    }
  }
}

TEST_CASE("dual_value matches its closed forms") {
  Rng rng(13);
  auto p = test::random_problem(rng, 3, 0.6, 0.4, Regularizer::Quadratic);
  std::vector<double> zero(3, 0.0);
  const double tau = p.cost().min_entry() - 0.5;  // keeps the plan at zero
  CHECK(dual_value(p, zero, zero, tau) == doctest::Approx(tau * p.s()).epsilon(1e-14));

  auto p0 = PotProblem(p.r(), p.c(), p.cost(), 0.0, p.epsilon(), Regularizer::Quadratic);
  CHECK(dual_value(p0, zero, zero, 0.0) == 0.0);

  // strong duality at oracle-optimal duals
  for (int rep = 0; rep < 10; ++rep) {
    auto q = test::random_problem(rng, 3, 0.7, 0.5, Regularizer::Quadratic);
    auto [plan, cert] = oracle_qpot(q);
    CHECK(dual_value(q, cert.u, cert.v, cert.tau) ==
          doctest::Approx(objective_qpot(q, plan)).epsilon(1e-8));
  }
}

TEST_CASE("dual_gradient at a zero plan returns (-r, -c, s)") {
  Rng rng(19);
  auto p = test::random_problem(rng, 4, 0.5, 0.3, Regularizer::Quadratic);
  std::vector<double> zero(4, 0.0);
  auto g = dual_gradient(p, zero, zero, p.cost().min_entry() - 1.0);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(g.u[i] == doctest::Approx(-p.r()[i]).epsilon(1e-15));
    CHECK(g.v[i] == doctest::Approx(-p.c()[i]).epsilon(1e-15));
  }
  CHECK(g.tau == doctest::Approx(p.s()).epsilon(1e-15));
}

TEST_CASE("dual_gradient matches central finite differences away from kinks") {
  Rng rng(29);
  int tested = 0;
  for (int attempt = 0; attempt < 200 && tested < 20; ++attempt) {
    auto p = test::random_problem(rng, 5, 0.7, 0.5, Regularizer::Quadratic);
    std::vector<double> u(5), v(5);
    for (auto& x : u) x = rng.uniform(0.0, 0.3);
    for (auto& x : v) x = rng.uniform(0.0, 0.3);
    const double tau = rng.uniform(0.0, 1.2);

    bool kink_free = true;
    for (std::size_t i = 0; i < 5 && kink_free; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        if (std::abs(tau - p.cost()(i, j) - u[i] - v[j]) < 1e-3) {
          kink_free = false;
          break;
        }
      }
    }
    if (!kink_free) continue;
    ++tested;

    const auto g = dual_gradient(p, u, v, tau);
    const double h = 1e-6;
    // independent central-difference oracle on the dual objective
    for (std::size_t i = 0; i < 5; ++i) {
      auto up = u, um = u;
      up[i] += h;
      um[i] -= h;
      const double fd = (dual_value(p, up, v, tau) - dual_value(p, um, v, tau)) / (2 * h);
      CHECK(std::abs(fd - g.u[i]) < 1e-4);
    }
    for (std::size_t j = 0; j < 5; ++j) {
      auto vp = v, vm = v;
      vp[j] += h;
      vm[j] -= h;
      const double fd = (dual_value(p, u, vp, tau) - dual_value(p, u, vm, tau)) / (2 * h);
      CHECK(std::abs(fd - g.v[j]) < 1e-4);
    }
    const double fd_tau =
        (dual_value(p, u, v, tau + h) - dual_value(p, u, v, tau - h)) / (2 * h);
    CHECK(std::abs(fd_tau - g.tau) < 1e-4);
  }
  CHECK(tested == 20);
}

TEST_CASE("solve_qpot handles s = 0 without work") {
  Rng rng(37);
  auto base = test::random_problem(rng, 6, 0.0, 0.2, Regularizer::Quadratic);
  auto [plan, cert] = solve_qpot(base);
  CHECK(plan.iterations == 0);
  CHECK(plan.converged);
  CHECK(cert.kkt_residual == 0.0);
  for (double v : plan.entries.data) CHECK(v == 0.0);
}

TEST_CASE("solve_qpot reproduces the symmetric two-bin solution") {
  auto p = symmetric2(0.5, 0.1);
  auto [plan, cert] = solve_qpot(p);
  auto [oplan, ocert] = oracle_qpot(p);
  CHECK(test::max_abs_diff(plan.entries.data, oplan.entries.data) < 1e-6);
  CHECK(objective_qpot(p, plan) ==
        doctest::Approx(objective_qpot(p, oplan)).epsilon(1e-8));
}

TEST_CASE("solve_qpot matches the oracle on random tiny instances") {
  Rng rng(41);
  const double lams[] = {0.3, 0.7, 1.0};
  const double epss[] = {0.05, 0.5};
  for (std::size_t n = 1; n <= 3; ++n) {
    for (int rep = 0; rep < 12; ++rep) {
      auto p = test::random_problem(rng, n, lams[rep % 3], epss[rep % 2],
                                    Regularizer::Quadratic);
      auto [oplan, ocert] = oracle_qpot(p);
      auto [plan, cert] = solve_qpot(p);
      CHECK(test::max_abs_diff(plan.entries.data, oplan.entries.data) < 1e-6);
      CHECK(std::abs(cert.primal_value - objective_qpot(p, oplan)) < 1e-8);
    }
  }
}

TEST_CASE("weak duality holds against the oracle plan") {
  Rng rng(43);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 2 + rep % 3;
    auto p = test::random_problem(rng, n, 0.7, 0.3, Regularizer::Quadratic);
    auto [oplan, ocert] = oracle_qpot(p);
    const double primal = objective_qpot(p, oplan);
    // random dual-feasible points never exceed the feasible primal value
    for (int k = 0; k < 10; ++k) {
      std::vector<double> u(n), v(n);
      for (auto& x : u) x = rng.uniform(0.0, 1.0);
      for (auto& x : v) x = rng.uniform(0.0, 1.0);
      const double tau = rng.uniform(-0.5, 1.5);
      CHECK(dual_value(p, u, v, tau) <= primal + 1e-8);
    }
    CHECK(ocert.dual_value <= primal + 1e-8);
  }
}

TEST_CASE("dual values are nondecreasing with acceleration disabled") {
  Rng rng(47);
  auto p = test::random_problem(rng, 8, 0.7, 0.1, Regularizer::Quadratic);
  std::vector<double> log;
  SolverConfig cfg;
  cfg.acceleration = Acceleration::None;
  cfg.max_iterations = 400;
  cfg.dual_value_log = &log;
  solve_qpot(p, cfg);
  REQUIRE(log.size() > 1);
  for (std::size_t k = 1; k < log.size(); ++k) {
    CHECK(log[k] >= log[k - 1] - 1e-12 * std::max(1.0, std::abs(log[k - 1])));
  }
}

TEST_CASE("primal recovery is 3/eps-Lipschitz in the duals") {
  Rng rng(53);
  auto p = test::random_problem(rng, 6, 0.7, 0.25, Regularizer::Quadratic);
  std::vector<double> u(6), v(6);
  for (auto& x : u) x = rng.uniform(0.0, 0.4);
  for (auto& x : v) x = rng.uniform(0.0, 0.4);
  const double tau = rng.uniform(0.2, 0.8);
  auto base = primal_from_dual(p, u, v, tau);
  for (int rep = 0; rep < 20; ++rep) {
    const double delta = rng.uniform(0.0, 0.05);
    auto u2 = u, v2 = v;
    for (auto& x : u2) x += rng.uniform(-delta, delta);
    for (auto& x : v2) x += rng.uniform(-delta, delta);
    const double tau2 = tau + rng.uniform(-delta, delta);
    auto moved = primal_from_dual(p, u2, v2, tau2);
    const double bound = 3.0 * delta / p.epsilon() + 1e-12;
    CHECK(test::max_abs_diff(base.entries.data, moved.entries.data) <= bound);
  }
}

TEST_CASE("solving (alpha C, alpha eps) gives the same plan") {
  Rng rng(59);
  for (double alpha : {2.0, 4.0}) {
    auto p = test::random_problem(rng, 6, 0.7, 0.1, Regularizer::Quadratic);
    SquareMatrix scaled = p.cost().entries();
    for (auto& v : scaled.data) v *= alpha;
    PotProblem ps(p.r(), p.c(), CostMatrix(std::move(scaled)), p.s(),
                  alpha * p.epsilon(), Regularizer::Quadratic);
    auto [plan1, cert1] = solve_qpot(p);
    auto [plan2, cert2] = solve_qpot(ps);
    CHECK(plan1.converged);
    CHECK(plan2.converged);
    CHECK(test::max_abs_diff(plan1.entries.data, plan2.entries.data) < 1e-8);
  }
}

TEST_CASE("support characterization: positive entries have positive slack") {
  Rng rng(61);
  for (int rep = 0; rep < 15; ++rep) {
    auto p = test::random_problem(rng, 8, 0.7, 0.2, Regularizer::Quadratic);
    auto [plan, cert] = solve_qpot(p);
    REQUIRE(plan.converged);
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        const double slack = cert.tau - p.cost()(i, j) - cert.u[i] - cert.v[j];
        if (plan.entries(i, j) > 0.0) {
          CHECK(slack > -1e-9);
        } else {
          CHECK(slack <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("mass_projection repairs mass and caps") {
  MassVector r({0.6, 0.6});
  MassVector c({0.6, 0.6});
  SUBCASE("pure scaling when no cap binds") {
    auto plan = test::plan_from(2, {0.4, 0.0, 0.0, 0.4});  // mass 0.8, target 0.4
    auto out = mass_projection(plan, r, c, 0.4);
    CHECK(out.entries(0, 0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(out.entries(1, 1) == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("already-exact plans are untouched") {
    auto plan = test::plan_from(2, {0.25, 0.0, 0.0, 0.25});
    auto out = mass_projection(plan, r, c, 0.5);
    CHECK(out.entries.data == plan.entries.data);
  }
  SUBCASE("zero plan with positive target is a degenerate-plan error") {
    auto plan = test::plan_from(2, {0, 0, 0, 0});
    CHECK_THROWS_AS(mass_projection(plan, r, c, 0.1), DegeneratePlanError);
    CHECK_NOTHROW(mass_projection(plan, r, c, 0.0));
  }
  SUBCASE("loose iterates become feasible after repair") {
    Rng rng(67);
    for (int rep = 0; rep < 10; ++rep) {
      auto p = test::random_problem(rng, 10, 0.7, 0.15, Regularizer::Quadratic);
      SolverConfig cfg;
      cfg.kkt_tolerance = 1e-6;
      auto [plan, cert] = solve_qpot(p, cfg);
      auto fr = check_feasibility(p, plan, 0.0);
      CHECK(fr.max_violation() <= 1e-9 * std::max(1.0, p.s()));
    }
  }
}
