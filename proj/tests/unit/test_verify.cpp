#include <doctest.h>

#include <cmath>

#include "ffgen/errors.hpp"
#include "ffgen/verify.hpp"

using namespace ffgen;

TEST_SUITE("verify") {
  TEST_CASE("normalization in one and two dimensions") {
    Stream rng(1, "norm");
    const auto a1 = verify::normalization_constant(1, 100000, rng);
    CHECK(a1.amplitude == doctest::Approx(1.0 / M_PI).epsilon(5e-3));
    CHECK(verify::analytic_amplitude(1) == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
    const auto a2 = verify::normalization_constant(2, 100000, rng);
    CHECK(a2.amplitude == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(5e-3));
    CHECK(verify::analytic_amplitude(2) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-14));
  }

  TEST_CASE("normalization does not depend on the evaluation point") {
    for (std::size_t d : {2u, 3u}) {
      Stream r1(2, "norm", d), r2(3, "norm", d);
      const auto a = verify::normalization_constant(d, 200000, r1);
      const Vec x0(d, 0.7);
      const auto b = verify::normalization_constant(d, 200000, r2, 2.5, x0);
      const double bar = std::hypot(a.std_error, b.std_error) + 1e-12;
      CHECK(std::abs(a.amplitude - b.amplitude) <= 3.0 * bar);
      CHECK(a.amplitude * b.integral == doctest::Approx(1.0).epsilon(5e-3));
    }
  }

  TEST_CASE("tiny budget does not converge") {
    Stream rng(4, "norm");
    CHECK_THROWS_AS(verify::normalization_constant(8, 10, rng), NonConvergence);
    CHECK_THROWS_AS(verify::normalization_constant(0, 10, rng), InvalidInput);
  }

  TEST_CASE("kernel divergence and the wrong exponent") {
    Stream r1(5, "div"), r2(5, "div");
    const double a = verify::analytic_amplitude(2);
    CHECK(verify::check_divergence_free(2, a, 1000, r1, 1e-5).max_residual < 1e-3);
    CHECK(verify::check_divergence_free(2, a, 1000, r2, 1e-5, 2.0).max_residual > 0.1);
  }

  TEST_CASE("divergence stencil is second order") {
    Stream r1(6, "div"), r2(6, "div");
    const double a = verify::analytic_amplitude(2);
    const double coarse = verify::check_divergence_free(2, a, 200, r1, 1e-3).max_residual;
    const double fine = verify::check_divergence_free(2, a, 200, r2, 1e-4).max_residual;
    CHECK(coarse / fine == doctest::Approx(100.0).epsilon(0.2));
  }

  TEST_CASE("continuity of the linear and bridge conditionals") {
    std::vector<double> t_grid;
    for (int i = 0; i <= 16; ++i) t_grid.push_back(0.2 + 0.05 * i);
    PointSet xs(1);
    for (int i = 0; i <= 120; ++i) xs.push_back(Vec{-3.0 + 0.05 * i});
    trajectory::TrajectorySpec spec;
    spec.family = trajectory::Family::Linear;
    spec.dim = 1;
    const double x0[1] = {0.5};
    CHECK(verify::continuity_residual(spec, x0, t_grid, xs).normalized < 1e-4);
    CHECK(verify::continuity_residual(spec, x0, t_grid, xs, 1e-4, 2.0).normalized > 1e-2);
    spec.family = trajectory::Family::GaussianBridge;
    CHECK(verify::continuity_residual(spec, x0, t_grid, xs).normalized < 1e-4);

    spec.family = trajectory::Family::Linear;
    CHECK_THROWS_AS(verify::continuity_residual(spec, x0, std::vector<double>{1e-4}, xs), InvalidInput);
  }

  TEST_CASE("still density with no flow has zero residual") {
    const verify::Density p = [](double, std::span<const double> x) { return std::exp(-0.5 * x[0] * x[0]); };
    const verify::Velocity v = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    PointSet xs(1);
    for (int i = 0; i <= 20; ++i) xs.push_back(Vec{-2.0 + 0.2 * i});
    const std::vector<double> ts{0.3, 0.6, 0.99};
    CHECK(verify::continuity_residual(p, v, 1, ts, xs, 1e-3, 1.0).max_residual == 0.0);
  }

  TEST_CASE("radial law") {
    for (std::size_t d : {1u, 2u, 3u, 8u}) {
      Stream r(7, "radial", d), rn(8, "radial", d);
      CHECK(verify::check_radial_law(d, 100000, r) < 1e-2);
      // Neighbouring laws draw closer as d grows.
      CHECK(verify::check_radial_law(d, 100000, rn, 1.0, d + 1) > (d <= 3 ? 5e-2 : 2e-2));
    }
    CHECK(verify::radial_cdf(0.0, 2) == 0.0);
    CHECK(verify::radial_cdf(1e9, 2) == doctest::Approx(1.0).epsilon(1e-6));
    // d = 1: the CDF of |Cauchy| is 2 atan(r) / pi.
    CHECK(verify::radial_cdf(1.0, 1) == doctest::Approx(0.5).epsilon(1e-8));
  }

  TEST_CASE("radial statistic ignores the noise scale") {
    Stream a(9, "radial"), b(9, "radial");
    CHECK(verify::check_radial_law(3, 20000, a, 1.0) == doctest::Approx(verify::check_radial_law(3, 20000, b, 7.5)).epsilon(1e-9));
  }

  TEST_CASE("suite records") {
    verify::VerifyConfig cfg;
    cfg.seed = 7;
    cfg.dims = {1, 2};
    cfg.normalization_budget = 100000;
    cfg.radial_samples = 20000;
    cfg.divergence_points = 200;
    const auto records = verify::run_suite(cfg);
    CHECK(records.size() == 2 * 7 + 3);
    for (const auto& r : records) {
      CHECK(r.seed == 7);
      CHECK_MESSAGE(r.pass, r.name);
    }
    const auto csv = verify::records_csv(records);
    CHECK(csv.rfind("name,estimate,tolerance,pass,seed\n", 0) == 0);
    CHECK(verify::records_csv(verify::run_suite(cfg)) == csv);
    cfg.normalization_tol = -1.0;
    CHECK_THROWS_AS(verify::run_suite(cfg), InvalidInput);
  }
}
