#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cbopt/problems.hpp"

using namespace cbopt;

TEST_CASE("objective values by direct substitution") {
  Objective1D h1 = make_h1(), h2 = make_h2();
  CHECK(h_value(h1, 100, 100) == 0.0);
  CHECK(h_value(h1, 3, 1) == 4.0);
  CHECK(h_value(h2, 1, 0) == 2.0);
  CHECK(h_value(h2, 0, 1) == doctest::Approx(4.0));  // 2*1 + 2*1
}

TEST_CASE("one-sided derivative limits") {
  Objective1D h1 = make_h1(), h2 = make_h2();
  Objective1D nv = make_newsvendor({1.0, 2.0});
  for (double x : {55.0, 100.0, 149.0}) {
    auto [dl1, dr1] = one_sided_derivatives(h1, x);
    CHECK(dl1 == 0.0);
    CHECK(dr1 == 0.0);
    auto [dln, drn] = one_sided_derivatives(nv, x);
    CHECK(dln == 1.0);
    CHECK(drn == -2.0);
    auto [dl2, dr2] = one_sided_derivatives(h2, x);
    CHECK(dl2 == 1.0);
    CHECK(dr2 == -2.0);
  }
}

TEST_CASE("cross partials") {
  Objective1D h1 = make_h1(), h2 = make_h2();
  Objective1D nv = make_newsvendor({1.0, 2.0});
  CHECK(cross_partial(h1, 100, 70) == -2.0);
  CHECK(cross_partial(h1, 100, 130) == -2.0);
  CHECK(cross_partial(nv, 100, 70) == 0.0);
  CHECK(cross_partial(h2, 100, 70) == -2.0);
  CHECK(cross_partial(h2, 100, 130) == -4.0);
  CHECK_THROWS_AS(cross_partial(h1, 100, 100), std::invalid_argument);
}

TEST_CASE("derivative limits agree with the analytic derivative near z = x") {
  for (const Objective1D& obj : {make_h1(), make_h2(), make_newsvendor({1.0, 2.0})}) {
    for (int i = 0; i <= 100; ++i) {
      double x = obj.lo + (obj.hi - obj.lo) * i / 100.0;
      CHECK(std::abs(obj.dleft(x) - obj.dx(x, x - 1e-6, Side::Below)) <= 1e-4);
      CHECK(std::abs(obj.dright(x) - obj.dx(x, x + 1e-6, Side::Above)) <= 1e-4);
    }
  }
}

TEST_CASE("midpoint convexity in x for fixed samples") {
  for (const Objective1D& obj : {make_h1(), make_h2(), make_newsvendor({1.0, 2.0})}) {
    for (double xi : {60.0, 100.0, 140.0}) {
      for (double a : {55.0, 90.0, 120.0}) {
        double b = a + 20.0, m = a + 10.0;
        CHECK(obj.h(m, xi) <= 0.5 * (obj.h(a, xi) + obj.h(b, xi)) + 1e-12);
      }
    }
  }
}

TEST_CASE("closed-form ground truth for the quadratic objective") {
  Objective1D h1 = make_h1();
  DistributionSpec U = DistributionSpec::uniform(50, 150);
  GroundTruth gt = ground_truth(h1, U);
  CHECK(gt.method == GroundTruth::Method::ClosedForm);
  CHECK(gt.xstar == doctest::Approx(100.0));
  CHECK(gt.Hstar == doctest::Approx(10000.0 / 12.0));
  // gap decomposition H(x) - H* = (x - mean)^2, both laws
  CHECK(gt.H(110) - gt.Hstar == doctest::Approx(100.0));
  DistributionSpec N = DistributionSpec::normal(100, 100);
  GroundTruth gtn = ground_truth(h1, N);
  CHECK(gtn.H(110) - gtn.Hstar == doctest::Approx(100.0));
  CHECK(gtn.Hstar == doctest::Approx(100.0));
}

TEST_CASE("quadrature ground truth for the piecewise quadratic objective") {
  Objective1D h2 = make_h2();
  DistributionSpec U = DistributionSpec::uniform(50, 150);
  GroundTruth gtu = ground_truth(h2, U);
  CHECK(gtu.method == GroundTruth::Method::Quadrature);
  // also the root of a^2 - 403 a + 20200 = 0 with a = x - 50
  CHECK(gtu.xstar == doctest::Approx(108.66).epsilon(0.0001));
  CHECK(std::abs(gtu.Hprime(gtu.xstar)) <= 1e-5);

  DistributionSpec N = DistributionSpec::normal(100, 100);
  GroundTruth gtn = ground_truth(h2, N);
  CHECK(gtn.xstar == doctest::Approx(102.82).epsilon(0.0001));
  CHECK(std::abs(gtn.Hprime(gtn.xstar)) <= 1e-5);
}

TEST_CASE("expected-cost derivative matches a finite difference of the cost") {
  Objective1D h2 = make_h2();
  DistributionSpec U = DistributionSpec::uniform(50, 150);
  GroundTruth gt = ground_truth(h2, U);
  for (double x : {55.0, 80.0, 100.0, 120.0, 145.0}) {
    double fd = (gt.H(x + 1e-5) - gt.H(x - 1e-5)) / 2e-5;
    CHECK(std::abs(gt.Hprime(x) - fd) <= 1e-4);
  }
}

TEST_CASE("relative gap") {
  Objective1D h1 = make_h1();
  GroundTruth gtu = ground_truth(h1, DistributionSpec::uniform(50, 150));
  CHECK(relative_gap(gtu, 100) == doctest::Approx(0.0));
  CHECK(relative_gap(gtu, 110) == doctest::Approx(0.12));
  GroundTruth gtn = ground_truth(h1, DistributionSpec::normal(100, 100));
  CHECK(relative_gap(gtn, 110) == doctest::Approx(1.0));
  GroundTruth degenerate;
  degenerate.H = [](double) { return 0.0; };
  degenerate.Hstar = 0.0;
  CHECK_THROWS_AS(relative_gap(degenerate, 1.0), GapUndefined);
}

TEST_CASE("string ids") {
  CHECK(parse_objective("h1").name == "h1");
  CHECK(parse_objective("h2").name == "h2");
  Objective1D nv = parse_objective("newsvendor:H=1.5,B=3");
  CHECK(nv.dleft(100) == 1.5);
  CHECK(nv.dright(100) == -3.0);
  CHECK_THROWS_AS(parse_objective("h9"), std::invalid_argument);
  CHECK_THROWS_AS(parse_objective("newsvendor:oops"), std::invalid_argument);

  DistributionSpec u = parse_distribution("uniform:50,150");
  CHECK(u.mean() == doctest::Approx(100.0));
  DistributionSpec n = parse_distribution("normal:100,100");
  CHECK(n.variance() == doctest::Approx(100.0));
  CHECK_THROWS_AS(parse_distribution("cauchy:0,1"), std::invalid_argument);
  CHECK_THROWS_AS(DistributionSpec::uniform(2, 2), std::invalid_argument);
  CHECK_THROWS_AS(DistributionSpec::normal(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_newsvendor({0.0, 1.0}), std::invalid_argument);
}
