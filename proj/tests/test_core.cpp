#include "clit/core.hpp"
#include "clit/errors.hpp"

#include "doctest.h"

#include <cmath>

using namespace clit;

TEST_CASE("time grid is equidistant on [0, 1]") {
  const TimeGrid g(5);
  CHECK(g.size() == 5);
  CHECK(g.step() == doctest::Approx(0.25));
  CHECK(g[0] == 0.0);
  CHECK(g[4] == 1.0);
  CHECK_THROWS_AS(TimeGrid(1), DomainError);
  CHECK(TimeGrid::from_points({0.0, 0.5, 1.0 + 1e-12}).size() == 3);
  CHECK_THROWS_AS(TimeGrid::from_points({0.0, 0.4, 1.0}), DomainError);
}

TEST_CASE("path matrices validate shape and finiteness") {
  const TimeGrid g(3);
  CHECK_THROWS_AS(PathMatrix(g, Matrix::Zero(2, 4)), DimensionError);
  Matrix bad = Matrix::Zero(2, 3);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(PathMatrix(g, bad), DomainError);
}

TEST_CASE("counting records") {
  const TimeGrid g(5);
  SUBCASE("survival constructor") {
    const auto rec = CountingRecord::survival(g, {2, -1, 4});
    CHECK(rec.is_survival());
    CHECK(rec.at_risk_end(0) == 2);
    CHECK(rec.at_risk_end(1) == 5);
    CHECK(rec.at_risk(0, 2));
    CHECK_FALSE(rec.at_risk(0, 3));
    CHECK(rec.event_index(1) == -1);
    CHECK(rec.total_events() == 2);
    CHECK(rec.counting_path(0) == std::vector<double>{0, 0, 1, 1, 1});
    CHECK(rec.jumps(2) == std::vector<double>{0, 0, 0, 0, 1});
  }
  SUBCASE("invalid events") {
    CHECK_THROWS_AS(CountingRecord(g, {{0}}, {5}), DomainError);      // index 0 is not a step
    CHECK_THROWS_AS(CountingRecord(g, {{3}}, {2}), DomainError);      // after the at-risk end
    CHECK_THROWS_AS(CountingRecord(g, {{3, 2}}, {5}), DomainError);   // unsorted
    CHECK_THROWS_AS(CountingRecord(g, {{1}, {2}}, {5}), DimensionError);
  }
  SUBCASE("recurrent events") {
    const CountingRecord rec(g, {{1, 3}}, {5});
    CHECK_FALSE(rec.is_survival());
    CHECK(rec.counting_path(0) == std::vector<double>{0, 1, 1, 2, 2});
  }
}

TEST_CASE("left-point Riemann-Stieltjes partial sums") {
  const std::vector<double> f{9, 1, 2, 3};
  const std::vector<double> dm{7, 1, 1, -2};
  const auto s = rs_integral(f, dm);
  CHECK(s == std::vector<double>{0, 1, 3, -3});
  CHECK_THROWS_AS(rs_integral(f, std::vector<double>{1, 2}), DimensionError);
  // Constant integrand against a counting process counts the jumps.
  const auto n = rs_integral(std::vector<double>(4, 1.0), std::vector<double>{0, 0, 1, 0});
  CHECK(n == std::vector<double>{0, 0, 1, 1});
}

TEST_CASE("compensated increments") {
  const TimeGrid g(5);
  const auto rec = CountingRecord::survival(g, {2, -1});
  const std::vector<double> lam{4, 4, 4, 4, 4};
  const auto a = compensated_increments(rec, 0, lam);
  CHECK(a[0] == 0.0);
  CHECK(a[1] == doctest::Approx(-1.0));
  CHECK(a[2] == doctest::Approx(0.0));
  CHECK(a[3] == 0.0);
  CHECK(a[4] == 0.0);
  const auto b = compensated_increments(rec, 1, lam);
  CHECK(b[4] == doctest::Approx(-1.0));
  CHECK_THROWS_AS(compensated_increments(rec, 0, std::vector<double>{1, -1, 1, 1, 1}), DomainError);
  CHECK_THROWS_AS(compensated_increments(rec, 0, std::vector<double>{1, 1}), DimensionError);
}

TEST_CASE("integrand transforms") {
  const TimeGrid g(5);
  Matrix v(1, 5);
  v << 1, 2, 3, 4, 5;
  const PathMatrix x(g, v);
  using namespace transform;
  CHECK(transform_integrand(x, Identity{}).values == v);
  CHECK(transform_integrand(x, Pointwise{[](double a) { return a * a; }}).values(0, 4) == 25.0);
  const auto shifted = transform_integrand(x, TimeShift{0.5});
  CHECK(shifted.values(0, 0) == 0.0);
  CHECK(shifted.values(0, 1) == 0.0);
  CHECK(shifted.values(0, 2) == 1.0);
  CHECK(shifted.values(0, 4) == 3.0);
  CHECK_THROWS_AS(transform_integrand(x, TimeShift{0.3}), DomainError);
  CHECK_THROWS_AS(transform_integrand(x, TimeShift{-0.25}), DomainError);

  const auto kernel = [](double u) { return std::exp(-u); };
  const auto filtered = transform_integrand(x, LinearFilter{kernel});
  for (Index l = 0; l < 5; ++l) {
    double ref = 0.0;
    for (Index i = 0; i < l; ++i) ref += kernel(g[l] - g[i]) * v(0, i) * g.step();
    CHECK(filtered.values(0, l) == doctest::Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("datasets require matching components") {
  const TimeGrid g(4);
  const PathMatrix x(g, Matrix::Zero(2, 4));
  const PathMatrix z3(g, Matrix::Zero(3, 4));
  CHECK_THROWS_AS(Dataset(x, z3, CountingRecord::survival(g, {1, 2})), DimensionError);
  const PathMatrix z5(TimeGrid(5), Matrix::Zero(2, 5));
  CHECK_THROWS_AS(Dataset(x, z5, CountingRecord::survival(g, {1, 2})), DimensionError);
}
