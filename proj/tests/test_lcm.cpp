#include "clit/errors.hpp"
#include "clit/lcm.hpp"

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <set>
#include <sstream>

using namespace clit;
using fixture::iota;

using fixture::MatrixIntensity;
using fixture::MatrixResidual;

TEST_CASE("zero residual gives a zero path") {
  const Dataset d = fixture::random_dataset(8, 6, 1);
  const auto split = TrainSplit::make(8, iota(4), iota(4, 4));
  const auto p = estimate_lcm_split(d, split, ConstantResidual(0.0), ConstantIntensity(3.0));
  for (double g : p.gamma) CHECK(g == 0.0);
  CHECK(p.scale_n == 4.0);
}

TEST_CASE("pure jump term with zero intensity") {
  const TimeGrid g(6);
  Matrix x(1, 6);
  x << 0, 1, 2, 3, 4, 5;
  const Dataset d(PathMatrix(g, x), PathMatrix(g, Matrix::Zero(1, 6)), CountingRecord::survival(g, {3}));
  const TrainSplit split{{}, {0}};
  const auto fit = std::make_shared<AdditiveResidual>(std::vector<double>(6, 0.0),
                                                      std::vector<std::vector<double>>{{}, {0}, {0, 0}, {0, 0, 0},
                                                                                       {0, 0, 0, 0}, {0, 0, 0, 0, 0}},
                                                      std::numeric_limits<double>::infinity());
  const auto p = estimate_lcm_split(d, split, *fit, ConstantIntensity(0.0));
  CHECK(p.gamma == std::vector<double>{0, 0, 0, 3, 3, 3});
  CHECK(p.variance == std::vector<double>{0, 0, 0, 9, 9, 9});
}

TEST_CASE("split estimator and variance match brute-force oracles (five subjects)") {
  const Dataset d = fixture::random_dataset(5, 7, 12, 0.2);
  RandomStream rs(5, 5);
  Matrix g(5, 7), lam(5, 7);
  for (Index j = 0; j < 5; ++j)
    for (Index l = 0; l < 7; ++l) {
      g(j, l) = rs.normal();
      lam(j, l) = 3.0 * rs.uniform();
    }
  const std::vector<Index> all = iota(5);
  const TrainSplit split{{}, all};
  const auto p = estimate_lcm_split(d, split, MatrixResidual(g), MatrixIntensity(lam));
  Matrix masked = lam;
  for (Index j = 0; j < 5; ++j)
    for (Index l = d.record.at_risk_end(j) + 1; l < 7; ++l) masked(j, l) = 0.0;
  const auto ref = oracle::lcm_path(d, all, g, masked);
  const auto vref = oracle::variance_path(d, all, g);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CHECK(p.gamma[i] == doctest::Approx(ref[i]).epsilon(1e-14));
    CHECK(p.variance[i] == doctest::Approx(vref[i]).epsilon(1e-14));
  }
}

TEST_CASE("variance examples") {
  const TimeGrid g(5);
  const Dataset none(PathMatrix(g, Matrix::Zero(3, 5)), PathMatrix(g, Matrix::Zero(3, 5)),
                     CountingRecord::survival(g, {-1, -1, -1}));
  const std::vector<Index> rows{0, 1, 2};
  for (double v : estimate_variance(none, rows, Matrix::Constant(3, 5, 2.0))) CHECK(v == 0.0);

  const Dataset some(PathMatrix(g, Matrix::Zero(3, 5)), PathMatrix(g, Matrix::Zero(3, 5)),
                     CountingRecord::survival(g, {1, 3, -1}));
  const auto v = estimate_variance(some, rows, Matrix::Constant(3, 5, 2.0));
  CHECK(v == std::vector<double>{0, 4.0 / 3.0, 4.0 / 3.0, 8.0 / 3.0, 8.0 / 3.0});
  CHECK_THROWS_AS(estimate_variance(some, std::vector<Index>{}, Matrix::Zero(0, 5)), InputError);
}

TEST_CASE("plug-in estimator examples") {
  const TimeGrid g(11);
  const Dataset zero_x(PathMatrix(g, Matrix::Zero(2, 11)), PathMatrix(g, Matrix::Zero(2, 11)),
                       CountingRecord::survival(g, {4, -1}));
  for (double v : estimate_lcm_plugin(zero_x, ConstantIntensity(2.0)).gamma) CHECK(v == 0.0);

  const Dataset one(PathMatrix(g, Matrix::Ones(1, 11)), PathMatrix(g, Matrix::Zero(1, 11)),
                    CountingRecord::survival(g, {4}));
  const auto p = estimate_lcm_plugin(one, ConstantIntensity(0.5));
  for (Index i = 0; i < 11; ++i) {
    const double t = g[i];
    const double expected = (i >= 4 ? 1.0 : 0.0) - 0.5 * std::min(t, g[4]);
    CHECK(p.gamma[static_cast<std::size_t>(i)] == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(p.method == LcmMethod::plug_in);
}

TEST_CASE("estimator is linear in the residual") {
  const Dataset d = fixture::random_dataset(6, 5, 4);
  RandomStream rs(1, 2);
  Matrix a(6, 5), b(6, 5);
  for (Index j = 0; j < 6; ++j)
    for (Index l = 0; l < 5; ++l) {
      a(j, l) = rs.normal();
      b(j, l) = rs.normal();
    }
  const TrainSplit split{{}, iota(6)};
  const ConstantIntensity lam(1.3);
  const auto pa = estimate_lcm_split(d, split, MatrixResidual(a), lam);
  const auto pb = estimate_lcm_split(d, split, MatrixResidual(b), lam);
  const auto pc = estimate_lcm_split(d, split, MatrixResidual(2.0 * a - 0.5 * b), lam);
  for (std::size_t i = 0; i < pa.gamma.size(); ++i) {
    CHECK(pc.gamma[i] == doctest::Approx(2.0 * pa.gamma[i] - 0.5 * pb.gamma[i]).epsilon(1e-13));
  }
}

TEST_CASE("fold partitions") {
  const auto p = FoldPartition::make(23, 5, 9);
  std::set<Index> all;
  std::size_t lo = 100, hi = 0;
  for (Index k = 0; k < 5; ++k) {
    lo = std::min(lo, p.fold(k).size());
    hi = std::max(hi, p.fold(k).size());
    for (Index j : p.fold(k)) CHECK(all.insert(j).second);
    const auto s = p.split(k);
    CHECK(s.eval == p.fold(k));
    CHECK(s.train.size() + s.eval.size() == 23);
  }
  CHECK(all.size() == 23);
  CHECK(hi - lo <= 1);
  const auto q = FoldPartition::make(23, 5, 9);
  for (Index k = 0; k < 5; ++k) CHECK(q.fold(k) == p.fold(k));
  CHECK_THROWS_AS(FoldPartition::make(10, 1, 0), DomainError);
  CHECK_THROWS_AS(FoldPartition::make(3, 5, 0), InputError);
}

TEST_CASE("cross-fitting averages fold estimates") {
  const Dataset d = fixture::random_dataset(20, 6, 31);
  const auto part = FoldPartition::make(20, 4, 2);
  SUBCASE("identical fold paths") {
    // With G = 0 every fold path is identically zero.
    const FixedLearner stub(std::make_shared<ConstantResidual>(0.0), std::make_shared<ConstantIntensity>(1.0));
    const auto cf = estimate_lcm_crossfit(d, part, stub);
    for (double g : cf.path.gamma) CHECK(g == 0.0);
    CHECK(cf.path.K == 4);
    CHECK(cf.path.scale_n == 20.0);
  }
  SUBCASE("mean of the fold-wise split estimates") {
    const auto res = std::make_shared<ConstantResidual>(1.5);
    const auto lam = std::make_shared<ConstantIntensity>(0.8);
    const FixedLearner stub(res, lam);
    const auto cf = estimate_lcm_crossfit(d, part, stub);
    std::vector<double> mean(6, 0.0), var(6, 0.0);
    for (Index k = 0; k < 4; ++k) {
      const auto p = estimate_lcm_split(d, part.split(k), *res, *lam);
      for (std::size_t i = 0; i < 6; ++i) {
        mean[i] += p.gamma[i] / 4.0;
        var[i] += p.variance[i] / 4.0;
      }
    }
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(cf.path.gamma[i] == doctest::Approx(mean[i]).epsilon(1e-14));
      CHECK(cf.path.variance[i] == doctest::Approx(var[i]).epsilon(1e-14));
    }
    CHECK(cf.folds.size() == 4);
  }
  SUBCASE("learner failures name the fold") {
    const TimeGrid g(6);
    const Dataset no_events(d.x, d.z, CountingRecord::survival(g, std::vector<Index>(20, -1)));
    const ConfiguredLearner learner(LearnerConfig{});
    CHECK_THROWS_WITH_AS(estimate_lcm_crossfit(no_events, part, learner), doctest::Contains("fold 0"), InputError);
  }
}

TEST_CASE("LCM path CSV") {
  LcmPath p{TimeGrid(3), {0, 0.5, -1}, {0, 1, 2}, 10, LcmMethod::cross_fit, 5};
  std::ostringstream os;
  write_csv(os, p);
  const std::string s = os.str();
  CHECK(s.rfind("t,gamma,variance,scale_n,method\n", 0) == 0);
  CHECK(s.find("1,-1,2,10,\"cross_fit(5)\"") != std::string::npos);
}
