#include "clit/errors.hpp"
#include "clit/learners.hpp"
#include "clit/poisson_irls.hpp"
#include "clit/sim.hpp"

#include "doctest.h"
#include "fixtures.hpp"

#include <cmath>

using namespace clit;
using fixture::iota;

namespace {

// Dataset where X_l is an exact affine function of Z_0..Z_{l-1}.
Dataset linear_history_dataset(Index n, Index q, std::uint64_t seed) {
  Dataset d = fixture::random_dataset(n, q, seed, 1.0);  // everyone censored: full risk sets
  Matrix x(n, q);
  for (Index j = 0; j < n; ++j) {
    for (Index l = 0; l < q; ++l) {
      double v = 0.5 + 0.1 * static_cast<double>(l);
      for (Index i = 0; i < l; ++i) v += (0.3 - 0.05 * static_cast<double>(i)) * d.z.values(j, i);
      x(j, l) = v;
    }
  }
  return Dataset(PathMatrix(d.grid(), x), d.z, d.record);
}

}  // namespace

TEST_CASE("train/eval splits are validated") {
  CHECK_NOTHROW(TrainSplit::make(4, {0, 1}, {2, 3}));
  CHECK_THROWS_AS(TrainSplit::make(4, {0, 1}, {1, 3}), InputError);
  CHECK_THROWS_AS(TrainSplit::make(4, {0, 1}, {2}), InputError);
  CHECK_THROWS_AS(TrainSplit::make(4, {}, {0, 1, 2, 3}), InputError);
  CHECK_THROWS_AS(TrainSplit::make(4, {0, 1, 2}, {7}), InputError);
}

TEST_CASE("additive residual recovers an exact linear history model") {
  const Dataset d = linear_history_dataset(40, 6, 5);
  const auto split = TrainSplit::make(40, iota(30), iota(10, 30));
  const auto fit = fit_additive_residual(d, split, 0.0, Caps{50.0, 1e9});
  const Matrix g = fit->residuals(d, split.eval);
  CHECK(g.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(fit->coefficients()[3][1] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(fit->intercept()[2] == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("additive residual matches a direct least-squares oracle") {
  const Dataset d = fixture::random_dataset(25, 5, 17, 0.3);
  const auto split = TrainSplit::make(25, iota(20), iota(5, 20));
  const double ridge = 0.7;
  const auto fit = fit_additive_residual(d, split, ridge, Caps{50.0, 1e9});
  for (Index l = 1; l < 5; ++l) {
    std::vector<Index> rows;
    for (Index j : split.train)
      if (d.record.at_risk(j, l)) rows.push_back(j);
    // Penalised least squares with an unpenalised intercept, solved on the
    // augmented uncentred system.
    const Index m = static_cast<Index>(rows.size());
    Eigen::MatrixXd A(m + l, l + 1);
    Eigen::VectorXd y(m + l);
    A.setZero();
    y.setZero();
    for (Index r = 0; r < m; ++r) {
      A(r, 0) = 1.0;
      for (Index i = 0; i < l; ++i) A(r, i + 1) = d.z.values(rows[static_cast<std::size_t>(r)], i);
      y[r] = d.x.values(rows[static_cast<std::size_t>(r)], l);
    }
    for (Index i = 0; i < l; ++i) A(m + i, i + 1) = std::sqrt(ridge);
    const Eigen::VectorXd beta = A.colPivHouseholderQr().solve(y);
    CHECK(fit->intercept()[static_cast<std::size_t>(l)] == doctest::Approx(beta[0]).epsilon(1e-9));
    for (Index i = 0; i < l; ++i) {
      CHECK(fit->coefficients()[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)] ==
            doctest::Approx(beta[i + 1]).epsilon(1e-9));
    }
  }
}

TEST_CASE("residual learner only reads the training rows") {
  const Dataset d = fixture::random_dataset(30, 6, 3);
  const auto split = TrainSplit::make(30, iota(20), iota(10, 20));
  Matrix x2 = d.x.values, z2 = d.z.values;
  for (Index j : split.eval) {
    x2.row(j).array() += 100.0;
    z2.row(j).array() *= -3.0;
  }
  const Dataset d2(PathMatrix(d.grid(), x2), PathMatrix(d.grid(), z2), d.record);
  const auto a = fit_additive_residual(d, split, 1e-3);
  const auto b = fit_additive_residual(d2, split, 1e-3);
  CHECK(a->coefficients() == b->coefficients());
  CHECK(a->intercept() == b->intercept());
}

TEST_CASE("projection at index l ignores Z at indices >= l") {
  const Dataset d = fixture::random_dataset(30, 6, 4);
  const auto split = TrainSplit::make(30, iota(20), iota(10, 20));
  const auto fit = fit_additive_residual(d, split, 1e-3);
  const Index l = 3;
  Matrix z2 = d.z.values;
  for (Index j : split.eval)
    for (Index i = l; i < 6; ++i) z2(j, i) += 5.0;
  const Dataset d2(d.x, PathMatrix(d.grid(), z2), d.record);
  const Matrix p1 = fit->projection(d, split.eval), p2 = fit->projection(d2, split.eval);
  for (Index r = 0; r < p1.rows(); ++r)
    for (Index k = 0; k <= l; ++k) CHECK(p1(r, k) == p2(r, k));
}

TEST_CASE("unpenalised singular systems are reported") {
  Dataset d = fixture::random_dataset(10, 4, 8, 1.0);
  const Matrix z = Matrix::Ones(10, 4);
  const Dataset flat(d.x, PathMatrix(d.grid(), z), d.record);
  const auto split = TrainSplit::make(10, iota(8), iota(2, 8));
  CHECK_THROWS_AS(fit_additive_residual(flat, split, 0.0), IllConditionedError);
  CHECK_NOTHROW(fit_additive_residual(flat, split, 1.0));
}

TEST_CASE("residual cap clips extreme values") {
  const TimeGrid g(3);
  AdditiveResidual r({0, 0, 0}, {{}, {0}, {0, 0}}, 2.0);
  Matrix x(1, 3);
  x << 5, -7, 1;
  const Dataset d(PathMatrix(g, x), PathMatrix(g, Matrix::Zero(1, 3)), CountingRecord::survival(g, {-1}));
  const std::vector<Index> rows{0};
  const Matrix res = r.residuals(d, rows);
  CHECK(res(0, 0) == 2.0);
  CHECK(res(0, 1) == -2.0);
  CHECK(res(0, 2) == 1.0);
}

TEST_CASE("quantile residual is the centred mid-rank among at-risk training subjects") {
  const TimeGrid g(3);
  Matrix x(5, 3);
  for (Index j = 0; j < 5; ++j) x.row(j).setConstant(static_cast<double>(j));
  // Subject 4 leaves after index 1.
  const Dataset d(PathMatrix(g, x), PathMatrix(g, Matrix::Zero(5, 3)), CountingRecord::survival(g, {-1, -1, -1, -1, 1}));
  const auto split = TrainSplit::make(5, {1, 2, 3, 4}, {0});
  const auto fit = fit_quantile_residual(d, split);
  const std::vector<Index> rows{0, 2};
  const Matrix r = fit->residuals(d, rows);
  CHECK(r(0, 0) == doctest::Approx(-0.5));
  CHECK(r(1, 0) == doctest::Approx(1.5 / 4.0 - 0.5));  // ties count one half
  CHECK(r(1, 2) == doctest::Approx(1.5 / 3.0 - 0.5));
}

TEST_CASE("intercept-only Poisson fit reproduces events over exposure") {
  const Dataset d = fixture::random_dataset(50, 9, 21, 0.3);
  const auto split = TrainSplit::make(50, iota(40), iota(10, 40));
  IntensityConfig cfg;
  cfg.features = IntensityFeatures{1, false, false};
  const auto fit = fit_historical_loglinear_intensity(d, split, cfg);
  double events = 0, exposure = 0;
  for (Index j : split.train) {
    events += static_cast<double>(d.record.events(j).size());
    exposure += static_cast<double>(std::min<Index>(d.record.at_risk_end(j), 8)) * d.grid().step();
  }
  CHECK(std::exp(fit->coefficients()[0]) == doctest::Approx(events / exposure).epsilon(1e-8));
  CHECK(fit->info().converged);

  const Matrix lam = fit->intensity(d, split.eval);
  for (Index r = 0; r < lam.rows(); ++r) {
    const Index j = split.eval[static_cast<std::size_t>(r)];
    for (Index l = 0; l < 9; ++l) {
      if (l > d.record.at_risk_end(j)) CHECK(lam(r, l) == 0.0);
    }
  }
}

TEST_CASE("IRLS objective is non-increasing and iteration limits raise") {
  RandomStream rs(3, 0);
  PoissonProblem pr;
  const Index m = 300;
  pr.design.resize(m, 3);
  pr.outcome.resize(m);
  pr.offset = Vector::Zero(m);
  pr.penalty = Vector::Ones(3);
  pr.penalty[0] = 0;
  for (Index i = 0; i < m; ++i) {
    pr.design(i, 0) = 1;
    pr.design(i, 1) = rs.normal();
    pr.design(i, 2) = rs.normal();
    pr.outcome[i] = static_cast<double>(rs.below(4));
  }
  const auto res = fit_penalized_poisson(pr, 0.5, 50, 1e-12, Vector::Zero(3));
  for (std::size_t k = 1; k < res.objective_trace.size(); ++k) {
    CHECK(res.objective_trace[k] <= res.objective_trace[k - 1]);
  }
  // Stationarity: penalised score vanishes at the optimum.
  const Vector mu = ((pr.design * res.coef) + pr.offset).array().exp();
  const Vector score = pr.design.transpose() * (pr.outcome - mu) - 0.5 * pr.penalty.cwiseProduct(res.coef);
  CHECK(score.cwiseAbs().maxCoeff() < 1e-6);
  try {
    fit_penalized_poisson(pr, 0.5, 1, 1e-300, Vector::Constant(3, 3.0));
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(std::isfinite(e.last_deviance()));
  }
}

TEST_CASE("intensity learner needs events and caps the prediction") {
  const TimeGrid g(5);
  const Dataset none(PathMatrix(g, Matrix::Zero(4, 5)), PathMatrix(g, Matrix::Zero(4, 5)),
                     CountingRecord::survival(g, {-1, -1, -1, -1}));
  const auto split = TrainSplit::make(4, {0, 1}, {2, 3});
  CHECK_THROWS_AS(fit_historical_loglinear_intensity(none, split, IntensityConfig{}), InputError);

  LoglinearIntensity big(IntensityFeatures{1, false, false}, Vector::Constant(1, 10.0), 50.0, {});
  const std::vector<Index> rows{0};
  CHECK(big.intensity(none, rows).maxCoeff() == 50.0);
}

TEST_CASE("oracle nuisances only exist in the oracle scenario") {
  DgpConfig cfg;
  cfg.n = 10;
  cfg.q = 8;
  cfg.beta1 = 4.0;
  CHECK_THROWS_AS(oracle_nuisances(cfg), UnsupportedError);
  cfg.kernel_y = KernelKind::zero;
  cfg.y_noise = false;
  const auto o = oracle_nuisances(cfg);
  CHECK(o.residual->coefficients()[3][1] == doctest::Approx(1.0 / 7.0));
  CHECK(std::isinf(o.residual->g_cap()));
}
