#include "clit/learners.hpp"

#include "clit/errors.hpp"
#include "clit/poisson_irls.hpp"
#include "clit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace clit {

TrainSplit TrainSplit::make(Index n, std::vector<Index> train, std::vector<Index> eval) {
  if (train.empty() || eval.empty()) throw InputError("train and eval sets must both be non-empty");
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (const auto* set : {&train, &eval}) {
    for (Index j : *set) {
      if (j < 0 || j >= n) throw InputError("subject index " + std::to_string(j) + " out of range");
      if (seen[static_cast<std::size_t>(j)]++) throw InputError("subject " + std::to_string(j) + " appears twice in split");
    }
  }
  if (static_cast<Index>(train.size() + eval.size()) != n) throw InputError("split does not cover all subjects");
  return TrainSplit{std::move(train), std::move(eval)};
}

// ---------------------------------------------------------------------------
// Additive residual
// ---------------------------------------------------------------------------

AdditiveResidual::AdditiveResidual(std::vector<double> intercept, std::vector<std::vector<double>> coef,
                                   double g_cap)
    : intercept_(std::move(intercept)), coef_(std::move(coef)), g_cap_(g_cap) {
  if (intercept_.size() != coef_.size()) throw DimensionError("intercept and coefficient tables differ in length");
  for (std::size_t l = 0; l < coef_.size(); ++l) {
    if (coef_[l].size() != l) throw DimensionError("coefficient vector at index l must have length l");
  }
}

Matrix AdditiveResidual::projection(const Dataset& data, std::span<const Index> rows) const {
  const Index q = data.grid().size();
  if (static_cast<Index>(intercept_.size()) != q) throw DimensionError("residual model fitted on a different grid");
  Matrix pi(static_cast<Index>(rows.size()), q);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto z = data.z.row(rows[r]);
    for (Index l = 0; l < q; ++l) {
      const auto& c = coef_[static_cast<std::size_t>(l)];
      double acc = intercept_[static_cast<std::size_t>(l)];
      for (Index i = 0; i < l; ++i) acc += c[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
      pi(static_cast<Index>(r), l) = acc;
    }
  }
  return pi;
}

Matrix AdditiveResidual::residuals(const Dataset& data, std::span<const Index> rows) const {
  Matrix g = projection(data, rows);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    g.row(static_cast<Index>(r)) = data.x.values.row(rows[r]) - g.row(static_cast<Index>(r));
  }
  if (std::isfinite(g_cap_)) g = g.cwiseMax(-g_cap_).cwiseMin(g_cap_);
  return g;
}

std::shared_ptr<const AdditiveResidual> fit_additive_residual(const Dataset& data, const TrainSplit& split,
                                                              double ridge, const Caps& caps) {
  if (ridge < 0.0) throw DomainError("ridge penalty must be non-negative");
  if (split.train.size() < 2) throw InputError("residual learner needs at least 2 training subjects");
  const Index q = data.grid().size();
  const auto& rec = data.record;
  const Matrix& Z = data.z.values;
  const Matrix& X = data.x.values;

  // Active (at-risk) training subjects, ordered so that the ones leaving
  // first sit at the back.
  std::vector<Index> active(split.train.begin(), split.train.end());
  std::stable_sort(active.begin(), active.end(),
                   [&](Index a, Index b) { return rec.at_risk_end(a) > rec.at_risk_end(b); });

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(q, q);
  Vector zsum = Vector::Zero(q);
  double xsum_all = 0.0, xsq_all = 0.0;
  for (Index j : active) {
    const auto zj = Z.row(j).transpose();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(zj);
    zsum += zj;
    xsum_all += X.row(j).sum();
    xsq_all += X.row(j).squaredNorm();
  }
  const double cells = static_cast<double>(active.size()) * static_cast<double>(q);
  const double xvar = std::max(0.0, xsq_all / cells - (xsum_all / cells) * (xsum_all / cells));
  const double g_cap = caps.g * std::sqrt(xvar);

  std::vector<double> intercept(static_cast<std::size_t>(q), 0.0);
  std::vector<std::vector<double>> coef(static_cast<std::size_t>(q));

  for (Index l = 0; l < q; ++l) {
    while (!active.empty() && rec.at_risk_end(active.back()) < l) {
      const auto zj = Z.row(active.back()).transpose();
      gram.selfadjointView<Eigen::Lower>().rankUpdate(zj, -1.0);
      zsum -= zj;
      active.pop_back();
    }
    auto& c = coef[static_cast<std::size_t>(l)];
    c.assign(static_cast<std::size_t>(l), 0.0);
    const auto m = static_cast<Index>(active.size());
    if (m < 2) {
      // Too few at-risk training subjects: carry the previous fit forward.
      if (l == 0) throw InputError("residual learner needs at least 2 at-risk training subjects");
      const auto& prev = coef[static_cast<std::size_t>(l - 1)];
      std::copy(prev.begin(), prev.end(), c.begin());
      intercept[static_cast<std::size_t>(l)] = intercept[static_cast<std::size_t>(l - 1)];
      continue;
    }

    double xbar = 0.0;
    Vector cross = Vector::Zero(l);
    for (Index j : active) {
      const double xj = X(j, l);
      xbar += xj;
      if (l > 0) cross.noalias() += xj * Z.row(j).head(l).transpose();
    }
    xbar /= static_cast<double>(m);
    if (l == 0) {
      intercept[0] = xbar;
      continue;
    }
    const Vector zbar = zsum.head(l) / static_cast<double>(m);
    Eigen::MatrixXd a = gram.topLeftCorner(l, l).selfadjointView<Eigen::Lower>();
    a.noalias() -= static_cast<double>(m) * zbar * zbar.transpose();
    const Vector rhs = cross - static_cast<double>(m) * xbar * zbar;
    a.diagonal().array() += ridge;

    Eigen::LLT<Eigen::MatrixXd> llt(a);
    Vector b;
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-13) {
      b = llt.solve(rhs);
    } else if (ridge == 0.0) {
      throw IllConditionedError("singular normal equations at grid index " + std::to_string(l) +
                                " (ridge = 0); use a positive ridge penalty");
    } else {
      b = a.ldlt().solve(rhs);
    }
    for (Index i = 0; i < l; ++i) c[static_cast<std::size_t>(i)] = b[i];
    intercept[static_cast<std::size_t>(l)] = xbar - zbar.dot(b);
  }
  return std::make_shared<AdditiveResidual>(std::move(intercept), std::move(coef), g_cap);
}

// ---------------------------------------------------------------------------
// Quantile residual (time-independent X)
// ---------------------------------------------------------------------------

QuantileResidual::QuantileResidual(std::vector<double> z0_cuts,
                                   std::vector<std::vector<std::vector<double>>> tables)
    : z0_cuts_(std::move(z0_cuts)), tables_(std::move(tables)) {
  if (tables_.size() != z0_cuts_.size() + 1) throw DimensionError("quantile residual: strata/cut mismatch");
}

namespace {

std::size_t stratum_of(const std::vector<double>& cuts, double z0) {
  return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), z0) - cuts.begin());
}

}  // namespace

Matrix QuantileResidual::residuals(const Dataset& data, std::span<const Index> rows) const {
  const Index q = data.grid().size();
  Matrix g = Matrix::Zero(static_cast<Index>(rows.size()), q);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index j = rows[r];
    const double xj = data.x.values(j, 0);
    const auto& strat = tables_[stratum_of(z0_cuts_, data.z.values(j, 0))];
    for (Index l = 0; l < q; ++l) {
      const auto& sorted = strat[static_cast<std::size_t>(l)];
      if (sorted.empty()) continue;
      const auto lo = std::lower_bound(sorted.begin(), sorted.end(), xj);
      const auto hi = std::upper_bound(lo, sorted.end(), xj);
      const double below = static_cast<double>(lo - sorted.begin());
      const double ties = static_cast<double>(hi - lo);
      g(static_cast<Index>(r), l) = (below + 0.5 * ties) / static_cast<double>(sorted.size()) - 0.5;
    }
  }
  return g;
}

std::shared_ptr<const QuantileResidual> fit_quantile_residual(const Dataset& data, const TrainSplit& split,
                                                              Index strata) {
  if (strata < 1) throw DomainError("need at least one stratum");
  if (split.train.empty()) throw InputError("quantile residual needs training subjects");
  const Index q = data.grid().size();

  std::vector<double> z0;
  for (Index j : split.train) z0.push_back(data.z.values(j, 0));
  std::sort(z0.begin(), z0.end());
  std::vector<double> cuts;
  for (Index s = 1; s < strata; ++s) {
    cuts.push_back(z0[static_cast<std::size_t>(s * static_cast<Index>(z0.size()) / strata)]);
  }

  std::vector<std::vector<std::vector<double>>> tables(
      static_cast<std::size_t>(strata), std::vector<std::vector<double>>(static_cast<std::size_t>(q)));
  for (Index j : split.train) {
    auto& strat = tables[stratum_of(cuts, data.z.values(j, 0))];
    const Index end = std::min(data.record.at_risk_end(j), q - 1);
    for (Index l = 0; l <= end; ++l) strat[static_cast<std::size_t>(l)].push_back(data.x.values(j, 0));
  }
  for (auto& strat : tables) {
    for (auto& col : strat) std::sort(col.begin(), col.end());
  }
  return std::make_shared<QuantileResidual>(std::move(cuts), std::move(tables));
}

Matrix ConstantResidual::residuals(const Dataset& data, std::span<const Index> rows) const {
  return Matrix::Constant(static_cast<Index>(rows.size()), data.grid().size(), value_);
}

// ---------------------------------------------------------------------------
// Intensities
// ---------------------------------------------------------------------------

namespace {

Index feature_count(const IntensityFeatures& f) {
  return 1 + (f.time_bins - 1) + (f.current_z ? 1 : 0) + (f.cumulative_z ? 1 : 0);
}

Index time_bin(double t, Index bins) {
  return std::min(bins - 1, static_cast<Index>(std::floor(t * static_cast<double>(bins))));
}

// Writes the feature vector of (subject j, index l) into out; cum is the
// running left-Riemann integral sum_{i<l} Z_i dt.
template <class Out>
void fill_features(const IntensityFeatures& f, double t, double z, double cum, Out&& out) {
  Index k = 0;
  out(k++) = 1.0;
  const Index b = time_bin(t, f.time_bins);
  for (Index bb = 1; bb < f.time_bins; ++bb) out(k++) = (bb == b) ? 1.0 : 0.0;
  if (f.current_z) out(k++) = z;
  if (f.cumulative_z) out(k++) = cum;
}

Matrix mask_and_clip(Matrix lam, const Dataset& data, std::span<const Index> rows, double cap) {
  const Index q = data.grid().size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index end = data.record.at_risk_end(rows[r]);
    for (Index l = 0; l < q; ++l) {
      double& v = lam(static_cast<Index>(r), l);
      v = (l <= end) ? std::clamp(v, 0.0, cap) : 0.0;
    }
  }
  return lam;
}

}  // namespace

LoglinearIntensity::LoglinearIntensity(IntensityFeatures features, Vector coef, double lambda_cap,
                                       PoissonFitInfo info)
    : features_(features), coef_(std::move(coef)), lambda_cap_(lambda_cap), info_(info) {
  if (coef_.size() != feature_count(features_)) throw DimensionError("intensity coefficient length mismatch");
}

Matrix LoglinearIntensity::intensity(const Dataset& data, std::span<const Index> rows) const {
  const Index q = data.grid().size();
  const double dt = data.grid().step();
  const auto& g = data.grid();
  Matrix lam(static_cast<Index>(rows.size()), q);
  Vector feat(coef_.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto z = data.z.row(rows[r]);
    double cum = 0.0;
    for (Index l = 0; l < q; ++l) {
      fill_features(features_, g[l], z[static_cast<std::size_t>(l)], cum, [&](Index k) -> double& { return feat[k]; });
      lam(static_cast<Index>(r), l) = std::exp(feat.dot(coef_));
      cum += z[static_cast<std::size_t>(l)] * dt;
    }
  }
  return mask_and_clip(std::move(lam), data, rows, lambda_cap_);
}

std::shared_ptr<const LoglinearIntensity> fit_historical_loglinear_intensity(const Dataset& data,
                                                                             const TrainSplit& split,
                                                                             const IntensityConfig& cfg,
                                                                             const Caps& caps) {
  if (cfg.ridge < 0.0) throw DomainError("ridge penalty must be non-negative");
  if (cfg.features.time_bins < 1) throw DomainError("need at least one time bin");
  const Index q = data.grid().size();
  const double dt = data.grid().step();
  const auto& g = data.grid();
  const auto& rec = data.record;

  Index rows = 0;
  double events = 0.0;
  for (Index j : split.train) {
    rows += std::min(rec.at_risk_end(j), q - 1);
    events += static_cast<double>(rec.events(j).size());
  }
  if (events <= 0.0) throw InputError("intensity learner needs at least one event in the training set");

  const Index p = feature_count(cfg.features);
  PoissonProblem pr;
  pr.design.resize(rows, p);
  pr.outcome = Vector::Zero(rows);
  pr.offset = Vector::Constant(rows, std::log(dt));
  pr.penalty = Vector::Ones(p);
  pr.penalty[0] = 0.0;

  Index r = 0;
  for (Index j : split.train) {
    const auto z = data.z.row(j);
    const Index end = std::min(rec.at_risk_end(j), q - 1);
    double cum = z[0] * dt;
    for (Index l = 1; l <= end; ++l, ++r) {
      fill_features(cfg.features, g[l], z[static_cast<std::size_t>(l)], cum,
                    [&](Index k) -> double& { return pr.design(r, k); });
      cum += z[static_cast<std::size_t>(l)] * dt;
    }
    for (Index e : rec.events(j)) pr.outcome[r - end + e - 1] += 1.0;
  }

  Vector start = Vector::Zero(p);
  start[0] = std::log(events / (static_cast<double>(rows) * dt));

  PoissonResult fit = fit_penalized_poisson(pr, cfg.ridge, cfg.max_iter, cfg.tolerance, start);
  if (cfg.ridge == 0.0) {
    // Bins without events drive their contrast to -infinity.
    for (Index k = 1; k < cfg.features.time_bins; ++k) {
      if (pr.design.col(k).dot(pr.outcome) == 0.0 && pr.design.col(k).sum() > 0.0) fit.info.separation = true;
    }
    if (fit.info.separation) {
      fit = fit_penalized_poisson(pr, 1.0, cfg.max_iter, cfg.tolerance, start);
      fit.info.separation = true;
    }
  }
  return std::make_shared<LoglinearIntensity>(cfg.features, fit.coef, caps.lambda, fit.info);
}

Matrix OracleIntensity::intensity(const Dataset& data, std::span<const Index> rows) const {
  const Index q = data.grid().size();
  const auto& g = data.grid();
  Matrix lam(static_cast<Index>(rows.size()), q);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Index l = 0; l < q; ++l) {
      lam(static_cast<Index>(r), l) = beta1_ * g[l] * g[l] * std::exp(beta2_ * data.z.values(rows[r], l));
    }
  }
  return mask_and_clip(std::move(lam), data, rows, std::numeric_limits<double>::infinity());
}

ConstantIntensity::ConstantIntensity(double value) : value_(value) {
  if (value < 0.0) throw DomainError("constant intensity must be non-negative");
}

Matrix ConstantIntensity::intensity(const Dataset& data, std::span<const Index> rows) const {
  Matrix lam = Matrix::Constant(static_cast<Index>(rows.size()), data.grid().size(), value_);
  return mask_and_clip(std::move(lam), data, rows, std::numeric_limits<double>::infinity());
}

OracleNuisances oracle_nuisances(const DgpConfig& cfg) {
  if (!is_oracle_scenario(cfg)) {
    throw UnsupportedError("oracle nuisances need kernel_y = zero, no Y noise and no local alternative");
  }
  const double beta1 = cfg.beta1 ? *cfg.beta1 : calibrate_beta1(cfg);
  const TimeGrid grid(cfg.q);
  const double dt = grid.step();
  std::vector<double> intercept(static_cast<std::size_t>(cfg.q), 0.0);
  std::vector<std::vector<double>> coef(static_cast<std::size_t>(cfg.q));
  for (Index l = 0; l < cfg.q; ++l) {
    auto& c = coef[static_cast<std::size_t>(l)];
    c.resize(static_cast<std::size_t>(l));
    for (Index i = 0; i < l; ++i) c[static_cast<std::size_t>(i)] = kernel_eval(cfg.kernel_x, grid[i], grid[l]) * dt;
  }
  return {std::make_shared<AdditiveResidual>(std::move(intercept), std::move(coef),
                                             std::numeric_limits<double>::infinity()),
          std::make_shared<OracleIntensity>(beta1, cfg.beta2)};
}

std::shared_ptr<const FittedResidual> ConfiguredLearner::fit_residual(const Dataset& data,
                                                                      const TrainSplit& split) const {
  switch (cfg_.residual_kind) {
    case ResidualKind::additive:
      return fit_additive_residual(data, split, cfg_.residual_ridge, cfg_.caps);
    case ResidualKind::time_independent_quantile:
      return fit_quantile_residual(data, split, cfg_.quantile_strata);
    case ResidualKind::constant:
      break;
  }
  throw UnsupportedError("constant residuals are not fitted");
}

std::shared_ptr<const FittedIntensity> ConfiguredLearner::fit_intensity(const Dataset& data,
                                                                        const TrainSplit& split) const {
  return fit_historical_loglinear_intensity(data, split, cfg_.intensity, cfg_.caps);
}

}  // namespace clit
