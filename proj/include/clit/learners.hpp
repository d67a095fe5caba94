#pragma once

// Nuisance learners. A fitted residual model maps a subject's observed
// history to the residual path G_hat; a fitted intensity maps it to the
// F-intensity path lambda_hat. Fitting only ever reads the training rows.

#include "clit/core.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace clit {

struct DgpConfig;

// J_n (eval) and its complement (train).
struct TrainSplit {
  std::vector<Index> train;
  std::vector<Index> eval;

  // Validates disjointness, completeness over {0..n-1} and non-emptiness.
  static TrainSplit make(Index n, std::vector<Index> train, std::vector<Index> eval);
};

struct Caps {
  double lambda = 50.0;
  // Multiplier: |G_hat| <= g * sd(X over the training rows).
  double g = 10.0;
};

enum class ResidualKind { additive, time_independent_quantile, constant };
enum class IntensityKind { historical_loglinear, oracle, constant };

class FittedResidual {
 public:
  virtual ~FittedResidual() = default;
  virtual ResidualKind kind() const = 0;
  // |rows| x q matrix of residuals G_hat for the given subjects.
  virtual Matrix residuals(const Dataset& data, std::span<const Index> rows) const = 0;
};

class FittedIntensity {
 public:
  virtual ~FittedIntensity() = default;
  virtual IntensityKind kind() const = 0;
  // |rows| x q matrix of lambda_hat; zero at indices after at_risk_end.
  virtual Matrix intensity(const Dataset& data, std::span<const Index> rows) const = 0;
};

// G_hat = X - Pi_hat with Pi_hat_l = intercept_l + sum_{i<l} coef_l[i] Z_i.
class AdditiveResidual final : public FittedResidual {
 public:
  AdditiveResidual(std::vector<double> intercept, std::vector<std::vector<double>> coef, double g_cap);
  ResidualKind kind() const override { return ResidualKind::additive; }
  Matrix residuals(const Dataset& data, std::span<const Index> rows) const override;
  Matrix projection(const Dataset& data, std::span<const Index> rows) const;

  const std::vector<double>& intercept() const { return intercept_; }
  const std::vector<std::vector<double>>& coefficients() const { return coef_; }
  double g_cap() const { return g_cap_; }

 private:
  std::vector<double> intercept_;
  std::vector<std::vector<double>> coef_;
  double g_cap_;  // infinity disables clipping
};

// Time-independent X (column 0 is used): G_hat_t = F_hat_t(X) - 1/2 where
// F_hat_t is the mid-rank empirical CDF of X among training subjects at risk
// at t, optionally within quantile strata of the baseline covariate Z_0.
class QuantileResidual final : public FittedResidual {
 public:
  QuantileResidual(std::vector<double> z0_cuts, std::vector<std::vector<std::vector<double>>> tables);
  ResidualKind kind() const override { return ResidualKind::time_independent_quantile; }
  Matrix residuals(const Dataset& data, std::span<const Index> rows) const override;

 private:
  std::vector<double> z0_cuts_;
  // tables_[stratum][l] = sorted X values of at-risk training subjects.
  std::vector<std::vector<std::vector<double>>> tables_;
};

// G_hat identically equal to a constant; a stub for tests and diagnostics.
class ConstantResidual final : public FittedResidual {
 public:
  explicit ConstantResidual(double value) : value_(value) {}
  ResidualKind kind() const override { return ResidualKind::constant; }
  Matrix residuals(const Dataset& data, std::span<const Index> rows) const override;

 private:
  double value_;
};

struct IntensityFeatures {
  Index time_bins = 8;          // piecewise-constant log baseline
  bool current_z = true;        // Z_{t_l}
  bool cumulative_z = true;     // sum_{i<l} Z_{t_i} dt
};

struct PoissonFitInfo {
  int iterations = 0;
  double deviance = 0.0;
  bool converged = false;
  bool separation = false;
  double ridge_used = 0.0;
};

// log lambda_l = intercept + sum_b bin_b(t_l) + beta_z Z_l + beta_c C_l, with
// bins 2..B as contrasts against bin 1 so the unpenalised intercept is the
// infinite-penalty limit.
class LoglinearIntensity final : public FittedIntensity {
 public:
  LoglinearIntensity(IntensityFeatures features, Vector coef, double lambda_cap, PoissonFitInfo info);
  IntensityKind kind() const override { return IntensityKind::historical_loglinear; }
  Matrix intensity(const Dataset& data, std::span<const Index> rows) const override;

  const Vector& coefficients() const { return coef_; }
  const IntensityFeatures& features() const { return features_; }
  const PoissonFitInfo& info() const { return info_; }

 private:
  IntensityFeatures features_;
  Vector coef_;
  double lambda_cap_;
  PoissonFitInfo info_;
};

// lambda_t = beta1 t^2 exp(beta2 Z_t) on at-risk indices.
class OracleIntensity final : public FittedIntensity {
 public:
  OracleIntensity(double beta1, double beta2) : beta1_(beta1), beta2_(beta2) {}
  IntensityKind kind() const override { return IntensityKind::oracle; }
  Matrix intensity(const Dataset& data, std::span<const Index> rows) const override;

 private:
  double beta1_, beta2_;
};

class ConstantIntensity final : public FittedIntensity {
 public:
  explicit ConstantIntensity(double value);
  IntensityKind kind() const override { return IntensityKind::constant; }
  Matrix intensity(const Dataset& data, std::span<const Index> rows) const override;

 private:
  double value_;
};

// Regress X_{t_l} on [1, Z_{t_0}, ..., Z_{t_{l-1}}] by ridge least squares
// (intercept unpenalised) over training subjects at risk at t_l, for every
// grid index l. ridge = 0 with a singular system is an IllConditionedError.
std::shared_ptr<const AdditiveResidual> fit_additive_residual(const Dataset& data, const TrainSplit& split,
                                                              double ridge, const Caps& caps = {});

std::shared_ptr<const QuantileResidual> fit_quantile_residual(const Dataset& data, const TrainSplit& split,
                                                              Index strata = 1);

struct IntensityConfig {
  double ridge = 1.0;
  IntensityFeatures features;
  int max_iter = 50;
  double tolerance = 1e-8;
};

// Penalised Poisson regression on the long-format (subject, step) data with
// exposure dt and outcome Delta N over at-risk steps l >= 1, fit by IRLS with
// step-halving. Throws ConvergenceError after max_iter iterations.
std::shared_ptr<const LoglinearIntensity> fit_historical_loglinear_intensity(const Dataset& data,
                                                                             const TrainSplit& split,
                                                                             const IntensityConfig& cfg,
                                                                             const Caps& caps = {});

struct OracleNuisances {
  std::shared_ptr<const AdditiveResidual> residual;
  std::shared_ptr<const OracleIntensity> intensity;
};
// Closed-form nuisances for the oracle scenario (beta1 must be resolved).
// Throws UnsupportedError for any other configuration.
OracleNuisances oracle_nuisances(const DgpConfig& cfg);

struct LearnerConfig {
  ResidualKind residual_kind = ResidualKind::additive;
  double residual_ridge = 1e-3;
  Index quantile_strata = 1;
  IntensityConfig intensity;
  Caps caps;
};

// Fits both nuisances on a training set. Implementations may ignore the
// training data (oracles, stubs).
class NuisanceLearner {
 public:
  virtual ~NuisanceLearner() = default;
  virtual std::shared_ptr<const FittedResidual> fit_residual(const Dataset& data, const TrainSplit& split) const = 0;
  virtual std::shared_ptr<const FittedIntensity> fit_intensity(const Dataset& data, const TrainSplit& split) const = 0;
};

class ConfiguredLearner final : public NuisanceLearner {
 public:
  explicit ConfiguredLearner(LearnerConfig cfg) : cfg_(std::move(cfg)) {}
  std::shared_ptr<const FittedResidual> fit_residual(const Dataset& data, const TrainSplit& split) const override;
  std::shared_ptr<const FittedIntensity> fit_intensity(const Dataset& data, const TrainSplit& split) const override;
  const LearnerConfig& config() const { return cfg_; }

 private:
  LearnerConfig cfg_;
};

// Returns the same pre-built predictors for every split.
class FixedLearner final : public NuisanceLearner {
 public:
  FixedLearner(std::shared_ptr<const FittedResidual> residual, std::shared_ptr<const FittedIntensity> intensity)
      : residual_(std::move(residual)), intensity_(std::move(intensity)) {}
  std::shared_ptr<const FittedResidual> fit_residual(const Dataset&, const TrainSplit&) const override {
    return residual_;
  }
  std::shared_ptr<const FittedIntensity> fit_intensity(const Dataset&, const TrainSplit&) const override {
    return intensity_;
  }

 private:
  std::shared_ptr<const FittedResidual> residual_;
  std::shared_ptr<const FittedIntensity> intensity_;
};

// Replaces the residual learner of another learner by G_hat = 0.
class ZeroResidualLearner final : public NuisanceLearner {
 public:
  explicit ZeroResidualLearner(std::shared_ptr<const NuisanceLearner> inner) : inner_(std::move(inner)) {}
  std::shared_ptr<const FittedResidual> fit_residual(const Dataset&, const TrainSplit&) const override {
    return std::make_shared<ConstantResidual>(0.0);
  }
  std::shared_ptr<const FittedIntensity> fit_intensity(const Dataset& data, const TrainSplit& split) const override {
    return inner_->fit_intensity(data, split);
  }

 private:
  std::shared_ptr<const NuisanceLearner> inner_;
};

}  // namespace clit
