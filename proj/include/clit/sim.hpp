#pragma once

// Cox example data-generating process: Z from a random-effects curve plus a
// random walk, X and Y from a historical functional linear model on Z, a
// Weibull-baseline full intensity, and event times by the inverse hazard
// method on the grid.

#include "clit/core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace clit {

enum class KernelKind { zero, constant, gaussian, sine };

std::string to_string(KernelKind k);
KernelKind kernel_from_string(const std::string& name);  // throws InputError

// Historical kernel rho(s, t) on 0 <= s <= t <= 1; s > t is a DomainError.
double kernel_eval(KernelKind kind, double s, double t);

// rho_0 for the local alternatives lambda * exp(rho_0(t) / sqrt(n) * X_t).
struct LocalAlternative {
  enum class Kind { none, constant, step, cos };
  Kind kind = Kind::none;
  double value = 0.0;  // constant level for Kind::constant

  double at(double t) const;
  bool is_null() const { return kind == Kind::none || (kind == Kind::constant && value == 0.0); }
  std::string label() const;
  static LocalAlternative parse(const std::string& text);  // "none", "5", "step", "cos"
};

struct DgpConfig {
  Index n = 100;
  Index q = 128;
  KernelKind kernel_x = KernelKind::constant;
  KernelKind kernel_y = KernelKind::constant;
  double beta2 = -1.0;
  std::optional<double> beta1;  // auto-calibrated when empty
  LocalAlternative rho0;
  std::uint64_t seed = 1;
  bool y_noise = true;  // W in Y = int Z rho_Y + W; off in the oracle scenario
};

// rho_Y = 0, W = 0 and no alternative: the F-intensity and the projection
// are available in closed form.
bool is_oracle_scenario(const DgpConfig& cfg);

struct SimulatedDataset {
  Dataset data;
  DgpConfig config;  // with beta1 resolved
  bool h0 = true;
  // Deterministic part of X: sum_{i<l} Z_i rho_X(t_i, t_l) dt (stopped).
  Matrix true_projection;
  // lambda^full on at-risk indices, zero afterwards.
  Matrix full_intensity;
  // Lambda^full accumulated through the event step (or to t = 1 if censored).
  std::vector<double> cumulative_at_exit;
  std::vector<double> exp_draws;  // the E ~ Exp(1) thresholds
};

// Smallest power-of-two multiple of 1 such that a pilot batch has at least
// (q-1)/q of its subjects experiencing the event before t = 1. The pilot
// uses a fixed seed so every replication of a setting shares beta1.
double calibrate_beta1(const DgpConfig& cfg);

SimulatedDataset sample_dataset(const DgpConfig& cfg);

// Monte Carlo estimate of the LCM path gamma_t with per-t standard errors,
// from the residualised jump-sum with the oracle residual X - true_projection
// and an intensity fitted on an independent pilot sample.
struct GammaEstimate {
  TimeGrid grid;
  std::vector<double> mean;
  std::vector<double> std_error;
};
GammaEstimate mc_true_gamma(const DgpConfig& cfg, Index reps);

}  // namespace clit
