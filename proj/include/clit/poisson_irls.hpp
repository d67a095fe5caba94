#pragma once

#include "clit/learners.hpp"

#include <Eigen/Dense>

namespace clit {

struct PoissonProblem {
  Eigen::MatrixXd design;  // rows x p, column-major
  Vector outcome;          // counts
  Vector offset;           // log exposure
  Vector penalty;          // per-coefficient penalty weight (0 = unpenalised)
};

struct PoissonResult {
  Vector coef;
  PoissonFitInfo info;
  // Penalised objective -loglik + ridge/2 sum_k penalty_k coef_k^2 per
  // accepted iteration; non-increasing by construction.
  std::vector<double> objective_trace;
};

// Poisson deviance 2 sum [y log(y/mu) - (y - mu)].
double poisson_deviance(const Vector& y, const Vector& mu);

// Newton/IRLS with step-halving. Stops when the relative change of the
// penalised objective falls below tol; throws ConvergenceError (carrying the
// last deviance) after max_iter iterations. Coefficients beyond +-25 on the
// log scale flag separation.
PoissonResult fit_penalized_poisson(const PoissonProblem& problem, double ridge, int max_iter, double tol,
                                    const Vector& start);

}  // namespace clit
