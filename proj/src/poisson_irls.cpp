#include "clit/poisson_irls.hpp"

#include "clit/errors.hpp"

#include <cmath>
#include <string>

namespace clit {

namespace {

constexpr double kSeparationBound = 25.0;
constexpr int kMaxHalvings = 40;

// -loglik up to the y! constant, plus the ridge term.
double penalized_objective(const Vector& y, const Vector& eta, const Vector& coef, const Vector& penalty,
                           double ridge) {
  const double nll = (eta.array().exp() - y.array() * eta.array()).sum();
  return nll + 0.5 * ridge * (penalty.array() * coef.array().square()).sum();
}

}  // namespace

double poisson_deviance(const Vector& y, const Vector& mu) {
  double d = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double yi = y[i];
    const double mi = mu[i];
    d += (yi > 0.0 ? yi * std::log(yi / mi) : 0.0) - (yi - mi);
  }
  return 2.0 * d;
}

PoissonResult fit_penalized_poisson(const PoissonProblem& pr, double ridge, int max_iter, double tol,
                                    const Vector& start) {
  const Eigen::MatrixXd& X = pr.design;
  const Index p = X.cols();
  if (start.size() != p || pr.penalty.size() != p) throw DimensionError("poisson start/penalty length mismatch");

  PoissonResult res;
  res.coef = start;
  res.info.ridge_used = ridge;

  Vector eta = X * res.coef + pr.offset;
  double obj = penalized_objective(pr.outcome, eta, res.coef, pr.penalty, ridge);
  res.objective_trace.push_back(obj);

  for (int iter = 1; iter <= max_iter; ++iter) {
    const Vector mu = eta.array().exp();
    const Vector grad = X.transpose() * (pr.outcome - mu) - ridge * (pr.penalty.array() * res.coef.array()).matrix();
    const Eigen::MatrixXd Xw = X.array().colwise() * mu.array().sqrt();
    Eigen::MatrixXd hess = Xw.transpose() * Xw;
    hess.diagonal() += ridge * pr.penalty;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) {
      throw ConvergenceError("IRLS: singular information matrix", poisson_deviance(pr.outcome, mu));
    }
    const Vector step = ldlt.solve(grad);

    double scale = 1.0;
    Vector trial = res.coef + step;
    Vector trial_eta = X * trial + pr.offset;
    double trial_obj = penalized_objective(pr.outcome, trial_eta, trial, pr.penalty, ridge);
    int halvings = 0;
    while (!(trial_obj <= obj) && halvings < kMaxHalvings) {
      scale *= 0.5;
      trial = res.coef + scale * step;
      trial_eta = X * trial + pr.offset;
      trial_obj = penalized_objective(pr.outcome, trial_eta, trial, pr.penalty, ridge);
      ++halvings;
    }
    res.info.iterations = iter;
    if (!(trial_obj <= obj)) {
      // No descent along the Newton direction: we are at the optimum to
      // machine precision.
      res.info.converged = true;
      break;
    }
    const double change = std::abs(trial_obj - obj) / (std::abs(trial_obj) + 0.1);
    res.coef = trial;
    eta = trial_eta;
    obj = trial_obj;
    res.objective_trace.push_back(obj);
    if (change < tol) {
      res.info.converged = true;
      break;
    }
  }

  const Vector mu = eta.array().exp();
  res.info.deviance = poisson_deviance(pr.outcome, mu);
  res.info.separation = (res.coef.array().abs() > kSeparationBound).any();
  if (!res.info.converged) {
    throw ConvergenceError("IRLS did not converge in " + std::to_string(max_iter) + " iterations (deviance " +
                               std::to_string(res.info.deviance) + ")",
                           res.info.deviance);
  }
  return res;
}

}  // namespace clit
