#include "clit/errors.hpp"
#include "clit/lct.hpp"

#include <boost/math/distributions/normal.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace clit {

namespace {

struct LongRow {
  Index step;
  double x, z;
  bool event;
};

struct CoxEval {
  double loglik = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();  // of the penalised log-likelihood
};

// Breslow partial likelihood with rows grouped by step in increasing order.
CoxEval evaluate(const std::vector<LongRow>& rows, const std::vector<std::size_t>& step_begin,
                 const Eigen::Vector2d& beta, double l2) {
  CoxEval out;
  for (std::size_t s = 0; s + 1 < step_begin.size(); ++s) {
    const std::size_t b = step_begin[s], e = step_begin[s + 1];
    double d = 0.0;
    Eigen::Vector2d event_sum = Eigen::Vector2d::Zero();
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = b; i < e; ++i) shift = std::max(shift, beta[0] * rows[i].x + beta[1] * rows[i].z);
    double s0 = 0.0;
    Eigen::Vector2d s1 = Eigen::Vector2d::Zero();
    Eigen::Matrix2d s2 = Eigen::Matrix2d::Zero();
    for (std::size_t i = b; i < e; ++i) {
      const Eigen::Vector2d c(rows[i].x, rows[i].z);
      const double w = std::exp(beta.dot(c) - shift);
      s0 += w;
      s1 += w * c;
      s2 += w * c * c.transpose();
      if (rows[i].event) {
        d += 1.0;
        event_sum += c;
      }
    }
    if (d == 0.0) continue;
    const Eigen::Vector2d mean = s1 / s0;
    out.loglik += beta.dot(event_sum) - d * (std::log(s0) + shift);
    out.grad += event_sum - d * mean;
    out.hess -= d * (s2 / s0 - mean * mean.transpose());
  }
  out.loglik -= 0.5 * l2 * beta.squaredNorm();
  out.grad -= l2 * beta;
  out.hess -= l2 * Eigen::Matrix2d::Identity();
  return out;
}

}  // namespace

TestReport cox_hazard_ratio_test(const Dataset& data, double alpha, double l2) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (l2 < 0.0) throw DomainError("L2 penalty must be non-negative");
  if (data.record.total_events() < 2) throw InputError("Cox comparator needs at least two events");

  const Index q = data.grid().size();
  const Index n = data.subjects();
  std::vector<LongRow> rows;
  std::vector<std::size_t> step_begin;
  for (Index l = 1; l < q; ++l) {
    step_begin.push_back(rows.size());
    for (Index j = 0; j < n; ++j) {
      if (!data.record.at_risk(j, l)) continue;
      const auto& ev = data.record.events(j);
      const bool event = std::find(ev.begin(), ev.end(), l) != ev.end();
      rows.push_back({l, data.x.values(j, l), data.z.values(j, l), event});
    }
  }
  step_begin.push_back(rows.size());

  // Standardise over the long-format rows; a constant column becomes zero.
  double mx = 0.0, mz = 0.0;
  for (const auto& r : rows) {
    mx += r.x;
    mz += r.z;
  }
  const double m = static_cast<double>(rows.size());
  mx /= m;
  mz /= m;
  double vx = 0.0, vz = 0.0;
  for (const auto& r : rows) {
    vx += (r.x - mx) * (r.x - mx);
    vz += (r.z - mz) * (r.z - mz);
  }
  const double sx = std::sqrt(vx / (m - 1.0)), sz = std::sqrt(vz / (m - 1.0));
  for (auto& r : rows) {
    r.x = sx > 0.0 ? (r.x - mx) / sx : 0.0;
    r.z = sz > 0.0 ? (r.z - mz) / sz : 0.0;
  }

  constexpr int kMaxIter = 50;
  Eigen::Vector2d beta = Eigen::Vector2d::Zero();
  CoxEval cur = evaluate(rows, step_begin, beta, l2);
  int iter = 0;
  bool converged = false;
  for (iter = 1; iter <= kMaxIter; ++iter) {
    const Eigen::Matrix2d info = -cur.hess;
    Eigen::LDLT<Eigen::Matrix2d> ldlt(info);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
      throw ConvergenceError("Cox Newton: information matrix not positive definite", -2.0 * cur.loglik);
    }
    const Eigen::Vector2d step = ldlt.solve(cur.grad);
    double scale = 1.0;
    CoxEval next = evaluate(rows, step_begin, beta + step, l2);
    for (int h = 0; h < 30 && !(next.loglik >= cur.loglik); ++h) {
      scale *= 0.5;
      next = evaluate(rows, step_begin, beta + scale * step, l2);
    }
    if (!(next.loglik >= cur.loglik)) {
      converged = true;  // no ascent left along the Newton direction
      break;
    }
    beta += scale * step;
    const double change = std::abs(next.loglik - cur.loglik);
    cur = next;
    if ((scale * step).cwiseAbs().maxCoeff() < 1e-9 || change < 1e-12 * (std::abs(cur.loglik) + 1.0)) {
      converged = true;
      break;
    }
  }
  if (!converged || !beta.allFinite()) {
    throw ConvergenceError("Cox Newton iterations did not converge", -2.0 * cur.loglik);
  }

  const Eigen::Matrix2d cov = (-cur.hess).inverse();
  const double se = std::sqrt(cov(0, 0));
  const double z = se > 0.0 ? beta[0] / se : 0.0;

  TestReport r;
  r.method = TestMethod::cox_hr;
  r.n = n;
  r.K = 1;
  r.alpha = alpha;
  r.statistic = std::abs(z);
  r.p_value = std::clamp(std::erfc(r.statistic / std::numbers::sqrt2), 0.0, 1.0);
  r.quantile = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
  r.reject = r.p_value < alpha;
  r.coefficient = sx > 0.0 ? beta[0] / sx : 0.0;
  r.iterations = iter;
  return r;
}

}  // namespace clit
