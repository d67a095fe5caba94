#include "clit/lct.hpp"

#include "clit/errors.hpp"

#include <boost/math/distributions/normal.hpp>
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace clit {

double fs_cdf(double x, const SupNullDist& dist) {
  if (!(x > 0.0)) return 0.0;
  if (dist.truncation < 1) throw DomainError("series truncation must be at least 1");
  // For large x the sum is within rounding of pi/4 and its last bits jitter.
  // There the equivalent reflection series 1 - 4 sum_k (-1)^(k+1) Q((2k-1)x)
  // (Q the standard normal tail) is used; it converges after a term or two
  // and keeps the function monotone.
  if (x > 4.0) {
    double tail = 0.0;
    for (int k = 1; k <= 4; ++k) {
      const double term = std::erfc((2.0 * k - 1.0) * x / std::numbers::sqrt2);
      tail += (k % 2 == 1) ? term : -term;
    }
    return std::clamp(1.0 - 2.0 * tail, 0.0, 1.0);
  }
  const double c = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
  double sum = 0.0;
  for (int k = 0; k < dist.truncation; ++k) {
    const double m = 2.0 * k + 1.0;
    const double term = std::exp(-c * m * m) / m;
    if (term == 0.0) break;
    sum += (k % 2 == 0) ? term : -term;
  }
  return std::clamp(4.0 / std::numbers::pi * sum, 0.0, 1.0);
}

double fs_quantile(double p, const SupNullDist& dist) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  double lo = 1e-6, hi = 10.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (fs_cdf(mid, dist) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

double normaliser(const LcmPath& path) {
  const double v = path.variance.back();
  if (!(v > 0.0)) throw DegenerateVarianceError("estimated variance at t = 1 is not positive");
  return std::sqrt(path.scale_n / v);
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

}  // namespace

double sup_statistic(const LcmPath& path) {
  double m = 0.0;
  for (const double g : path.gamma) m = std::max(m, std::abs(g));
  return normaliser(path) * m;
}

double endpoint_statistic(const LcmPath& path) { return normaliser(path) * std::abs(path.gamma.back()); }

std::string to_string(TestMethod m) {
  switch (m) {
    case TestMethod::lct_sup: return "lct_sup";
    case TestMethod::lct_endpoint: return "lct_endpoint";
    case TestMethod::xlct_sup: return "xlct_sup";
    case TestMethod::xlct_endpoint: return "xlct_endpoint";
    case TestMethod::cox_hr: return "cox_hr";
  }
  return "?";
}

TestMethod test_method_from_string(const std::string& name) {
  for (auto m : {TestMethod::lct_sup, TestMethod::lct_endpoint, TestMethod::xlct_sup, TestMethod::xlct_endpoint,
                 TestMethod::cox_hr}) {
    if (to_string(m) == name) return m;
  }
  throw InputError("unknown test method '" + name +
                   "' (expected lct_sup, lct_endpoint, xlct_sup, xlct_endpoint or cox_hr)");
}

std::string to_json(const TestReport& r) {
  nlohmann::ordered_json j;
  j["method"] = to_string(r.method);
  j["n"] = r.n;
  j["K"] = r.K;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["alpha"] = r.alpha;
  j["quantile"] = r.quantile;
  j["reject"] = r.reject;
  j["seed"] = r.seed;
  if (!r.folds.empty()) {
    auto& arr = j["folds"] = nlohmann::ordered_json::array();
    for (const auto& f : r.folds) {
      arr.push_back({{"fold", f.fold},
                     {"eval_size", f.eval_size},
                     {"gamma_end", f.gamma_end},
                     {"variance_end", f.variance_end},
                     {"residual", f.residual_kind},
                     {"intensity", f.intensity_info}});
    }
  }
  if (r.method == TestMethod::cox_hr) {
    j["coefficient"] = r.coefficient;
    j["iterations"] = r.iterations;
  }
  return j.dump();
}

TestReport sup_report(const LcmPath& path, double alpha, const SupNullDist& dist) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  TestReport r;
  r.method = path.method == LcmMethod::cross_fit ? TestMethod::xlct_sup : TestMethod::lct_sup;
  r.n = static_cast<Index>(path.scale_n);
  r.K = path.K;
  r.alpha = alpha;
  r.statistic = sup_statistic(path);
  r.p_value = std::clamp(1.0 - fs_cdf(r.statistic, dist), 0.0, 1.0);
  r.quantile = fs_quantile(1.0 - alpha, dist);
  r.reject = r.p_value < alpha;
  return r;
}

TestReport endpoint_report(const LcmPath& path, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  TestReport r;
  r.method = path.method == LcmMethod::cross_fit ? TestMethod::xlct_endpoint : TestMethod::lct_endpoint;
  r.n = static_cast<Index>(path.scale_n);
  r.K = path.K;
  r.alpha = alpha;
  r.statistic = endpoint_statistic(path);
  r.p_value = std::clamp(std::erfc(r.statistic / std::numbers::sqrt2), 0.0, 1.0);
  r.quantile = normal_quantile(1.0 - alpha / 2.0);
  r.reject = r.p_value < alpha;
  return r;
}

CrossFitReports run_xlct_both(const Dataset& data, const FoldPartition& partition, const NuisanceLearner& learner,
                              double alpha, const SupNullDist& dist) {
  const CrossFitResult cf = estimate_lcm_crossfit(data, partition, learner);
  CrossFitReports out{sup_report(cf.path, alpha, dist), endpoint_report(cf.path, alpha)};
  out.sup.folds = cf.folds;
  out.endpoint.folds = cf.folds;
  return out;
}

TestReport run_xlct(const Dataset& data, const FoldPartition& partition, const NuisanceLearner& learner,
                    double alpha, const SupNullDist& dist) {
  const CrossFitResult cf = estimate_lcm_crossfit(data, partition, learner);
  TestReport r = sup_report(cf.path, alpha, dist);
  r.folds = cf.folds;
  return r;
}

TestReport run_endpoint_test(const Dataset& data, const FoldPartition& partition, const NuisanceLearner& learner,
                             double alpha) {
  const CrossFitResult cf = estimate_lcm_crossfit(data, partition, learner);
  TestReport r = endpoint_report(cf.path, alpha);
  r.folds = cf.folds;
  return r;
}

TestReport run_lct(const Dataset& data, const TrainSplit& split, const NuisanceLearner& learner, double alpha,
                   bool endpoint, const SupNullDist& dist) {
  const auto residual = learner.fit_residual(data, split);
  const auto intensity = learner.fit_intensity(data, split);
  const LcmPath path = estimate_lcm_split(data, split, *residual, *intensity);
  return endpoint ? endpoint_report(path, alpha) : sup_report(path, alpha, dist);
}

}  // namespace clit
