#pragma once

// Tests built on an estimated LCM path: the supremum and endpoint statistics,
// the distribution of sup_{0<=t<=1} |B_t| used to calibrate the former, and a
// marginal Cox hazard-ratio test kept as a (misspecified) comparator.

#include "clit/lcm.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace clit {

struct SupNullDist {
  int truncation = 1000;
};

// CDF of sup |B_t| over [0, 1]; 0 for x <= 0.
double fs_cdf(double x, const SupNullDist& dist = {});
// Inverse of fs_cdf by bisection on [1e-6, 10]; p must lie in (0, 1).
double fs_quantile(double p, const SupNullDist& dist = {});

// sqrt(scale_n) * max_i |gamma_i| / sqrt(variance_last).
double sup_statistic(const LcmPath& path);
// Same normalisation with |gamma_last| in place of the maximum.
double endpoint_statistic(const LcmPath& path);

enum class TestMethod { lct_sup, lct_endpoint, xlct_sup, xlct_endpoint, cox_hr };

std::string to_string(TestMethod m);
TestMethod test_method_from_string(const std::string& name);  // throws InputError

struct TestReport {
  TestMethod method = TestMethod::xlct_sup;
  Index n = 0;
  Index K = 1;
  double statistic = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  double quantile = 0.0;  // critical value on the statistic's scale
  bool reject = false;
  std::uint64_t seed = 0;
  std::vector<FoldDiagnostics> folds;
  double coefficient = 0.0;  // Cox only: fitted log hazard ratio of X (original scale)
  int iterations = 0;        // Cox only: Newton iterations
};

// Single-line JSON: method, n, K, statistic, p_value, alpha, quantile,
// reject, seed, then diagnostics.
std::string to_json(const TestReport& report);

// Turns an LCM path into a sup or endpoint report.
TestReport sup_report(const LcmPath& path, double alpha, const SupNullDist& dist = {});
TestReport endpoint_report(const LcmPath& path, double alpha);

TestReport run_xlct(const Dataset& data, const FoldPartition& partition, const NuisanceLearner& learner,
                    double alpha, const SupNullDist& dist = {});
TestReport run_endpoint_test(const Dataset& data, const FoldPartition& partition, const NuisanceLearner& learner,
                             double alpha);

// Both statistics from one cross-fitted path (the harness runs both tests on
// the same data without refitting).
struct CrossFitReports {
  TestReport sup;
  TestReport endpoint;
};
CrossFitReports run_xlct_both(const Dataset& data, const FoldPartition& partition, const NuisanceLearner& learner,
                              double alpha, const SupNullDist& dist = {});

// Single sample split (no cross-fitting).
TestReport run_lct(const Dataset& data, const TrainSplit& split, const NuisanceLearner& learner, double alpha,
                   bool endpoint = false, const SupNullDist& dist = {});

// Cox model with time-varying covariates (X_t, Z_t), Breslow ties, L2
// penalty on standardised covariates, Newton-Raphson; Wald test of the X
// coefficient. Needs at least two events.
TestReport cox_hazard_ratio_test(const Dataset& data, double alpha, double l2 = 0.1);

}  // namespace clit
