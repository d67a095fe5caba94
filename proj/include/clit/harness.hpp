#pragma once

// Experiment orchestration: sweeps over DGP settings with replicated tests,
// the random-walk study of the sup|B| null distribution, and the oracle
// calibration checks.

#include "clit/learners.hpp"
#include "clit/lct.hpp"
#include "clit/sim.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace clit {

struct ExperimentSpec {
  std::string name = "experiment";
  DgpConfig dgp;  // template; swept fields are overwritten per cell
  LearnerConfig learner;
  std::vector<Index> n;
  // (kernel_x, kernel_y) pairs.
  std::vector<std::pair<KernelKind, KernelKind>> kernels;
  std::vector<double> beta2;
  std::vector<LocalAlternative> rho0;
  Index reps = 200;
  std::vector<TestMethod> tests = {TestMethod::xlct_sup};
  double alpha = 0.05;
  Index K = 5;
  std::uint64_t seed = 1;
  double cox_l2 = 0.1;
};

struct Cell {
  Index id = 0;
  DgpConfig dgp;  // beta1 resolved
};

// Cross product n x kernels x beta2 x rho0, in that nesting order.
std::vector<Cell> enumerate_cells(const ExperimentSpec& spec, bool calibrate = true);

// seed_r = hash(base seed, cell id, r).
std::uint64_t replication_seed(std::uint64_t base, Index cell, Index rep);

struct ResultRow {
  Index cell = 0;
  Index n = 0;
  KernelKind kernel_x = KernelKind::zero, kernel_y = KernelKind::zero;
  double beta2 = 0.0;
  std::string rho0;
  Index rep = 0;
  TestMethod test = TestMethod::xlct_sup;
  std::optional<double> p_value;  // empty when the replication failed
  double statistic = 0.0;
  bool reject = false;
  std::uint64_t seed = 0;
  double runtime_ms = 0.0;
  std::string error;
};

struct SummaryRow {
  Index n = 0;
  KernelKind kernel_x = KernelKind::zero, kernel_y = KernelKind::zero;
  double beta2 = 0.0;
  std::string rho0;
  TestMethod test = TestMethod::xlct_sup;
  double reject_rate = 0.0;
  Index reps = 0;      // successful replications
  Index failures = 0;  // replications without a p-value
};

// Runs one replication of every requested test in a cell. Failures are
// recorded in the rows, never thrown.
std::vector<ResultRow> run_replication(const ExperimentSpec& spec, const Cell& cell, Index rep);

using ProgressFn = std::function<void(Index done, Index total)>;

// Rows ordered by (cell, rep, test) regardless of the thread count.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, int threads, const ProgressFn& progress = {});
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows, bool with_runtime = true);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

// Calls fn(i) for i in [0, count) on `threads` workers; fn must write only to
// slot i of pre-sized outputs.
void parallel_for(Index count, int threads, const std::function<void(Index)>& fn);

// Monte Carlo of max_k |S_k| for Gaussian random walks scaled to unit
// variance at the last step.
std::vector<double> random_walk_sup(Index walks, Index steps, std::uint64_t seed, int threads);

struct FsTableRow {
  double x = 0.0, fs_series = 0.0, fs_mc = 0.0, abs_diff = 0.0;
};
std::vector<FsTableRow> fs_table(const std::vector<double>& xs, const std::vector<double>& mc_sups,
                                 const SupNullDist& dist = {});

struct EcdfRow {
  Index q = 0;
  double u = 0.0, ecdf = 0.0;
};
// ECDF of p = 1 - F_S(max over a q-point grid) at u = 0.01, 0.02, ..., 1.
std::vector<EcdfRow> discretization_ecdfs(const std::vector<Index>& qs, Index samples, std::uint64_t seed,
                                          int threads);

struct CheckResult {
  std::string name;
  double value = 0.0;
  double lower = 0.0, upper = 0.0;
  bool pass = false;
  std::string detail;
};
std::string to_json(const CheckResult& c);

struct OracleCalibrationOptions {
  Index n = 500;
  Index reps = 500;
  Index q = 128;
  KernelKind kernel_x = KernelKind::constant;
  double beta2 = -1.0;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Oracle-nuisance null scenario: standardized endpoint mean and variance,
// KS distance of the sup-test p-values to uniform, and scale equivariance.
std::vector<CheckResult> oracle_calibration_suite(const OracleCalibrationOptions& opt);

// Kolmogorov-Smirnov distance of a sample to U(0, 1).
double ks_uniform(std::vector<double> sample);

struct DebiasComparison {
  double crossfit_mean = 0.0, crossfit_se = 0.0;
  double plugin_mean = 0.0, plugin_se = 0.0;
  Index reps = 0, failures = 0;
};
// gamma(1) from the K-fold cross-fitted estimator and from the plug-in
// estimator (intensity fitted on all data) over replications.
DebiasComparison compare_plugin_crossfit(const DgpConfig& dgp, const LearnerConfig& learner, Index K, Index reps,
                                         int threads);

}  // namespace clit
