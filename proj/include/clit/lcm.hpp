#pragma once

#include "clit/core.hpp"
#include "clit/learners.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace clit {

enum class LcmMethod { plug_in, sample_split, cross_fit };

std::string to_string(LcmMethod m);

// An estimated LCM path with its variance function. gamma[0] = variance[0] = 0
// and variance is nondecreasing.
struct LcmPath {
  TimeGrid grid;
  std::vector<double> gamma;
  std::vector<double> variance;
  double scale_n = 0.0;
  LcmMethod method = LcmMethod::sample_split;
  Index K = 1;  // number of folds for cross_fit, 1 otherwise

  std::string method_label() const;  // "plug_in", "sample_split", "cross_fit(5)"
};

// CSV with columns t, gamma, variance, scale_n, method.
void write_csv(std::ostream& os, const LcmPath& path);

// K disjoint folds covering {0..n-1} with sizes differing by at most one:
// a seeded Fisher-Yates shuffle followed by round-robin assignment.
class FoldPartition {
 public:
  static FoldPartition make(Index n, Index K, std::uint64_t seed);

  Index K() const { return static_cast<Index>(folds_.size()); }
  Index n() const { return n_; }
  const std::vector<Index>& fold(Index k) const { return folds_[static_cast<std::size_t>(k)]; }
  // Fold k as eval set, the rest as training set.
  TrainSplit split(Index k) const;

 private:
  Index n_ = 0;
  std::vector<std::vector<Index>> folds_;
};

// V_hat(t_i) = (1/|eval|) sum_j sum_{events l <= i} G_hat_{j,l}^2, where
// `residuals` holds one row per eval subject.
std::vector<double> estimate_variance(const Dataset& data, std::span<const Index> eval, const Matrix& residuals);

// Residualised jump-sum evaluated on split.eval with predictors that the
// caller fitted on split.train.
LcmPath estimate_lcm_split(const Dataset& data, const TrainSplit& split, const FittedResidual& residual,
                           const FittedIntensity& intensity);

// Un-residualised functional (1/n) sum_j int X dM_hat over all subjects. The
// variance path uses X itself as the integrand.
LcmPath estimate_lcm_plugin(const Dataset& data, const FittedIntensity& intensity);

struct FoldDiagnostics {
  Index fold = 0;
  Index eval_size = 0;
  double gamma_end = 0.0;
  double variance_end = 0.0;
  std::string residual_kind;
  std::string intensity_info;  // e.g. IRLS iterations / ridge
};

struct CrossFitResult {
  LcmPath path;
  std::vector<FoldDiagnostics> folds;
};

// Fits both learners on each fold complement, evaluates on the fold and
// averages gamma and variance across folds in fold order. Learner failures
// are rethrown with the fold index prepended.
CrossFitResult estimate_lcm_crossfit(const Dataset& data, const FoldPartition& partition,
                                     const NuisanceLearner& learner);

}  // namespace clit
