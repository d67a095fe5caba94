#include "clit/lcm.hpp"

#include "clit/errors.hpp"
#include "clit/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace clit {

std::string to_string(LcmMethod m) {
  switch (m) {
    case LcmMethod::plug_in: return "plug_in";
    case LcmMethod::sample_split: return "sample_split";
    case LcmMethod::cross_fit: return "cross_fit";
  }
  return "?";
}

std::string LcmPath::method_label() const {
  if (method == LcmMethod::cross_fit) return "cross_fit(" + std::to_string(K) + ")";
  return to_string(method);
}

void write_csv(std::ostream& os, const LcmPath& path) {
  os << "t,gamma,variance,scale_n,method\n";
  char buf[128];
  const std::string label = path.method_label();
  for (Index i = 0; i < path.grid.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,", path.grid[i], path.gamma[u], path.variance[u],
                  path.scale_n);
    os << buf << '"' << label << "\"\n";
  }
}

FoldPartition FoldPartition::make(Index n, Index K, std::uint64_t seed) {
  if (K < 2) throw DomainError("cross-fitting needs K >= 2");
  if (n < K) throw InputError("cannot split " + std::to_string(n) + " subjects into " + std::to_string(K) + " folds");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  RandomStream rs(seed, 0x666f6c64ULL);
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rs.below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  FoldPartition p;
  p.n_ = n;
  p.folds_.resize(static_cast<std::size_t>(K));
  for (std::size_t i = 0; i < perm.size(); ++i) p.folds_[i % static_cast<std::size_t>(K)].push_back(perm[i]);
  for (auto& f : p.folds_) std::sort(f.begin(), f.end());
  return p;
}

TrainSplit FoldPartition::split(Index k) const {
  if (k < 0 || k >= K()) throw DomainError("fold index out of range");
  std::vector<Index> train;
  train.reserve(static_cast<std::size_t>(n_));
  for (Index f = 0; f < K(); ++f) {
    if (f == k) continue;
    const auto& idx = fold(f);
    train.insert(train.end(), idx.begin(), idx.end());
  }
  std::sort(train.begin(), train.end());
  return TrainSplit::make(n_, std::move(train), fold(k));
}

std::vector<double> estimate_variance(const Dataset& data, std::span<const Index> eval, const Matrix& residuals) {
  if (eval.empty()) throw InputError("empty evaluation set");
  const Index q = data.grid().size();
  if (residuals.rows() != static_cast<Index>(eval.size()) || residuals.cols() != q) {
    throw DimensionError("residual matrix does not match evaluation set and grid");
  }
  std::vector<double> jump(static_cast<std::size_t>(q), 0.0);
  for (std::size_t r = 0; r < eval.size(); ++r) {
    for (const Index l : data.record.events(eval[r])) {
      const double g = residuals(static_cast<Index>(r), l);
      jump[static_cast<std::size_t>(l)] += g * g;
    }
  }
  std::vector<double> v(static_cast<std::size_t>(q), 0.0);
  const double inv = 1.0 / static_cast<double>(eval.size());
  double acc = 0.0;
  for (std::size_t l = 1; l < v.size(); ++l) {
    acc += jump[l];
    v[l] = acc * inv;
  }
  return v;
}

namespace {

// (1/|rows|) sum_r int integrand_r dM_hat_r as a path on the grid.
std::vector<double> averaged_integral(const Dataset& data, std::span<const Index> rows, const Matrix& integrand,
                                      const Matrix& lam) {
  const Index q = data.grid().size();
  std::vector<double> total(static_cast<std::size_t>(q), 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto ri = static_cast<Index>(r);
    const auto inc = compensated_increments(data.record, rows[r], {lam.data() + ri * q, static_cast<std::size_t>(q)});
    double acc = 0.0;
    for (Index l = 1; l < q; ++l) {
      acc += integrand(ri, l) * inc[static_cast<std::size_t>(l)];
      total[static_cast<std::size_t>(l)] += acc;
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (auto& v : total) v *= inv;
  return total;
}

}  // namespace

LcmPath estimate_lcm_split(const Dataset& data, const TrainSplit& split, const FittedResidual& residual,
                           const FittedIntensity& intensity) {
  if (split.eval.empty()) throw InputError("empty evaluation set");
  const Matrix g = residual.residuals(data, split.eval);
  const Matrix lam = intensity.intensity(data, split.eval);
  LcmPath out{data.grid(), averaged_integral(data, split.eval, g, lam), estimate_variance(data, split.eval, g),
              static_cast<double>(split.eval.size()), LcmMethod::sample_split, 1};
  return out;
}

LcmPath estimate_lcm_plugin(const Dataset& data, const FittedIntensity& intensity) {
  const Index n = data.subjects();
  if (n == 0) throw InputError("empty dataset");
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  const Matrix lam = intensity.intensity(data, all);
  return LcmPath{data.grid(), averaged_integral(data, all, data.x.values, lam),
                 estimate_variance(data, all, data.x.values), static_cast<double>(n), LcmMethod::plug_in, 1};
}

namespace {

std::string describe_intensity(const FittedIntensity& f) {
  if (const auto* ll = dynamic_cast<const LoglinearIntensity*>(&f)) {
    const auto& info = ll->info();
    return "loglinear iterations=" + std::to_string(info.iterations) + " ridge=" + std::to_string(info.ridge_used) +
           (info.separation ? " separation" : "");
  }
  switch (f.kind()) {
    case IntensityKind::oracle: return "oracle";
    case IntensityKind::constant: return "constant";
    default: return "loglinear";
  }
}

std::string describe_residual(const FittedResidual& r) {
  switch (r.kind()) {
    case ResidualKind::additive: return "additive";
    case ResidualKind::time_independent_quantile: return "quantile";
    case ResidualKind::constant: return "constant";
  }
  return "?";
}

}  // namespace

CrossFitResult estimate_lcm_crossfit(const Dataset& data, const FoldPartition& partition,
                                     const NuisanceLearner& learner) {
  if (partition.n() != data.subjects()) throw DimensionError("fold partition does not match the dataset size");
  const Index K = partition.K();
  const Index q = data.grid().size();
  CrossFitResult res{LcmPath{data.grid(), std::vector<double>(static_cast<std::size_t>(q), 0.0),
                             std::vector<double>(static_cast<std::size_t>(q), 0.0),
                             static_cast<double>(data.subjects()), LcmMethod::cross_fit, K},
                     {}};
  for (Index k = 0; k < K; ++k) {
    const TrainSplit split = partition.split(k);
    LcmPath fold_path = [&] {
      try {
        const auto residual = learner.fit_residual(data, split);
        const auto intensity = learner.fit_intensity(data, split);
        LcmPath p = estimate_lcm_split(data, split, *residual, *intensity);
        res.folds.push_back(FoldDiagnostics{k, static_cast<Index>(split.eval.size()), p.gamma.back(),
                                            p.variance.back(), describe_residual(*residual),
                                            describe_intensity(*intensity)});
        return p;
      } catch (const ConvergenceError& e) {
        throw ConvergenceError("fold " + std::to_string(k) + ": " + e.what(), e.last_deviance());
      } catch (const IllConditionedError& e) {
        throw IllConditionedError("fold " + std::to_string(k) + ": " + e.what());
      } catch (const InputError& e) {
        throw InputError("fold " + std::to_string(k) + ": " + e.what());
      }
    }();
    for (Index l = 0; l < q; ++l) {
      const auto u = static_cast<std::size_t>(l);
      res.path.gamma[u] += fold_path.gamma[u];
      res.path.variance[u] += fold_path.variance[u];
    }
  }
  const double inv = 1.0 / static_cast<double>(K);
  for (auto& v : res.path.gamma) v *= inv;
  for (auto& v : res.path.variance) v *= inv;
  return res;
}

}  // namespace clit
