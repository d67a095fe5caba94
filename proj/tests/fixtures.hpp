#pragma once

#include "clit/core.hpp"
#include "clit/learners.hpp"
#include "clit/rng.hpp"

#include <numeric>
#include <vector>

namespace fixture {

using clit::Index;

// Random paths with at most one event per subject; about `censored` of the
// subjects never have an event.
inline clit::Dataset random_dataset(Index n, Index q, std::uint64_t seed, double censored = 0.2) {
  clit::RandomStream rs(seed, 99);
  const clit::TimeGrid g(q);
  clit::Matrix x(n, q), z(n, q);
  std::vector<Index> ev(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    for (Index l = 0; l < q; ++l) {
      x(j, l) = rs.normal();
      z(j, l) = rs.normal();
    }
    ev[static_cast<std::size_t>(j)] =
        rs.uniform() < censored ? -1 : 1 + static_cast<Index>(rs.below(static_cast<std::uint64_t>(q - 1)));
  }
  return clit::Dataset(clit::PathMatrix(g, x), clit::PathMatrix(g, z), clit::CountingRecord::survival(g, ev));
}

inline std::vector<Index> iota(Index n, Index from = 0) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), from);
  return v;
}

// Residual / intensity given as full n x q matrices indexed by subject.
class MatrixResidual final : public clit::FittedResidual {
 public:
  explicit MatrixResidual(clit::Matrix g) : g_(std::move(g)) {}
  clit::ResidualKind kind() const override { return clit::ResidualKind::constant; }
  clit::Matrix residuals(const clit::Dataset&, std::span<const Index> rows) const override {
    clit::Matrix out(static_cast<Index>(rows.size()), g_.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = g_.row(rows[r]);
    return out;
  }

 private:
  clit::Matrix g_;
};

class MatrixIntensity final : public clit::FittedIntensity {
 public:
  explicit MatrixIntensity(clit::Matrix l) : l_(std::move(l)) {}
  clit::IntensityKind kind() const override { return clit::IntensityKind::constant; }
  clit::Matrix intensity(const clit::Dataset& d, std::span<const Index> rows) const override {
    clit::Matrix out(static_cast<Index>(rows.size()), l_.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.row(static_cast<Index>(r)) = l_.row(rows[r]);
      for (Index l = d.record.at_risk_end(rows[r]) + 1; l < l_.cols(); ++l) out(static_cast<Index>(r), l) = 0.0;
    }
    return out;
  }

 private:
  clit::Matrix l_;
};

}  // namespace fixture
