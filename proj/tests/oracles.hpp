#pragma once

// Deliberately naive reference implementations used as test oracles. They
// share no code with the library beyond the data containers.

#include "clit/core.hpp"

#include <vector>

namespace oracle {

using clit::Index;

inline bool has_event(const clit::CountingRecord& rec, Index j, Index l) {
  for (Index e : rec.events(j))
    if (e == l) return true;
  return false;
}

// (1/|rows|) sum_j sum_{1<=l<=i} G(r,l) (dN - lam dt), one term at a time.
inline std::vector<double> lcm_path(const clit::Dataset& d, const std::vector<Index>& rows, const clit::Matrix& g,
                                    const clit::Matrix& lam) {
  const Index q = d.grid().size();
  const double dt = 1.0 / static_cast<double>(q - 1);
  std::vector<double> out(static_cast<std::size_t>(q), 0.0);
  for (Index i = 0; i < q; ++i) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Index j = rows[r];
      for (Index l = 1; l <= i; ++l) {
        double dm = has_event(d.record, j, l) ? 1.0 : 0.0;
        if (l <= d.record.at_risk_end(j)) dm -= lam(static_cast<Index>(r), l) * dt;
        s += g(static_cast<Index>(r), l) * dm;
      }
    }
    out[static_cast<std::size_t>(i)] = s / static_cast<double>(rows.size());
  }
  return out;
}

// (1/|rows|) sum over every (subject, event) pair with event <= t_i of G^2.
inline std::vector<double> variance_path(const clit::Dataset& d, const std::vector<Index>& rows,
                                         const clit::Matrix& g) {
  const Index q = d.grid().size();
  std::vector<double> out(static_cast<std::size_t>(q), 0.0);
  for (Index i = 0; i < q; ++i) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (Index e : d.record.events(rows[r])) {
        if (e <= i) s += g(static_cast<Index>(r), e) * g(static_cast<Index>(r), e);
      }
    }
    out[static_cast<std::size_t>(i)] = s / static_cast<double>(rows.size());
  }
  return out;
}

}  // namespace oracle
