#pragma once

// Shared numerical substrate: time grids, sampled paths, counting records,
// left-point Riemann-Stieltjes integration and integrand transformations.
//
// Grid convention. The grid has q points 0 = t_0 < ... < t_{q-1} = 1. Index
// l >= 1 names the step (t_{l-1}, t_l]; nothing happens "at" index 0, so all
// increments at l = 0 are zero and every partial-sum path starts at 0.
// A subject's event at index l means N jumps at t_l. The value of a
// predictable path at index l is the one used on step l. Covariates are
// continuous in the simulation model, so the stored sample at t_l serves as
// the left limit at t_l; the only thing that must strictly precede t_l is
// the history fed to a learner (Z at indices < l for the projection, events
// at indices < l for the at-risk indicator).

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

namespace clit {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class TimeGrid {
 public:
  // Equidistant grid on [0, 1] with q points.
  explicit TimeGrid(Index q = 128);

  // Accepts externally supplied points (e.g. a CSV header); they must be an
  // equidistant grid on [0, 1] up to 1e-9.
  static TimeGrid from_points(const std::vector<double>& points);

  Index size() const { return static_cast<Index>(points_.size()); }
  double step() const { return step_; }
  double operator[](Index i) const { return points_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& points() const { return points_; }

  bool operator==(const TimeGrid& other) const { return size() == other.size(); }

 private:
  std::vector<double> points_;
  double step_;
};

// n x q matrix of sampled paths; row j is subject j.
struct PathMatrix {
  TimeGrid grid;
  Matrix values;

  PathMatrix(TimeGrid g, Matrix v);
  Index rows() const { return values.rows(); }
  std::span<const double> row(Index j) const {
    return {values.data() + j * values.cols(), static_cast<std::size_t>(values.cols())};
  }
};

// Event indices per subject plus the last index at which each subject is at
// risk. at_risk_end == q means at risk on the whole grid (censored at 1).
class CountingRecord {
 public:
  CountingRecord(TimeGrid grid, std::vector<std::vector<Index>> event_times,
                 std::vector<Index> at_risk_end);

  // One event per subject at most; event_index < 0 means censored at t = 1.
  static CountingRecord survival(TimeGrid grid, const std::vector<Index>& event_index);

  const TimeGrid& grid() const { return grid_; }
  Index subjects() const { return static_cast<Index>(at_risk_end_.size()); }
  const std::vector<Index>& events(Index j) const { return event_times_[static_cast<std::size_t>(j)]; }
  Index at_risk_end(Index j) const { return at_risk_end_[static_cast<std::size_t>(j)]; }
  bool at_risk(Index j, Index l) const { return l <= at_risk_end(j); }
  bool is_survival() const;
  // Survival case: event index or -1 when censored.
  Index event_index(Index j) const;
  Index total_events() const;
  // N_{t_i} for i = 0..q-1.
  std::vector<double> counting_path(Index j) const;
  // Per-index jump counts Delta N_l.
  std::vector<double> jumps(Index j) const;

 private:
  TimeGrid grid_;
  std::vector<std::vector<Index>> event_times_;
  std::vector<Index> at_risk_end_;
};

// Grid function used as an integrand; see the convention at the top.
struct PredictablePath {
  TimeGrid grid;
  Matrix values;

  PredictablePath(TimeGrid g, Matrix v);
  std::span<const double> row(Index j) const {
    return {values.data() + j * values.cols(), static_cast<std::size_t>(values.cols())};
  }
};

// Observed replications (N_j, X_j, Z_j) on one grid.
struct Dataset {
  PathMatrix x;
  PathMatrix z;
  CountingRecord record;

  Dataset(PathMatrix x, PathMatrix z, CountingRecord record);
  Index subjects() const { return x.rows(); }
  const TimeGrid& grid() const { return x.grid; }
};

// Partial sums S_i = sum_{1 <= l <= i} integrand[l] * increments[l]; S_0 = 0.
std::vector<double> rs_integral(std::span<const double> integrand,
                                std::span<const double> increments);

// Increments of M = N - int lambda dt for one subject: 0 at l = 0 and after
// at_risk_end, Delta N_l - lambda_l * dt otherwise.
std::vector<double> compensated_increments(const CountingRecord& record, Index subject,
                                           std::span<const double> intensity);

namespace transform {
struct Identity {};
// f applied to the sample at each grid point.
struct Pointwise {
  std::function<double(double)> f;
};
// x_{t - lag}; zero before the lag has elapsed. lag must be a positive
// multiple of the grid step.
struct TimeShift {
  double lag;
};
// sum_{i < l} kernel(t_l - t_i) x_{t_i} dt.
struct LinearFilter {
  std::function<double(double)> kernel;
};
}  // namespace transform

using IntegrandTransform = std::variant<transform::Identity, transform::Pointwise,
                                        transform::TimeShift, transform::LinearFilter>;

PathMatrix transform_integrand(const PathMatrix& x, const IntegrandTransform& spec);

}  // namespace clit
