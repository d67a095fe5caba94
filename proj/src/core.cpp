#include "clit/core.hpp"

#include "clit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace clit {

TimeGrid::TimeGrid(Index q) {
  if (q < 2) throw DomainError("time grid needs at least 2 points, got " + std::to_string(q));
  points_.resize(static_cast<std::size_t>(q));
  for (Index i = 0; i < q; ++i) points_[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(q - 1);
  step_ = 1.0 / static_cast<double>(q - 1);
}

TimeGrid TimeGrid::from_points(const std::vector<double>& points) {
  const auto q = static_cast<Index>(points.size());
  TimeGrid grid(q);
  for (Index i = 0; i < q; ++i) {
    if (std::abs(points[static_cast<std::size_t>(i)] - grid[i]) > 1e-9) {
      throw DomainError("grid point " + std::to_string(i) + " is not on the equidistant grid over [0,1]");
    }
  }
  return grid;
}

PathMatrix::PathMatrix(TimeGrid g, Matrix v) : grid(std::move(g)), values(std::move(v)) {
  if (values.cols() != grid.size()) {
    throw DimensionError("path matrix has " + std::to_string(values.cols()) + " columns, grid has " +
                         std::to_string(grid.size()) + " points");
  }
  if (!values.allFinite()) throw DomainError("path matrix contains non-finite entries");
}

PredictablePath::PredictablePath(TimeGrid g, Matrix v) : grid(std::move(g)), values(std::move(v)) {
  if (values.cols() != grid.size()) throw DimensionError("predictable path does not match grid");
  if (!values.allFinite()) throw DomainError("predictable path contains non-finite entries");
}

CountingRecord::CountingRecord(TimeGrid grid, std::vector<std::vector<Index>> event_times,
                               std::vector<Index> at_risk_end)
    : grid_(std::move(grid)), event_times_(std::move(event_times)), at_risk_end_(std::move(at_risk_end)) {
  if (event_times_.size() != at_risk_end_.size()) {
    throw DimensionError("event list and at-risk list have different lengths");
  }
  const Index q = grid_.size();
  for (std::size_t j = 0; j < event_times_.size(); ++j) {
    const auto& ev = event_times_[j];
    if (!std::is_sorted(ev.begin(), ev.end())) throw DomainError("event times must be sorted");
    if (at_risk_end_[j] < 0 || at_risk_end_[j] > q) throw DomainError("at_risk_end out of range");
    for (Index e : ev) {
      if (e < 1 || e >= q) throw DomainError("event index " + std::to_string(e) + " outside [1, q-1]");
      if (e > at_risk_end_[j]) throw DomainError("event after the end of the at-risk period");
    }
  }
}

CountingRecord CountingRecord::survival(TimeGrid grid, const std::vector<Index>& event_index) {
  const Index q = grid.size();
  std::vector<std::vector<Index>> events(event_index.size());
  std::vector<Index> end(event_index.size(), q);
  for (std::size_t j = 0; j < event_index.size(); ++j) {
    if (event_index[j] >= 0) {
      events[j].push_back(event_index[j]);
      end[j] = event_index[j];
    }
  }
  return CountingRecord(std::move(grid), std::move(events), std::move(end));
}

bool CountingRecord::is_survival() const {
  for (std::size_t j = 0; j < event_times_.size(); ++j) {
    const auto& ev = event_times_[j];
    if (ev.size() > 1) return false;
    if (ev.size() == 1 && ev.front() != at_risk_end_[j]) return false;
    if (ev.empty() && at_risk_end_[j] != grid_.size()) return false;
  }
  return true;
}

Index CountingRecord::event_index(Index j) const {
  const auto& ev = events(j);
  return ev.empty() ? -1 : ev.front();
}

Index CountingRecord::total_events() const {
  Index m = 0;
  for (const auto& ev : event_times_) m += static_cast<Index>(ev.size());
  return m;
}

std::vector<double> CountingRecord::jumps(Index j) const {
  std::vector<double> dn(static_cast<std::size_t>(grid_.size()), 0.0);
  for (Index e : events(j)) dn[static_cast<std::size_t>(e)] += 1.0;
  return dn;
}

std::vector<double> CountingRecord::counting_path(Index j) const {
  auto n = jumps(j);
  for (std::size_t i = 1; i < n.size(); ++i) n[i] += n[i - 1];
  return n;
}

Dataset::Dataset(PathMatrix x_, PathMatrix z_, CountingRecord record_)
    : x(std::move(x_)), z(std::move(z_)), record(std::move(record_)) {
  if (!(x.grid == z.grid) || !(x.grid == record.grid())) throw DimensionError("dataset components use different grids");
  if (x.rows() != z.rows() || x.rows() != record.subjects()) {
    throw DimensionError("dataset components have different numbers of subjects");
  }
}

std::vector<double> rs_integral(std::span<const double> integrand, std::span<const double> increments) {
  if (integrand.size() != increments.size()) {
    throw DimensionError("integrand and integrator are defined on different grids");
  }
  std::vector<double> out(integrand.size(), 0.0);
  double acc = 0.0;
  for (std::size_t l = 1; l < integrand.size(); ++l) {
    acc += integrand[l] * increments[l];
    out[l] = acc;
  }
  return out;
}

std::vector<double> compensated_increments(const CountingRecord& record, Index subject,
                                           std::span<const double> intensity) {
  const Index q = record.grid().size();
  if (static_cast<Index>(intensity.size()) != q) throw DimensionError("intensity row does not match grid");
  const double dt = record.grid().step();
  const Index end = std::min(record.at_risk_end(subject), q - 1);
  std::vector<double> inc(static_cast<std::size_t>(q), 0.0);
  for (Index l = 1; l <= end; ++l) {
    const double lam = intensity[static_cast<std::size_t>(l)];
    if (lam < 0.0) throw DomainError("negative intensity at grid index " + std::to_string(l));
    inc[static_cast<std::size_t>(l)] = -lam * dt;
  }
  for (Index e : record.events(subject)) inc[static_cast<std::size_t>(e)] += 1.0;
  return inc;
}

namespace {

Index lag_in_steps(const TimeGrid& grid, double lag) {
  const double steps = lag / grid.step();
  const double rounded = std::round(steps);
  if (lag <= 0.0 || std::abs(steps - rounded) > 1e-9) {
    throw DomainError("time shift must be a positive multiple of the grid step");
  }
  return static_cast<Index>(rounded);
}

}  // namespace

PathMatrix transform_integrand(const PathMatrix& x, const IntegrandTransform& spec) {
  const Index n = x.rows();
  const Index q = x.grid.size();
  const double dt = x.grid.step();
  Matrix out = Matrix::Zero(n, q);

  if (std::holds_alternative<transform::Identity>(spec)) {
    out = x.values;
  } else if (const auto* pw = std::get_if<transform::Pointwise>(&spec)) {
    out = x.values.unaryExpr([&](double v) { return pw->f(v); });
  } else if (const auto* sh = std::get_if<transform::TimeShift>(&spec)) {
    const Index s = lag_in_steps(x.grid, sh->lag);
    for (Index l = s; l < q; ++l) out.col(l) = x.values.col(l - s);
  } else if (const auto* lf = std::get_if<transform::LinearFilter>(&spec)) {
    // Weights depend only on the lag, so tabulate them once.
    std::vector<double> w(static_cast<std::size_t>(q));
    for (Index d = 0; d < q; ++d) w[static_cast<std::size_t>(d)] = lf->kernel(static_cast<double>(d) * dt) * dt;
    for (Index j = 0; j < n; ++j) {
      for (Index l = 1; l < q; ++l) {
        double acc = 0.0;
        for (Index i = 0; i < l; ++i) acc += w[static_cast<std::size_t>(l - i)] * x.values(j, i);
        out(j, l) = acc;
      }
    }
  }
  return PathMatrix(x.grid, std::move(out));
}

}  // namespace clit
