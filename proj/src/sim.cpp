#include "clit/sim.hpp"

#include "clit/errors.hpp"
#include "clit/learners.hpp"
#include "clit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace clit {

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::zero: return "zero";
    case KernelKind::constant: return "constant";
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::sine: return "sine";
  }
  return "?";
}

KernelKind kernel_from_string(const std::string& name) {
  if (name == "zero") return KernelKind::zero;
  if (name == "constant") return KernelKind::constant;
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "sine") return KernelKind::sine;
  throw InputError("unknown kernel '" + name + "' (expected zero, constant, gaussian or sine)");
}

double kernel_eval(KernelKind kind, double s, double t) {
  if (s > t) throw DomainError("historical kernel evaluated with s > t");
  switch (kind) {
    case KernelKind::zero: return 0.0;
    case KernelKind::constant: return 1.0;
    case KernelKind::gaussian: return std::exp(-2.0 * (t - s) * (t - s));
    case KernelKind::sine: return std::sin(4.0 * t - 20.0 * s);
  }
  return 0.0;
}

double LocalAlternative::at(double t) const {
  switch (kind) {
    case Kind::none: return 0.0;
    case Kind::constant: return value;
    case Kind::step: return t <= 0.4 ? 5.0 : -5.0;
    case Kind::cos: return 7.0 * std::cos(4.0 * std::numbers::pi * t);
  }
  return 0.0;
}

std::string LocalAlternative::label() const {
  switch (kind) {
    case Kind::none: return "0";
    case Kind::constant: {
      std::ostringstream os;
      os << value;
      return os.str();
    }
    case Kind::step: return "step";
    case Kind::cos: return "cos";
  }
  return "?";
}

LocalAlternative LocalAlternative::parse(const std::string& text) {
  if (text == "none" || text == "0") return {};
  if (text == "step") return {Kind::step, 0.0};
  if (text == "cos") return {Kind::cos, 0.0};
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw InputError("");
    if (v == 0.0) return {};
    return {Kind::constant, v};
  } catch (const std::exception&) {
    throw InputError("unknown local alternative '" + text + "' (expected none, a number, step or cos)");
  }
}

bool is_oracle_scenario(const DgpConfig& cfg) {
  return cfg.kernel_y == KernelKind::zero && !cfg.y_noise && cfg.rho0.is_null();
}

namespace {

constexpr std::uint64_t kPilotSeed = 0x7069'6c6f'7462'3131ULL;
constexpr Index kPilotSize = 4000;

// Lower-triangular quadrature weights w(l, i) = rho(t_i, t_l) dt for i < l.
Matrix kernel_weights(KernelKind kind, const TimeGrid& grid) {
  const Index q = grid.size();
  Matrix w = Matrix::Zero(q, q);
  for (Index l = 1; l < q; ++l) {
    for (Index i = 0; i < l; ++i) w(l, i) = kernel_eval(kind, grid[i], grid[l]) * grid.step();
  }
  return w;
}

struct SubjectDraw {
  Vector z, x, projection, unit_hazard;  // unit hazard: lambda^full / beta1
  double threshold = 0.0;                // E ~ Exp(1)
};

class SubjectSampler {
 public:
  SubjectSampler(const DgpConfig& cfg)
      : cfg_(cfg), grid_(cfg.q), wx_(kernel_weights(cfg.kernel_x, grid_)), wy_(kernel_weights(cfg.kernel_y, grid_)) {}

  const TimeGrid& grid() const { return grid_; }

  SubjectDraw draw(std::uint64_t seed, Index subject) const {
    const Index q = grid_.size();
    const double sd = 1.0 / std::sqrt(static_cast<double>(q));
    RandomStream rs(seed, static_cast<std::uint64_t>(subject));

    const double xi1 = rs.normal(), xi2 = rs.normal(), xi3 = rs.normal();
    auto walk = [&] {
      Vector w(q);
      double acc = 0.0;
      for (Index l = 0; l < q; ++l) {
        acc += sd * rs.normal();
        w[l] = acc;
      }
      return w;
    };
    const Vector ww = walk();
    const Vector v = walk();
    Vector w = walk();
    if (!cfg_.y_noise) w.setZero();

    SubjectDraw d;
    d.z.resize(q);
    for (Index l = 0; l < q; ++l) {
      const double t = grid_[l];
      d.z[l] = xi1 + xi2 * t + std::sin(2.0 * std::numbers::pi * xi3 * t) + ww[l];
    }
    d.projection = wx_ * d.z;
    d.x = d.projection + v;
    const Vector y = wy_ * d.z + w;

    const double inv_root_n = 1.0 / std::sqrt(static_cast<double>(cfg_.n));
    d.unit_hazard.resize(q);
    for (Index l = 0; l < q; ++l) {
      const double t = grid_[l];
      const double eta = cfg_.beta2 * d.z[l] + y[l] + cfg_.rho0.at(t) * inv_root_n * d.x[l];
      d.unit_hazard[l] = t * t * std::exp(eta);
    }
    d.threshold = rs.exponential();
    return d;
  }

 private:
  DgpConfig cfg_;
  TimeGrid grid_;
  Matrix wx_, wy_;
};

// First index l >= 1 where sum_{1<=m<=l} beta1 u_m dt reaches E; -1 if none.
Index event_index(const Vector& unit_hazard, double beta1, double dt, double threshold, double& cumulative) {
  cumulative = 0.0;
  for (Index l = 1; l < unit_hazard.size(); ++l) {
    cumulative += beta1 * unit_hazard[l] * dt;
    if (cumulative >= threshold) return l;
  }
  return -1;
}

}  // namespace

double calibrate_beta1(const DgpConfig& cfg) {
  SubjectSampler sampler(cfg);
  const double dt = sampler.grid().step();
  const Index q = cfg.q;
  // Each subject has an event before 1 iff beta1 >= E / sum(u) dt.
  std::vector<double> needed(static_cast<std::size_t>(kPilotSize));
  for (Index j = 0; j < kPilotSize; ++j) {
    const SubjectDraw d = sampler.draw(kPilotSeed, j);
    const double total = d.unit_hazard.tail(q - 1).sum() * dt;
    needed[static_cast<std::size_t>(j)] = total > 0.0 ? d.threshold / total : std::numeric_limits<double>::infinity();
  }
  const double target = static_cast<double>(q - 1) / static_cast<double>(q) * static_cast<double>(kPilotSize);
  for (double beta1 = 1.0; beta1 < 1e12; beta1 *= 2.0) {
    // The strict threshold comparison mirrors event_index (>=) up to ties.
    const auto hits = std::count_if(needed.begin(), needed.end(), [&](double b) { return b <= beta1; });
    if (static_cast<double>(hits) > target) return beta1;
  }
  throw DomainError("could not calibrate beta1: hazard too small");
}

namespace {

// Draws `count` subjects; the local alternative still scales with cfg.n.
SimulatedDataset simulate(const DgpConfig& cfg_in, Index count) {
  if (count < 1) throw DomainError("need at least one subject");
  DgpConfig cfg = cfg_in;
  if (!cfg.beta1) cfg.beta1 = calibrate_beta1(cfg);
  if (*cfg.beta1 <= 0.0) throw DomainError("beta1 must be positive");
  const double beta1 = *cfg.beta1;

  SubjectSampler sampler(cfg);
  const TimeGrid& grid = sampler.grid();
  const Index q = cfg.q, n = count;
  const double dt = grid.step();

  Matrix x(n, q), z(n, q), proj(n, q), lam = Matrix::Zero(n, q);
  std::vector<Index> event(static_cast<std::size_t>(n));
  std::vector<double> cum_at_exit(static_cast<std::size_t>(n)), thresholds(static_cast<std::size_t>(n));

  for (Index j = 0; j < n; ++j) {
    SubjectDraw d = sampler.draw(cfg.seed, j);
    double cumulative = 0.0;
    const Index e = event_index(d.unit_hazard, beta1, dt, d.threshold, cumulative);
    event[static_cast<std::size_t>(j)] = e;
    cum_at_exit[static_cast<std::size_t>(j)] = cumulative;
    thresholds[static_cast<std::size_t>(j)] = d.threshold;
    const Index last = e < 0 ? q - 1 : e;
    // Stop the processes at the event time.
    for (Index l = last + 1; l < q; ++l) {
      d.z[l] = d.z[last];
      d.x[l] = d.x[last];
      d.projection[l] = d.projection[last];
    }
    for (Index l = 0; l <= last; ++l) lam(j, l) = beta1 * d.unit_hazard[l];
    x.row(j) = d.x.transpose();
    z.row(j) = d.z.transpose();
    proj.row(j) = d.projection.transpose();
  }

  Dataset data(PathMatrix(grid, std::move(x)), PathMatrix(grid, std::move(z)),
               CountingRecord::survival(grid, event));
  return SimulatedDataset{std::move(data),     cfg,
                          cfg.rho0.is_null(),  std::move(proj),
                          std::move(lam),      std::move(cum_at_exit),
                          std::move(thresholds)};
}

}  // namespace

SimulatedDataset sample_dataset(const DgpConfig& cfg) { return simulate(cfg, cfg.n); }

GammaEstimate mc_true_gamma(const DgpConfig& cfg_in, Index reps) {
  if (reps < 2) throw DomainError("mc_true_gamma needs at least 2 replications");
  DgpConfig cfg = cfg_in;
  if (!cfg.beta1) cfg.beta1 = calibrate_beta1(cfg);
  const Index q = cfg.q;

  // Intensity from an independent, larger pilot sample.
  DgpConfig pilot_cfg = cfg;
  pilot_cfg.seed = hash_combine(cfg.seed, 0x70696c6f74ULL);
  const SimulatedDataset pilot = simulate(pilot_cfg, std::max<Index>(cfg.n, kPilotSize));
  std::vector<Index> all(static_cast<std::size_t>(pilot.data.subjects()));
  std::iota(all.begin(), all.end(), Index{0});
  const TrainSplit pilot_split{all, {}};
  const auto intensity = fit_historical_loglinear_intensity(pilot.data, pilot_split, IntensityConfig{});

  const TimeGrid grid(q);
  std::vector<double> sum(static_cast<std::size_t>(q), 0.0), sumsq(static_cast<std::size_t>(q), 0.0);
  for (Index r = 0; r < reps; ++r) {
    DgpConfig rc = cfg;
    rc.seed = hash_combine(cfg.seed, static_cast<std::uint64_t>(r) + 0x100);
    const SimulatedDataset ds = sample_dataset(rc);
    std::vector<Index> rows(static_cast<std::size_t>(cfg.n));
    for (std::size_t j = 0; j < rows.size(); ++j) rows[j] = static_cast<Index>(j);
    const Matrix lam = intensity->intensity(ds.data, rows);
    std::vector<double> path(static_cast<std::size_t>(q), 0.0);
    for (Index j = 0; j < cfg.n; ++j) {
      const Vector g = (ds.data.x.values.row(j) - ds.true_projection.row(j)).transpose();
      const auto inc = compensated_increments(ds.data.record, j, {lam.data() + j * q, static_cast<std::size_t>(q)});
      const auto s = rs_integral({g.data(), static_cast<std::size_t>(q)}, inc);
      for (Index l = 0; l < q; ++l) path[static_cast<std::size_t>(l)] += s[static_cast<std::size_t>(l)];
    }
    for (Index l = 0; l < q; ++l) {
      const double v = path[static_cast<std::size_t>(l)] / static_cast<double>(cfg.n);
      sum[static_cast<std::size_t>(l)] += v;
      sumsq[static_cast<std::size_t>(l)] += v * v;
    }
  }
  GammaEstimate out{grid, std::vector<double>(static_cast<std::size_t>(q)), std::vector<double>(static_cast<std::size_t>(q))};
  const double R = static_cast<double>(reps);
  for (std::size_t l = 0; l < static_cast<std::size_t>(q); ++l) {
    const double mean = sum[l] / R;
    const double var = std::max(0.0, (sumsq[l] - R * mean * mean) / (R - 1.0));
    out.mean[l] = mean;
    out.std_error[l] = std::sqrt(var / R);
  }
  return out;
}

}  // namespace clit
