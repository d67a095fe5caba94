#include "clit/harness.hpp"

#include "clit/errors.hpp"
#include "clit/lcm.hpp"
#include "clit/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace clit {

void parallel_for(Index count, int threads, const std::function<void(Index)>& fn) {
  if (count <= 0) return;
  const int workers = static_cast<int>(std::min<Index>(std::max(threads, 1), count));
  if (workers == 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (Index i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::uint64_t replication_seed(std::uint64_t base, Index cell, Index rep) {
  return hash_combine(hash_combine(base, static_cast<std::uint64_t>(cell)), static_cast<std::uint64_t>(rep));
}

std::vector<Cell> enumerate_cells(const ExperimentSpec& spec, bool calibrate) {
  std::vector<Cell> cells;
  for (const Index n : spec.n) {
    for (const auto& [kx, ky] : spec.kernels) {
      for (const double b2 : spec.beta2) {
        for (const auto& rho : spec.rho0) {
          Cell c;
          c.id = static_cast<Index>(cells.size());
          c.dgp = spec.dgp;
          c.dgp.n = n;
          c.dgp.kernel_x = kx;
          c.dgp.kernel_y = ky;
          c.dgp.beta2 = b2;
          c.dgp.rho0 = rho;
          if (calibrate && !c.dgp.beta1) c.dgp.beta1 = calibrate_beta1(c.dgp);
          cells.push_back(c);
        }
      }
    }
  }
  return cells;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

ResultRow base_row(const Cell& cell, Index rep, TestMethod test, std::uint64_t seed) {
  ResultRow r;
  r.cell = cell.id;
  r.n = cell.dgp.n;
  r.kernel_x = cell.dgp.kernel_x;
  r.kernel_y = cell.dgp.kernel_y;
  r.beta2 = cell.dgp.beta2;
  r.rho0 = cell.dgp.rho0.label();
  r.rep = rep;
  r.test = test;
  r.seed = seed;
  return r;
}

void fill(ResultRow& row, const TestReport& rep) {
  row.p_value = rep.p_value;
  row.statistic = rep.statistic;
  row.reject = rep.reject;
}


}  // namespace

std::vector<ResultRow> run_replication(const ExperimentSpec& spec, const Cell& cell, Index rep) {
  const std::uint64_t seed = replication_seed(spec.seed, cell.id, rep);
  std::map<TestMethod, ResultRow> rows;
  for (const auto m : spec.tests) rows.emplace(m, base_row(cell, rep, m, seed));

  DgpConfig dgp = cell.dgp;
  dgp.seed = seed;
  std::optional<SimulatedDataset> sim;
  try {
    sim = sample_dataset(dgp);
  } catch (const std::exception& e) {
    for (auto& [m, r] : rows) r.error = std::string("simulation: ") + e.what();
  }
  const ConfiguredLearner learner(spec.learner);

  auto run_group = [&](std::initializer_list<TestMethod> group, auto&& body) {
    std::vector<TestMethod> active;
    for (auto m : group)
      if (rows.count(m)) active.push_back(m);
    if (active.empty() || !sim) return;
    const auto start = Clock::now();
    try {
      body(active);
    } catch (const std::exception& e) {
      for (auto m : active) rows[m].error = e.what();
    }
    const double ms = elapsed_ms(start) / static_cast<double>(active.size());
    for (auto m : active) rows[m].runtime_ms = ms;
  };

  run_group({TestMethod::xlct_sup, TestMethod::xlct_endpoint}, [&](const std::vector<TestMethod>&) {
    const auto partition = FoldPartition::make(dgp.n, spec.K, hash_combine(seed, 1));
    const auto both = run_xlct_both(sim->data, partition, learner, spec.alpha);
    if (rows.count(TestMethod::xlct_sup)) fill(rows[TestMethod::xlct_sup], both.sup);
    if (rows.count(TestMethod::xlct_endpoint)) fill(rows[TestMethod::xlct_endpoint], both.endpoint);
  });
  run_group({TestMethod::lct_sup, TestMethod::lct_endpoint}, [&](const std::vector<TestMethod>&) {
    const auto split = FoldPartition::make(dgp.n, 2, hash_combine(seed, 2)).split(0);
    const auto residual = learner.fit_residual(sim->data, split);
    const auto intensity = learner.fit_intensity(sim->data, split);
    const LcmPath path = estimate_lcm_split(sim->data, split, *residual, *intensity);
    if (rows.count(TestMethod::lct_sup)) fill(rows[TestMethod::lct_sup], sup_report(path, spec.alpha));
    if (rows.count(TestMethod::lct_endpoint)) fill(rows[TestMethod::lct_endpoint], endpoint_report(path, spec.alpha));
  });
  run_group({TestMethod::cox_hr}, [&](const std::vector<TestMethod>&) {
    fill(rows[TestMethod::cox_hr], cox_hazard_ratio_test(sim->data, spec.alpha, spec.cox_l2));
  });

  std::vector<ResultRow> out;
  for (const auto m : spec.tests) out.push_back(rows[m]);
  return out;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, int threads, const ProgressFn& progress) {
  const auto cells = enumerate_cells(spec);
  const Index total = static_cast<Index>(cells.size()) * spec.reps;
  std::vector<std::vector<ResultRow>> slots(static_cast<std::size_t>(total));
  std::atomic<Index> done{0};
  std::mutex progress_mutex;
  parallel_for(total, threads, [&](Index i) {
    const auto& cell = cells[static_cast<std::size_t>(i / spec.reps)];
    slots[static_cast<std::size_t>(i)] = run_replication(spec, cell, i % spec.reps);
    const Index d = ++done;
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(d, total);
    }
  });
  std::vector<ResultRow> rows;
  for (auto& s : slots) rows.insert(rows.end(), s.begin(), s.end());
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<SummaryRow> out;
  std::map<std::pair<Index, TestMethod>, std::size_t> where;
  std::vector<Index> rejections;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.cell, r.test);
    auto it = where.find(key);
    if (it == where.end()) {
      SummaryRow s;
      s.n = r.n;
      s.kernel_x = r.kernel_x;
      s.kernel_y = r.kernel_y;
      s.beta2 = r.beta2;
      s.rho0 = r.rho0;
      s.test = r.test;
      it = where.emplace(key, out.size()).first;
      out.push_back(s);
      rejections.push_back(0);
    }
    auto& s = out[it->second];
    if (r.p_value) {
      ++s.reps;
      if (r.reject) ++rejections[it->second];
    } else {
      ++s.failures;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].reject_rate = out[i].reps > 0 ? static_cast<double>(rejections[i]) / static_cast<double>(out[i].reps)
                                         : std::nan("");
  }
  return out;
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows, bool with_runtime) {
  os << "cell,n,kernel_x,kernel_y,beta2,rho0,rep,test,p_value,statistic,reject,seed,runtime_ms,error\n";
  for (const auto& r : rows) {
    os << r.cell << ',' << r.n << ',' << to_string(r.kernel_x) << ',' << to_string(r.kernel_y) << ','
       << num(r.beta2) << ',' << csv_quote(r.rho0) << ',' << r.rep << ',' << to_string(r.test) << ','
       << (r.p_value ? num(*r.p_value) : "") << ',' << (r.p_value ? num(r.statistic) : "") << ','
       << (r.p_value ? (r.reject ? "1" : "0") : "") << ',' << r.seed << ','
       << (with_runtime ? num(std::round(r.runtime_ms * 1000.0) / 1000.0) : "0") << ',' << csv_quote(r.error)
       << '\n';
  }
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "n,kernel_x,kernel_y,beta2,rho0,test,reject_rate,reps,failures\n";
  for (const auto& s : rows) {
    os << s.n << ',' << to_string(s.kernel_x) << ',' << to_string(s.kernel_y) << ',' << num(s.beta2) << ','
       << csv_quote(s.rho0) << ',' << to_string(s.test) << ',' << num(s.reject_rate) << ',' << s.reps << ','
       << s.failures << '\n';
  }
}

namespace {

double walk_sup(RandomStream& rs, Index steps) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(steps));
  double s = 0.0, m = 0.0;
  for (Index k = 0; k < steps; ++k) {
    s += sd * rs.normal();
    m = std::max(m, std::abs(s));
  }
  return m;
}

}  // namespace

std::vector<double> random_walk_sup(Index walks, Index steps, std::uint64_t seed, int threads) {
  if (walks < 1 || steps < 1) throw DomainError("need at least one walk and one step");
  std::vector<double> out(static_cast<std::size_t>(walks));
  parallel_for(walks, threads, [&](Index w) {
    RandomStream rs(seed, static_cast<std::uint64_t>(w));
    out[static_cast<std::size_t>(w)] = walk_sup(rs, steps);
  });
  return out;
}

std::vector<FsTableRow> fs_table(const std::vector<double>& xs, const std::vector<double>& mc_sups,
                                 const SupNullDist& dist) {
  std::vector<double> sorted = mc_sups;
  std::sort(sorted.begin(), sorted.end());
  std::vector<FsTableRow> out;
  for (const double x : xs) {
    const auto below = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
    FsTableRow r;
    r.x = x;
    r.fs_series = fs_cdf(x, dist);
    r.fs_mc = static_cast<double>(below) / static_cast<double>(sorted.size());
    r.abs_diff = std::abs(r.fs_series - r.fs_mc);
    out.push_back(r);
  }
  return out;
}

std::vector<EcdfRow> discretization_ecdfs(const std::vector<Index>& qs, Index samples, std::uint64_t seed,
                                          int threads) {
  std::vector<EcdfRow> out;
  for (const Index q : qs) {
    if (q < 2) throw DomainError("grid size must be at least 2");
    // A q-point grid on [0, 1] has q - 1 increments.
    auto sups = random_walk_sup(samples, q - 1, hash_combine(seed, static_cast<std::uint64_t>(q)), threads);
    std::vector<double> p(sups.size());
    std::transform(sups.begin(), sups.end(), p.begin(), [](double m) { return 1.0 - fs_cdf(m); });
    std::sort(p.begin(), p.end());
    for (int k = 1; k <= 100; ++k) {
      const double u = k / 100.0;
      const auto cnt = std::upper_bound(p.begin(), p.end(), u) - p.begin();
      out.push_back({q, u, static_cast<double>(cnt) / static_cast<double>(p.size())});
    }
  }
  return out;
}

std::string to_json(const CheckResult& c) {
  nlohmann::ordered_json j;
  j["check"] = c.name;
  j["value"] = c.value;
  j["lower"] = c.lower;
  j["upper"] = c.upper;
  j["pass"] = c.pass;
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j.dump();
}

double ks_uniform(std::vector<double> sample) {
  if (sample.empty()) throw InputError("empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double x = std::clamp(sample[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
  }
  return d;
}

namespace {

class ScaledResidual final : public FittedResidual {
 public:
  ScaledResidual(std::shared_ptr<const FittedResidual> inner, double c) : inner_(std::move(inner)), c_(c) {}
  ResidualKind kind() const override { return inner_->kind(); }
  Matrix residuals(const Dataset& data, std::span<const Index> rows) const override {
    return c_ * inner_->residuals(data, rows);
  }

 private:
  std::shared_ptr<const FittedResidual> inner_;
  double c_;
};

std::vector<Index> all_rows(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

CheckResult make_check(std::string name, double value, double lo, double hi, std::string detail = {}) {
  return CheckResult{std::move(name), value, lo, hi, value >= lo && value <= hi, std::move(detail)};
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

std::vector<CheckResult> oracle_calibration_suite(const OracleCalibrationOptions& opt) {
  DgpConfig base;
  base.n = opt.n;
  base.q = opt.q;
  base.kernel_x = opt.kernel_x;
  base.kernel_y = KernelKind::zero;
  base.y_noise = false;
  base.beta2 = opt.beta2;
  base.beta1 = calibrate_beta1(base);

  const auto nuisances = oracle_nuisances(base);
  const TrainSplit split{{}, all_rows(opt.n)};

  std::vector<double> endpoint(static_cast<std::size_t>(opt.reps), std::nan(""));
  std::vector<double> sup_p(static_cast<std::size_t>(opt.reps), std::nan(""));
  parallel_for(opt.reps, opt.threads, [&](Index r) {
    DgpConfig cfg = base;
    cfg.seed = replication_seed(opt.seed, 0, r);
    const auto sim = sample_dataset(cfg);
    const LcmPath path = estimate_lcm_split(sim.data, split, *nuisances.residual, *nuisances.intensity);
    if (!(path.variance.back() > 0.0)) return;
    endpoint[static_cast<std::size_t>(r)] = std::sqrt(path.scale_n / path.variance.back()) * path.gamma.back();
    sup_p[static_cast<std::size_t>(r)] = 1.0 - fs_cdf(sup_statistic(path));
  });
  const auto degenerate = std::count_if(endpoint.begin(), endpoint.end(), [](double v) { return std::isnan(v); });
  std::erase_if(endpoint, [](double v) { return std::isnan(v); });
  std::erase_if(sup_p, [](double v) { return std::isnan(v); });

  std::vector<CheckResult> out;
  const std::string detail = "reps=" + std::to_string(endpoint.size()) + " degenerate=" + std::to_string(degenerate);
  if (endpoint.size() < 2) {
    out.push_back(make_check("endpoint_mean", std::nan(""), -0.1, 0.1, detail));
    out.push_back(make_check("endpoint_variance", std::nan(""), 0.8, 1.2, detail));
    out.push_back(make_check("sup_pvalue_ks", std::nan(""), 0.0, 0.08, detail));
  } else {
    out.push_back(make_check("endpoint_mean", mean_of(endpoint), -0.1, 0.1, detail));
    out.push_back(make_check("endpoint_variance", var_of(endpoint), 0.8, 1.2, detail));
    const double ks = ks_uniform(sup_p);
    auto c = make_check("sup_pvalue_ks", ks, 0.0, 0.08, detail);
    c.pass = ks < 0.08;
    out.push_back(c);
  }

  // Multiplying G_hat by c leaves the statistic unchanged.
  DgpConfig cfg = base;
  cfg.seed = replication_seed(opt.seed, 1, 0);
  const auto sim = sample_dataset(cfg);
  const ScaledResidual scaled(nuisances.residual, 3.0);
  const LcmPath p1 = estimate_lcm_split(sim.data, split, *nuisances.residual, *nuisances.intensity);
  const LcmPath p3 = estimate_lcm_split(sim.data, split, scaled, *nuisances.intensity);
  const double t1 = sup_statistic(p1), t3 = sup_statistic(p3);
  out.push_back(make_check("scale_equivariance", std::abs(t3 - t1) / t1, 0.0, 1e-13,
                           "T=" + num(t1) + " T(3G)=" + num(t3)));
  return out;
}

DebiasComparison compare_plugin_crossfit(const DgpConfig& dgp_in, const LearnerConfig& learner_cfg, Index K,
                                         Index reps, int threads) {
  DgpConfig dgp = dgp_in;
  if (!dgp.beta1) dgp.beta1 = calibrate_beta1(dgp);
  const ConfiguredLearner learner(learner_cfg);
  std::vector<double> cf(static_cast<std::size_t>(reps), std::nan(""));
  std::vector<double> pi(static_cast<std::size_t>(reps), std::nan(""));
  parallel_for(reps, threads, [&](Index r) {
    DgpConfig cfg = dgp;
    cfg.seed = replication_seed(dgp_in.seed, 0, r);
    try {
      const auto sim = sample_dataset(cfg);
      const auto partition = FoldPartition::make(cfg.n, K, hash_combine(cfg.seed, 1));
      const auto cross = estimate_lcm_crossfit(sim.data, partition, learner);
      const TrainSplit everything{all_rows(cfg.n), {}};
      const auto intensity = learner.fit_intensity(sim.data, everything);
      const auto plug = estimate_lcm_plugin(sim.data, *intensity);
      cf[static_cast<std::size_t>(r)] = cross.path.gamma.back();
      pi[static_cast<std::size_t>(r)] = plug.gamma.back();
    } catch (const Error&) {
      // Counted as a failure below.
    }
  });
  DebiasComparison out;
  std::erase_if(cf, [](double v) { return std::isnan(v); });
  std::erase_if(pi, [](double v) { return std::isnan(v); });
  out.reps = static_cast<Index>(cf.size());
  out.failures = reps - out.reps;
  if (cf.size() >= 2) {
    out.crossfit_mean = mean_of(cf);
    out.crossfit_se = std::sqrt(var_of(cf) / static_cast<double>(cf.size()));
    out.plugin_mean = mean_of(pi);
    out.plugin_se = std::sqrt(var_of(pi) / static_cast<double>(pi.size()));
  }
  return out;
}

}  // namespace clit
