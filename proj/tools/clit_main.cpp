// Command-line front end. Exit codes: 0 success, 1 usage or configuration
// error, 2 degenerate statistic, 3 numerical failure.

#include "clit/config.hpp"
#include "clit/errors.hpp"
#include "clit/harness.hpp"
#include "clit/io.hpp"
#include "clit/lcm.hpp"
#include "clit/lct.hpp"
#include "clit/rng.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace clit;

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::optional<Index> grid_q;
};

int cmd_simulate(const Globals& g, const std::string& config, const std::string& out) {
  DgpConfig cfg = parse_dgp_config(read_text_file(config));
  if (g.seed) cfg.seed = *g.seed;
  if (g.grid_q) cfg.q = *g.grid_q;
  const auto sim = sample_dataset(cfg);
  write_dataset(out, sim);
  std::cout << dgp_to_json(sim.config, false) << '\n';
  return 0;
}

struct TestOptions {
  std::string data;
  std::string method = "xlct_sup";
  Index K = 5;
  double alpha = 0.05;
  std::string emit_path;
  std::string learner_config;
  bool zero_residual = false;
  bool oracle = false;
};

int cmd_test(const Globals& g, const TestOptions& o) {
  const auto loaded = read_dataset(o.data);
  const Dataset& data = loaded.data;
  const TestMethod method = test_method_from_string(o.method);
  const std::uint64_t seed = g.seed.value_or(1);

  if (method == TestMethod::cox_hr) {
    TestReport r = cox_hazard_ratio_test(data, o.alpha);
    r.seed = seed;
    std::cout << to_json(r) << '\n';
    return 0;
  }

  std::shared_ptr<const NuisanceLearner> learner;
  if (o.oracle) {
    if (!loaded.meta) throw InputError("--oracle needs meta.json with the generating configuration");
    const auto nuis = oracle_nuisances(*loaded.meta);
    learner = std::make_shared<FixedLearner>(nuis.residual, nuis.intensity);
  } else {
    LearnerConfig lc;
    if (!o.learner_config.empty()) lc = parse_learner_config(read_text_file(o.learner_config));
    learner = std::make_shared<ConfiguredLearner>(lc);
  }
  if (o.zero_residual) learner = std::make_shared<ZeroResidualLearner>(learner);

  LcmPath path;
  std::vector<FoldDiagnostics> folds;
  const bool cross = method == TestMethod::xlct_sup || method == TestMethod::xlct_endpoint;
  if (cross) {
    const auto partition = FoldPartition::make(data.subjects(), o.K, seed);
    auto cf = estimate_lcm_crossfit(data, partition, *learner);
    path = std::move(cf.path);
    folds = std::move(cf.folds);
  } else {
    const auto split = FoldPartition::make(data.subjects(), 2, seed).split(0);
    const auto res = learner->fit_residual(data, split);
    const auto lam = learner->fit_intensity(data, split);
    path = estimate_lcm_split(data, split, *res, *lam);
  }
  if (!o.emit_path.empty()) {
    std::ofstream os(o.emit_path);
    if (!os) throw InputError("cannot write " + o.emit_path);
    write_csv(os, path);
  }
  const bool endpoint = method == TestMethod::xlct_endpoint || method == TestMethod::lct_endpoint;
  TestReport r = endpoint ? endpoint_report(path, o.alpha) : sup_report(path, o.alpha);
  r.seed = seed;
  r.folds = std::move(folds);
  std::cout << to_json(r) << '\n';
  return 0;
}

int cmd_experiment(const Globals& g, const std::string& spec_path, const std::string& out,
                   std::string summary_path, bool no_timing, bool quiet) {
  ExperimentSpec spec = parse_experiment_spec(read_text_file(spec_path));
  if (g.seed) spec.seed = *g.seed;
  if (g.grid_q) spec.dgp.q = *g.grid_q;
  ProgressFn progress;
  if (!quiet) {
    progress = [](Index done, Index total) {
      if (done == total || done % 10 == 0) std::fprintf(stderr, "\r%lld/%lld", static_cast<long long>(done),
                                                        static_cast<long long>(total));
      if (done == total) std::fputc('\n', stderr);
    };
  }
  const auto rows = run_experiment(spec, g.threads, progress);
  {
    std::ofstream os(out);
    if (!os) throw InputError("cannot write " + out);
    write_results_csv(os, rows, !no_timing);
  }
  if (summary_path.empty()) {
    const auto dot = out.rfind('.');
    summary_path = (dot == std::string::npos ? out : out.substr(0, dot)) + "_summary.csv";
  }
  const auto summary = summarize(rows);
  std::ofstream os(summary_path);
  if (!os) throw InputError("cannot write " + summary_path);
  write_summary_csv(os, summary);
  write_summary_csv(std::cout, summary);
  return 0;
}

int cmd_fs_table(const Globals& g, Index walks, Index steps, const std::string& out, const std::string& ecdf_out,
                 Index ecdf_samples) {
  const std::uint64_t seed = g.seed.value_or(1);
  const auto sups = random_walk_sup(walks, steps, seed, g.threads);
  const auto rows = fs_table({0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0}, sups);
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw InputError("cannot write " + out);
  }
  std::ostream& os = out.empty() ? std::cout : file;
  os << "x,fs_series,fs_mc,abs_diff\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.4g,%.10f,%.10f,%.10f\n", r.x, r.fs_series, r.fs_mc, r.abs_diff);
    os << buf;
  }
  if (!ecdf_out.empty()) {
    const auto ecdf = discretization_ecdfs({16, 32, 64, 128, 256}, ecdf_samples, hash_combine(seed, 7), g.threads);
    std::ofstream es(ecdf_out);
    if (!es) throw InputError("cannot write " + ecdf_out);
    es << "q,u,ecdf\n";
    for (const auto& e : ecdf) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%lld,%.2f,%.6f\n", static_cast<long long>(e.q), e.u, e.ecdf);
      es << buf;
    }
  }
  return 0;
}

int cmd_calibrate(const Globals& g, Index n, Index reps) {
  OracleCalibrationOptions opt;
  opt.n = n;
  opt.reps = reps;
  if (g.grid_q) opt.q = *g.grid_q;
  opt.seed = g.seed.value_or(1);
  opt.threads = g.threads;
  for (const auto& c : oracle_calibration_suite(opt)) std::cout << to_json(c) << '\n';
  return 0;
}

int report_error(int code, const std::string& kind, const std::string& what) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = what;
  j["exit_code"] = code;
  (code == 2 ? std::cout : std::cerr) << j.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local covariance tests for conditional local independence"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Base seed")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--grid-q", g.grid_q, "Override the grid size")->check(CLI::Range(2, 1 << 20));

  std::string sim_config, sim_out;
  auto* sim = app.add_subcommand("simulate", "Sample a dataset from a DGP config");
  sim->add_option("--config", sim_config, "YAML file with a dgp table")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "Output directory")->required();

  TestOptions topt;
  auto* test = app.add_subcommand("test", "Run a test on a dataset directory");
  test->add_option("--data", topt.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  test->add_option("--method", topt.method, "xlct_sup, xlct_endpoint, lct_sup, lct_endpoint or cox_hr");
  test->add_option("--k", topt.K, "Number of folds")->check(CLI::Range(2, 1000));
  test->add_option("--alpha", topt.alpha, "Significance level")->check(CLI::Range(1e-12, 1.0 - 1e-12));
  test->add_option("--emit-path", topt.emit_path, "Write the LCM path CSV here");
  test->add_option("--learner", topt.learner_config, "YAML file with a learner table")->check(CLI::ExistingFile);
  test->add_flag("--zero-residual", topt.zero_residual, "Stub learner with G_hat = 0");
  test->add_flag("--oracle", topt.oracle, "Closed-form nuisances from meta.json (oracle scenario only)");

  std::string spec_path, exp_out, summary_out;
  bool no_timing = false, quiet = false;
  auto* exp = app.add_subcommand("experiment", "Run a replicated sweep");
  exp->add_option("--spec", spec_path, "Experiment YAML")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", exp_out, "Per-replication CSV")->required();
  exp->add_option("--summary", summary_out, "Summary CSV (default: <out>_summary.csv)");
  exp->add_flag("--no-timing", no_timing, "Write runtime_ms as 0 for byte-identical reruns");
  exp->add_flag("--quiet", quiet, "No progress output");

  Index walks = 100000, steps = 8192, ecdf_samples = 20000;
  std::string fs_out, ecdf_out;
  auto* fst = app.add_subcommand("fs-table", "Compare the sup|B| series with random-walk Monte Carlo");
  fst->add_option("--mc-walks", walks, "Number of walks")->check(CLI::PositiveNumber);
  fst->add_option("--mc-steps", steps, "Steps per walk")->check(CLI::PositiveNumber);
  fst->add_option("--out", fs_out, "CSV output (default: stdout)");
  fst->add_option("--ecdf-out", ecdf_out, "Per-q p-value ECDFs CSV");
  fst->add_option("--ecdf-samples", ecdf_samples, "Walks per q for the ECDFs")->check(CLI::PositiveNumber);

  Index cal_n = 500, cal_reps = 500;
  auto* cal = app.add_subcommand("calibrate", "Oracle-nuisance calibration checks");
  cal->add_option("--n", cal_n, "Subjects per replication")->check(CLI::Range(2, 10000000));
  cal->add_option("--reps", cal_reps, "Replications")->check(CLI::Range(2, 10000000));

  for (auto* sub : {sim, test, exp, fst, cal}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*sim) return cmd_simulate(g, sim_config, sim_out);
    if (*test) return cmd_test(g, topt);
    if (*exp) return cmd_experiment(g, spec_path, exp_out, summary_out, no_timing, quiet);
    if (*fst) return cmd_fs_table(g, walks, steps, fs_out, ecdf_out, ecdf_samples);
    if (*cal) return cmd_calibrate(g, cal_n, cal_reps);
  } catch (const DegenerateVarianceError& e) {
    return report_error(2, "degenerate_variance", e.what());
  } catch (const ConvergenceError& e) {
    return report_error(3, "convergence", e.what());
  } catch (const IllConditionedError& e) {
    return report_error(3, "ill_conditioned", e.what());
  } catch (const DomainError& e) {
    return report_error(3, "domain", e.what());
  } catch (const ParseError& e) {
    return report_error(1, "parse", e.what());
  } catch (const Error& e) {
    return report_error(1, "input", e.what());
  } catch (const std::exception& e) {
    return report_error(1, "io", e.what());
  }
  return 1;
}
