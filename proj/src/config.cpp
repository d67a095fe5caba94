#include "clit/config.hpp"

#include "clit/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace clit {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().is_null() ? 0 : node.Mark().line + 1; }

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) {
  const int line = line_of(node);
  throw ParseError("line " + std::to_string(line) + ": " + what, line);
}

YAML::Node load(const std::string& text) {
  try {
    YAML::Node root = YAML::Load(text);
    if (root.IsNull()) return YAML::Node(YAML::NodeType::Map);
    if (!root.IsMap()) fail(root, "expected a table at the top level");
    return root;
  } catch (const YAML::ParserException& e) {
    throw ParseError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg, e.mark.line + 1);
  }
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& table) {
  if (!node.IsMap()) fail(node, "'" + table + "' must be a table");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + table);
  }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) fail(node, "field '" + field + "' must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, "field '" + field + "' has an invalid value '" + node.Scalar() + "'");
  }
}

KernelKind kernel_field(const YAML::Node& node, const std::string& field) {
  try {
    return kernel_from_string(scalar<std::string>(node, field));
  } catch (const InputError& e) {
    fail(node, "field '" + field + "': " + e.what());
  }
}

LocalAlternative rho0_field(const YAML::Node& node, const std::string& field) {
  try {
    return LocalAlternative::parse(scalar<std::string>(node, field));
  } catch (const InputError& e) {
    fail(node, "field '" + field + "': " + e.what());
  }
}

template <class T, class F>
std::vector<T> list_field(const YAML::Node& node, const std::string& field, F&& convert) {
  std::vector<T> out;
  if (node.IsSequence()) {
    for (const auto& item : node) out.push_back(convert(item, field));
  } else {
    out.push_back(convert(node, field));
  }
  if (out.empty()) fail(node, "field '" + field + "' must not be empty");
  return out;
}

void apply_dgp(const YAML::Node& node, DgpConfig& c) {
  check_keys(node, {"n", "q", "kernel", "kernel_x", "kernel_y", "beta2", "beta1", "rho0", "seed", "y_noise"}, "dgp");
  if (node["n"]) c.n = scalar<Index>(node["n"], "dgp.n");
  if (node["q"]) c.q = scalar<Index>(node["q"], "dgp.q");
  if (node["kernel"]) c.kernel_x = c.kernel_y = kernel_field(node["kernel"], "dgp.kernel");
  if (node["kernel_x"]) c.kernel_x = kernel_field(node["kernel_x"], "dgp.kernel_x");
  if (node["kernel_y"]) c.kernel_y = kernel_field(node["kernel_y"], "dgp.kernel_y");
  if (node["beta2"]) c.beta2 = scalar<double>(node["beta2"], "dgp.beta2");
  if (node["beta1"]) {
    const auto& b = node["beta1"];
    if (b.IsScalar() && b.Scalar() == "auto") {
      c.beta1.reset();
    } else {
      c.beta1 = scalar<double>(b, "dgp.beta1");
      if (!(*c.beta1 > 0.0)) fail(b, "field 'dgp.beta1' must be positive");
    }
  }
  if (node["rho0"]) c.rho0 = rho0_field(node["rho0"], "dgp.rho0");
  if (node["seed"]) c.seed = scalar<std::uint64_t>(node["seed"], "dgp.seed");
  if (node["y_noise"]) c.y_noise = scalar<bool>(node["y_noise"], "dgp.y_noise");
  if (c.n < 1) fail(node["n"], "field 'dgp.n' must be positive");
  if (c.q < 2) fail(node["q"], "field 'dgp.q' must be at least 2");
}

void apply_learner(const YAML::Node& node, LearnerConfig& c) {
  check_keys(node, {"residual", "intensity", "caps"}, "learner");
  if (const auto r = node["residual"]) {
    check_keys(r, {"kind", "ridge", "strata"}, "learner.residual");
    if (r["kind"]) {
      const auto kind = scalar<std::string>(r["kind"], "learner.residual.kind");
      if (kind == "additive") {
        c.residual_kind = ResidualKind::additive;
      } else if (kind == "quantile") {
        c.residual_kind = ResidualKind::time_independent_quantile;
      } else {
        fail(r["kind"], "field 'learner.residual.kind' must be additive or quantile");
      }
    }
    if (r["ridge"]) c.residual_ridge = scalar<double>(r["ridge"], "learner.residual.ridge");
    if (r["strata"]) c.quantile_strata = scalar<Index>(r["strata"], "learner.residual.strata");
  }
  if (const auto i = node["intensity"]) {
    check_keys(i, {"ridge", "time_bins", "max_iter", "tolerance", "current_z", "cumulative_z"}, "learner.intensity");
    auto& ic = c.intensity;
    if (i["ridge"]) ic.ridge = scalar<double>(i["ridge"], "learner.intensity.ridge");
    if (i["time_bins"]) ic.features.time_bins = scalar<Index>(i["time_bins"], "learner.intensity.time_bins");
    if (i["max_iter"]) ic.max_iter = scalar<int>(i["max_iter"], "learner.intensity.max_iter");
    if (i["tolerance"]) ic.tolerance = scalar<double>(i["tolerance"], "learner.intensity.tolerance");
    if (i["current_z"]) ic.features.current_z = scalar<bool>(i["current_z"], "learner.intensity.current_z");
    if (i["cumulative_z"]) ic.features.cumulative_z = scalar<bool>(i["cumulative_z"], "learner.intensity.cumulative_z");
  }
  if (const auto k = node["caps"]) {
    check_keys(k, {"lambda", "g"}, "learner.caps");
    if (k["lambda"]) c.caps.lambda = scalar<double>(k["lambda"], "learner.caps.lambda");
    if (k["g"]) c.caps.g = scalar<double>(k["g"], "learner.caps.g");
  }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

DgpConfig parse_dgp_config(const std::string& yaml_text) {
  const YAML::Node root = load(yaml_text);
  DgpConfig c;
  // Either a file with a `dgp` table (possibly among other tables) or a bare
  // DGP table.
  if (root["dgp"]) {
    apply_dgp(root["dgp"], c);
  } else {
    apply_dgp(root, c);
  }
  return c;
}

LearnerConfig parse_learner_config(const std::string& yaml_text) {
  const YAML::Node root = load(yaml_text);
  LearnerConfig c;
  if (root["learner"]) apply_learner(root["learner"], c);
  return c;
}

ExperimentSpec parse_experiment_spec(const std::string& yaml_text) {
  const YAML::Node root = load(yaml_text);
  check_keys(root, {"name", "dgp", "learner", "sweep", "reps", "tests", "alpha", "K", "seed", "cox_l2"}, "experiment");
  ExperimentSpec s;
  if (root["name"]) s.name = scalar<std::string>(root["name"], "name");
  if (root["dgp"]) apply_dgp(root["dgp"], s.dgp);
  if (root["learner"]) apply_learner(root["learner"], s.learner);
  if (root["reps"]) s.reps = scalar<Index>(root["reps"], "reps");
  if (s.reps < 1) fail(root["reps"], "field 'reps' must be at least 1");
  if (root["alpha"]) s.alpha = scalar<double>(root["alpha"], "alpha");
  if (!(s.alpha > 0.0 && s.alpha < 1.0)) fail(root["alpha"], "field 'alpha' must lie in (0, 1)");
  if (root["K"]) s.K = scalar<Index>(root["K"], "K");
  if (s.K < 2) fail(root["K"], "field 'K' must be at least 2");
  if (root["seed"]) s.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["cox_l2"]) s.cox_l2 = scalar<double>(root["cox_l2"], "cox_l2");
  if (root["tests"]) {
    s.tests = list_field<TestMethod>(root["tests"], "tests", [](const YAML::Node& n, const std::string& f) {
      try {
        return test_method_from_string(scalar<std::string>(n, f));
      } catch (const InputError& e) {
        fail(n, std::string("field 'tests': ") + e.what());
      }
    });
  }

  s.n = {s.dgp.n};
  s.kernels = {{s.dgp.kernel_x, s.dgp.kernel_y}};
  s.beta2 = {s.dgp.beta2};
  s.rho0 = {s.dgp.rho0};
  if (const auto sw = root["sweep"]) {
    check_keys(sw, {"n", "kernel", "kernel_x", "kernel_y", "beta2", "rho0"}, "sweep");
    if (sw["n"]) s.n = list_field<Index>(sw["n"], "sweep.n", scalar<Index>);
    if (sw["kernel"] && (sw["kernel_x"] || sw["kernel_y"])) {
      fail(sw["kernel"], "use either 'sweep.kernel' or 'sweep.kernel_x'/'sweep.kernel_y'");
    }
    if (sw["kernel"]) {
      s.kernels.clear();
      for (auto k : list_field<KernelKind>(sw["kernel"], "sweep.kernel", kernel_field)) s.kernels.emplace_back(k, k);
    } else if (sw["kernel_x"] || sw["kernel_y"]) {
      const auto kx = sw["kernel_x"] ? list_field<KernelKind>(sw["kernel_x"], "sweep.kernel_x", kernel_field)
                                     : std::vector<KernelKind>{s.dgp.kernel_x};
      const auto ky = sw["kernel_y"] ? list_field<KernelKind>(sw["kernel_y"], "sweep.kernel_y", kernel_field)
                                     : std::vector<KernelKind>{s.dgp.kernel_y};
      s.kernels.clear();
      for (auto a : kx)
        for (auto b : ky) s.kernels.emplace_back(a, b);
    }
    if (sw["beta2"]) s.beta2 = list_field<double>(sw["beta2"], "sweep.beta2", scalar<double>);
    if (sw["rho0"]) s.rho0 = list_field<LocalAlternative>(sw["rho0"], "sweep.rho0", rho0_field);
  }
  for (const Index n : s.n) {
    if (n < s.K) fail(root["sweep"] ? root["sweep"] : root, "every n must be at least K");
  }
  return s;
}

}  // namespace clit
