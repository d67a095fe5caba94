#include "clit/errors.hpp"
#include "clit/sim.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>

using namespace clit;

TEST_CASE("kernel formulas") {
  CHECK(kernel_eval(KernelKind::zero, 0.1, 0.9) == 0.0);
  CHECK(kernel_eval(KernelKind::constant, 0.3, 0.7) == 1.0);
  CHECK(kernel_eval(KernelKind::gaussian, 0.4, 0.4) == 1.0);
  CHECK(kernel_eval(KernelKind::gaussian, 0.0, 1.0) == doctest::Approx(0.1353352832366127));
  CHECK(kernel_eval(KernelKind::sine, 0.0, 0.0) == 0.0);
  CHECK(kernel_eval(KernelKind::sine, 0.25, 0.5) == doctest::Approx(-0.1411200080598672));
  CHECK_THROWS_AS(kernel_eval(KernelKind::constant, 0.6, 0.5), DomainError);
  CHECK(kernel_from_string("gaussian") == KernelKind::gaussian);
  CHECK_THROWS_WITH_AS(kernel_from_string("gauss"), doctest::Contains("gauss"), InputError);
}

TEST_CASE("local alternatives") {
  CHECK(LocalAlternative::parse("none").is_null());
  CHECK(LocalAlternative::parse("0").is_null());
  const auto c = LocalAlternative::parse("10");
  CHECK(c.at(0.3) == 10.0);
  CHECK(c.label() == "10");
  const auto s = LocalAlternative::parse("step");
  CHECK(s.at(0.4) == 5.0);
  CHECK(s.at(0.41) == -5.0);
  const auto k = LocalAlternative::parse("cos");
  CHECK(k.at(0.25) == doctest::Approx(-7.0));
  CHECK_THROWS_AS(LocalAlternative::parse("wave"), InputError);
}

namespace {

DgpConfig small(KernelKind k, std::uint64_t seed) {
  DgpConfig c;
  c.n = 200;
  c.q = 32;
  c.kernel_x = c.kernel_y = k;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("sampling is deterministic and per-subject streams are prefix-stable") {
  const auto a = sample_dataset(small(KernelKind::gaussian, 5));
  const auto b = sample_dataset(small(KernelKind::gaussian, 5));
  CHECK(a.data.x.values == b.data.x.values);
  CHECK(a.data.z.values == b.data.z.values);
  auto bigger = small(KernelKind::gaussian, 5);
  bigger.n = 300;
  bigger.beta1 = a.config.beta1;
  const auto c = sample_dataset(bigger);
  // The local alternative is null, so the first subjects are unchanged.
  CHECK(c.data.z.values.topRows(200) == a.data.z.values);
  CHECK(c.data.record.event_index(17) == a.data.record.event_index(17));
}

TEST_CASE("paths are stopped at the event") {
  const auto s = sample_dataset(small(KernelKind::constant, 9));
  const Index q = s.config.q;
  Index checked = 0;
  for (Index j = 0; j < s.data.subjects(); ++j) {
    const Index e = s.data.record.event_index(j);
    if (e < 0) continue;
    for (Index l = e + 1; l < q; ++l) {
      REQUIRE(s.data.x.values(j, l) == s.data.x.values(j, e));
      REQUIRE(s.data.z.values(j, l) == s.data.z.values(j, e));
      REQUIRE(s.full_intensity(j, l) == 0.0);
    }
    ++checked;
  }
  CHECK(checked > 150);
}

TEST_CASE("beta1 calibration meets the event-fraction target") {
  for (auto k : {KernelKind::zero, KernelKind::constant, KernelKind::sine}) {
    auto cfg = small(k, 1);
    cfg.n = 4000;
    cfg.q = 64;
    const auto s = sample_dataset(cfg);
    CHECK(*s.config.beta1 > 0.0);
    const double frac = static_cast<double>(s.data.record.total_events()) / 4000.0;
    CHECK(frac > 63.0 / 64.0 - 0.01);
  }
}

TEST_CASE("the cumulative full intensity at the event is standard exponential") {
  // Zero kernels, beta2 = 0: lambda = beta1 t^2 exp(W) with W the Y noise.
  DgpConfig cfg;
  cfg.n = 3000;
  cfg.q = 128;
  cfg.kernel_x = cfg.kernel_y = KernelKind::zero;
  cfg.beta2 = 0.0;
  cfg.y_noise = false;
  cfg.seed = 77;
  const auto s = sample_dataset(cfg);
  // The exponential threshold of each uncensored subject lies between the
  // cumulative intensity before and at its event step.
  const double dt = 1.0 / 127.0;
  Index checked = 0;
  for (Index j = 0; j < cfg.n; ++j) {
    const Index e = s.data.record.event_index(j);
    if (e < 0) continue;
    const double before = s.cumulative_at_exit[static_cast<std::size_t>(j)] - s.full_intensity(j, e) * dt;
    REQUIRE(before < s.exp_draws[static_cast<std::size_t>(j)]);
    REQUIRE(s.cumulative_at_exit[static_cast<std::size_t>(j)] >= s.exp_draws[static_cast<std::size_t>(j)]);
    ++checked;
  }
  CHECK(checked > 2900);
  // KS test of the thresholds against Exp(1) at the 1% level.
  std::vector<double> u;
  for (double e : s.exp_draws) u.push_back(1.0 - std::exp(-e));
  std::sort(u.begin(), u.end());
  double d = 0.0;
  const double n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u[i], u[i] - static_cast<double>(i) / n});
  CHECK(d < 1.628 / std::sqrt(n));
}

TEST_CASE("the true projection is the deterministic part of X") {
  const auto s = sample_dataset(small(KernelKind::zero, 2));
  CHECK(s.true_projection.cwiseAbs().maxCoeff() == 0.0);
  const auto c = sample_dataset(small(KernelKind::constant, 2));
  const double dt = 1.0 / 31.0;
  const Index j = 4;
  const Index e = c.data.record.event_index(j);
  const Index l = e < 0 ? 20 : std::min<Index>(e, 20);
  double ref = 0.0;
  for (Index i = 0; i < l; ++i) ref += c.data.z.values(j, i) * dt;
  CHECK(c.true_projection(j, l) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("Monte Carlo LCM under the null is centred") {
  DgpConfig cfg;
  cfg.n = 200;
  cfg.q = 32;
  cfg.seed = 3;
  const auto g = mc_true_gamma(cfg, 60);
  for (std::size_t l = 0; l < g.mean.size(); ++l) {
    CHECK(std::abs(g.mean[l]) <= 3.0 * g.std_error[l] + 1e-12);
  }
}

TEST_CASE("Monte Carlo LCM under a constant alternative grows towards t = 1") {
  DgpConfig cfg;
  cfg.n = 200;
  cfg.q = 32;
  cfg.seed = 4;
  cfg.rho0 = LocalAlternative::parse("10");
  const auto g = mc_true_gamma(cfg, 60);
  CHECK(std::abs(g.mean.back()) > 3.0 * g.std_error.back());
  CHECK(std::abs(g.mean.back()) > std::abs(g.mean[g.mean.size() / 4]));
}
