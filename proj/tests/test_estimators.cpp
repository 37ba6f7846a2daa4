#include <doctest.h>

#include <cmath>
#include <random>

#include "ergoline/estimators.hpp"
#include "ergoline/rng.hpp"

using namespace ergoline;

namespace {

DiffusionModel make_diffusion(const char* g, const char* s) {
  DiffusionModel m;
  m.drift = Expr::parse(g);
  m.sigma = Expr::parse(s);
  return m;
}

SimConfig cfg(double dt, double horizon, std::size_t paths,
              std::uint64_t seed, unsigned threads = 2) {
  SimConfig c;
  c.dt = dt;
  c.horizon = horizon;
  c.n_paths = paths;
  c.master_seed = seed;
  c.threads = threads;
  return c;
}

}  // namespace

TEST_CASE("empirical U distance: indicator reduction and zero cases") {
  const ProcessModel m = make_diffusion("-1", "1");
  const auto sample =
      coupled_paths(m, 0.0, 2.0, cfg(0.01, 2.0, 4000, 13), {0.0, 1.0, 2.0});

  // U == 1 collapses to twice the survival estimate, exactly
  for (double t : {0.0, 1.0, 2.0}) {
    const auto est =
        empirical_U_distance(sample, [](double) { return 1.0; }, t);
    const auto surv = survival(sample, t);
    CHECK(est.estimate == doctest::Approx(2.0 * surv.estimate).epsilon(1e-15));
  }

  // identical starts: exactly zero at every checkpoint
  const auto fused =
      coupled_paths(m, 2.0, 2.0, cfg(0.01, 1.0, 200, 13), {0.0, 1.0});
  for (double t : {0.0, 1.0}) {
    const auto est = empirical_U_distance(
        fused, [](double x) { return std::exp(x); }, t);
    CHECK(est.estimate == 0.0);
    CHECK(est.ci_hi == 0.0);
  }

  CHECK_THROWS_AS(
      empirical_U_distance(sample, [](double) { return 1.0; }, 0.7),
      std::invalid_argument);
}

TEST_CASE("theoretical_bound closed forms") {
  // exponential case: 2 V(2) e^{-0.5 t} at t = 2 -> 2 e^2 e^{-1} = 2e
  const auto dexp = decompose(RateKernel(PhiSpec::linear(0.5)),
                              LyapunovSpec::exponential(1.0), YoungPair(2.0),
                              10.0, 10.0);
  CHECK(theoretical_bound(dexp, LyapunovSpec::exponential(1.0), 2.0, 2.0) ==
        doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-12));

  // TV choice with the power kernel: Psi(4) = (0.5*4 + 1)^2 = 9,
  // V = 1 + x at x2 = 2 -> bound 2*3/9
  const auto dtv = tv_decomposition(RateKernel(PhiSpec::power(1.0, 0.5)),
                                    LyapunovSpec::affine(1.0));
  CHECK(theoretical_bound(dtv, LyapunovSpec::affine(1.0), 2.0, 4.0) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // h(0) = 0 for the Young splits: +inf sentinel
  const auto dpow = decompose(RateKernel(PhiSpec::power(1.0, 0.5)),
                              LyapunovSpec::affine(1.0), YoungPair(2.0));
  CHECK(std::isinf(
      theoretical_bound(dpow, LyapunovSpec::affine(1.0), 2.0, 0.0)));
}

TEST_CASE("theoretical_bound monotonicity") {
  const auto V = LyapunovSpec::affine(1.0);
  std::vector<ProductDecomposition> ds;
  ds.push_back(decompose(RateKernel(PhiSpec::linear(0.5)),
                         LyapunovSpec::exponential(0.5), YoungPair(2.0), 10.0,
                         10.0));
  ds.push_back(decompose(RateKernel(PhiSpec::power(1.0, 0.5)), V,
                         YoungPair(2.0)));
  ds.push_back(decompose(RateKernel(PhiSpec::constant(2.0)), V,
                         YoungPair(2.0)));
  ds.push_back(tv_decomposition(RateKernel(PhiSpec::power(1.0, 0.25)), V));
  for (const auto& d : ds) {
    const auto& lv = d.lyapunov();
    double prev = std::numeric_limits<double>::infinity();
    for (double t : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      const double b = theoretical_bound(d, lv, 2.0, t);
      CHECK(b <= prev * (1.0 + 1e-12));
      prev = b;
    }
    double prev_x = 0.0;
    for (double x2 : {0.0, 1.0, 2.0, 5.0}) {
      const double b = theoretical_bound(d, lv, x2, 1.0);
      CHECK(b >= prev_x * (1.0 - 1e-12));
      prev_x = b;
    }
  }
}

TEST_CASE("verify_bound: exponential fixture passes, doubled rate fails") {
  const ProcessModel m = make_diffusion("-1", "1");
  const auto V = LyapunovSpec::exponential(1.0);
  const auto grid = default_certification_grid();

  const auto cert = drift_check(m, V, PhiSpec::linear(0.5), grid);
  REQUIRE(cert.pass);
  const auto decomp =
      decompose(RateKernel(PhiSpec::linear(0.5)), V, YoungPair(2.0), 8.0,
                20.0);
  const std::vector<double> ts{1.0, 2.0};
  const auto report =
      verify_bound(m, cert, decomp, 0.0, 2.0, cfg(1e-3, 2.0, 20000, 31), ts);
  CHECK(report.status == VerifyStatus::Pass);
  CHECK(!report.tainted);
  for (const auto& p : report.points) {
    CHECK(p.bound ==
          doctest::Approx(2.0 * std::exp(2.0 - 0.5 * p.t)).epsilon(1e-12));
    CHECK(p.ci_lo <= p.bound);
  }

  // falsification: pretend the rate were e^{-t} (k doubled)
  const auto wrong_cert = drift_check(m, V, PhiSpec::linear(0.5), grid);
  const auto wrong_decomp =
      decompose(RateKernel(PhiSpec::linear(1.0)), V, YoungPair(2.0), 2.0,
                4.0);
  const auto bad = verify_bound(m, wrong_cert, wrong_decomp, 0.0, 2.0,
                                cfg(1e-3, 2.0, 20000, 31), ts);
  CHECK(bad.status == VerifyStatus::Fail);
}

TEST_CASE("verify_bound refuses a failing certificate") {
  const ProcessModel m = make_diffusion("-2", "1");
  const auto V = LyapunovSpec::affine(1.0);
  const auto cert =
      drift_check(m, V, PhiSpec::constant(3.0), default_certification_grid());
  REQUIRE(!cert.pass);
  const auto decomp =
      decompose(RateKernel(PhiSpec::constant(3.0)), V, YoungPair(2.0));
  CHECK_THROWS_AS(verify_bound(m, cert, decomp, 0.0, 2.0,
                               cfg(0.01, 1.0, 100, 1), std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("verify_bound: tainted run is inconclusive, never a pass") {
  DiffusionModel dm;
  dm.drift = Expr::parse("-0.1");
  dm.sigma = Expr::parse("1/(1+x)");
  const ProcessModel m = dm;
  const auto V = LyapunovSpec::affine(1.0);
  // sigma never enters LV for affine V: constant rate 0.1 certifies
  const auto cert =
      drift_check(m, V, PhiSpec::constant(0.1), default_certification_grid());
  REQUIRE(cert.pass);
  const auto decomp =
      decompose(RateKernel(PhiSpec::constant(0.1)), V, YoungPair(2.0));
  const auto report =
      verify_bound(m, cert, decomp, 0.0, 0.01, cfg(0.4, 10.0, 200, 5),
                   std::vector<double>{10.0});
  CHECK(report.tainted);
  CHECK(report.status == VerifyStatus::Inconclusive);
}

TEST_CASE("verify_bound with initial laws reproduces its numerator") {
  const ProcessModel m = make_diffusion("-1", "1");
  const auto V = LyapunovSpec::affine(1.0);
  const auto cert =
      drift_check(m, V, PhiSpec::constant(1.0), default_certification_grid());
  REQUIRE(cert.pass);
  const auto decomp =
      decompose(RateKernel(PhiSpec::constant(1.0)), V, YoungPair(2.0));
  const auto law1 = InitialLaw::exponential_mean(0.5);
  const auto law2 = InitialLaw::exponential_mean(1.0);
  const SimConfig c = cfg(0.01, 1.0, 5000, 77);
  // the numerator the pipeline would use: 2 (rho1 v rho2, V) from the
  // same comonotone draws
  std::vector<double> i1(c.n_paths), i2(c.n_paths);
  for (std::size_t p = 0; p < c.n_paths; ++p) {
    PathRng rng(c.master_seed, p);
    const double u = rng.uniform();
    i1[p] = law1.icdf(u);
    i2[p] = law2.icdf(u);
  }
  const double numerator = 2.0 * stochastic_max_expectation(i1, i2, V);
  const auto report = verify_bound(m, cert, decomp, law1, law2, c,
                                   std::vector<double>{1.0}, numerator);
  CHECK(report.points.size() == 1);
  CHECK(!report.tainted);
  const double h1 = decomp.h(1.0);
  CHECK(report.points[0].bound == doctest::Approx(numerator / h1));
}

TEST_CASE("stationary_estimate: deterministic point mass at zero") {
  const ProcessModel m = make_diffusion("-1", "0");
  const auto V = LyapunovSpec::affine(1.0);
  const auto est = stationary_estimate(m, cfg(0.01, 50.0, 2, 3), V);
  CHECK(est.mean_x == doctest::Approx(0.0));
  CHECK(est.pi_v == doctest::Approx(1.0));
  CHECK(!est.v_moment_diverging);
}

TEST_CASE("stationary_estimate: reflected BM matches the exponential law") {
  // drift -0.5, sigma 1: stationary Exp(1); (pi, 1 + x) = 2
  const ProcessModel m = make_diffusion("-0.5", "1");
  const auto V = LyapunovSpec::affine(1.0);
  const auto est = stationary_estimate(m, cfg(0.01, 2000.0, 16, 2025), V);
  CHECK(std::abs(est.mean_x - 1.0) < 0.1);
  CHECK(std::abs(est.pi_v - 2.0) < 0.15);
  CHECK(est.thin_stride >= 1);
  CHECK(est.ess > 100.0);
  CHECK(!est.v_moment_diverging);
}

TEST_CASE("stochastic_max_expectation") {
  const auto V = LyapunovSpec::affine(1.0);

  // equal samples: plug-in mean of V
  std::vector<double> s{0.5, 1.0, 2.5, 2.5, 4.0};
  double plug = 0.0;
  for (double x : s) plug += V.value(x);
  plug /= static_cast<double>(s.size());
  CHECK(stochastic_max_expectation(s, s, V) ==
        doctest::Approx(plug).epsilon(1e-12));

  // point masses at 1 and 3: the max law is the larger point
  CHECK(stochastic_max_expectation(std::vector<double>{1.0},
                                   std::vector<double>{3.0},
                                   V) == doctest::Approx(4.0));

  // dominated pair: collapses to the dominating sample
  std::vector<double> lo{0.1, 0.7, 1.3, 2.0};
  std::vector<double> hi{0.6, 1.2, 1.9, 2.8};
  double plug_hi = 0.0;
  for (double x : hi) plug_hi += V.value(x);
  plug_hi /= static_cast<double>(hi.size());
  CHECK(stochastic_max_expectation(lo, hi, V) ==
        doctest::Approx(plug_hi).epsilon(1e-12));

  // always dominates both plug-ins
  std::mt19937_64 gen(5);
  std::exponential_distribution<double> e1(1.0), e2(0.7);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a(40), b(60);
    for (auto& v : a) v = e1(gen);
    for (auto& v : b) v = e2(gen);
    double pa = 0.0, pb = 0.0;
    for (double v : a) pa += V.value(v);
    for (double v : b) pb += V.value(v);
    pa /= a.size();
    pb /= b.size();
    const double mx = stochastic_max_expectation(a, b, V);
    CHECK(mx >= std::max(pa, pb) - 1e-12);
  }

  CHECK_THROWS_AS(
      stochastic_max_expectation(std::vector<double>{}, s, V),
      std::invalid_argument);
}

TEST_CASE("verify results are identical across thread counts") {
  const ProcessModel m = make_diffusion("-1", "1");
  const auto V = LyapunovSpec::exponential(1.0);
  const auto cert =
      drift_check(m, V, PhiSpec::linear(0.5), default_certification_grid());
  const auto decomp = decompose(RateKernel(PhiSpec::linear(0.5)), V,
                                YoungPair(2.0), 4.0, 10.0);
  const std::vector<double> ts{0.5, 1.0};
  BoundReport base;
  bool first = true;
  for (unsigned threads : {1u, 3u, 8u}) {
    const auto r = verify_bound(m, cert, decomp, 0.0, 2.0,
                                cfg(0.01, 1.0, 2000, 99, threads), ts);
    if (first) {
      base = r;
      first = false;
    } else {
      REQUIRE(r.points.size() == base.points.size());
      for (std::size_t i = 0; i < r.points.size(); ++i) {
        CHECK(r.points[i].empirical == base.points[i].empirical);
        CHECK(r.points[i].ci_lo == base.points[i].ci_lo);
        CHECK(r.points[i].ci_hi == base.points[i].ci_hi);
      }
    }
  }
}
