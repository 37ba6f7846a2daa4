#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "ergoline/certify.hpp"
#include "ergoline/numerics.hpp"

using namespace ergoline;

namespace {

DiffusionModel make_diffusion(const char* g, const char* s) {
  DiffusionModel m;
  m.drift = Expr::parse(g);
  m.sigma = Expr::parse(s);
  return m;
}

// the reflected jump-diffusion worked example: drift -3(x+1)^{-1/2},
// intensity 2, rightward exponential displacement with rate (x+1)^{1/2}
JumpDiffusionModel example_jump_model() {
  JumpDiffusionModel m;
  m.base = make_diffusion("-3*(x+1)^-0.5", "0");
  m.intensity = 2.0;
  m.kernel = JumpKernel::exp_displacement(Expr::parse("(x+1)^0.5"));
  return m;
}

LevyModel example_levy_model() {
  LevyModel m;
  m.drift = -2.0;
  m.sigma = 1.0;
  m.measure = LevyMeasure::compound(1.0, DisplacementLaw::exponential(1.0));
  return m;
}

double simpson_oracle(const std::function<double(double)>& f, double a,
                      double b, int n = 40000) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) {
    acc += f(a + i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("Lyapunov families: values and derivatives") {
  const auto affine = LyapunovSpec::affine(2.0);
  CHECK(affine.value(3.0) == doctest::Approx(7.0));
  CHECK(affine.d1(3.0) == doctest::Approx(2.0));
  CHECK(affine.d2(3.0) == doctest::Approx(0.0));

  const auto pa = LyapunovSpec::power_affine(1.0, 2.0);
  CHECK(pa.value(2.0) == doctest::Approx(9.0));
  CHECK(pa.d1(2.0) == doctest::Approx(6.0));
  CHECK(pa.d2(2.0) == doctest::Approx(2.0));

  const auto ex = LyapunovSpec::exponential(0.5);
  CHECK(ex.value(2.0) == doctest::Approx(std::exp(1.0)));
  CHECK(ex.d1(2.0) == doctest::Approx(0.5 * std::exp(1.0)));

  const auto fp = LyapunovSpec::frac_power(0.5);
  CHECK(fp.value(4.0) == doctest::Approx(3.0));
  CHECK(fp.d1(4.0) == doctest::Approx(0.25));

  for (const auto& v : {affine, pa, ex, fp}) {
    CHECK(v.value(0.0) >= 1.0);
    CHECK(v.value(5.0) >= v.value(1.0));
  }
  CHECK_THROWS_AS(LyapunovSpec::power_affine(1.0, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(LyapunovSpec::frac_power(1.5), std::invalid_argument);
}

TEST_CASE("generator_apply: constant-coefficient diffusion") {
  const ProcessModel m = make_diffusion("-2", "1");
  const auto V = LyapunovSpec::affine(1.0);
  CHECK(generator_apply(m, V, 5.0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK_THROWS_AS(generator_apply(m, V, 0.0), std::invalid_argument);
}

TEST_CASE("generator matches hand closed forms for polynomial V") {
  const ProcessModel m = make_diffusion("-1.5", "2");
  const auto V = LyapunovSpec::power_affine(0.7, 2.0);
  for (double x : num::geometric_grid(1e-2, 1e2, 25)) {
    const double expect =
        -1.5 * (2.0 * 0.7 * (1.0 + 0.7 * x)) + 0.5 * 4.0 * (2.0 * 0.49);
    const double got = generator_apply(m, V, x);
    CHECK(std::abs(got - expect) / std::max(1.0, std::abs(expect)) < 1e-9);
  }
  const ProcessModel m2 = make_diffusion("-1", "1");
  const auto Vf = LyapunovSpec::frac_power(0.5);
  for (double x : num::geometric_grid(1e-1, 1e2, 17)) {
    const double expect = -0.5 * std::pow(x, -0.5) +
                          0.5 * (-0.25) * std::pow(x, -1.5);
    CHECK(generator_apply(m2, Vf, x) ==
          doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("jump example: average drift and affine generator") {
  const JumpDiffusionModel jm = example_jump_model();
  // m(x) = -(x+1)^{-1/2}
  for (double x : {0.0, 1.0, 3.0, 10.0}) {
    CHECK(mean_drift(jm, x) ==
          doctest::Approx(-std::pow(x + 1.0, -0.5)).epsilon(1e-12));
  }
  CHECK(mean_drift(jm, 0.0) == doctest::Approx(-1.0));
  // affine V picks up exactly c m(x)
  const ProcessModel pm = jm;
  CHECK(generator_apply(pm, LyapunovSpec::affine(1.0), 3.0) ==
        doctest::Approx(-0.5).epsilon(1e-10));
}

TEST_CASE("mean_drift: degenerate and translation kernels") {
  JumpDiffusionModel none;
  none.base = make_diffusion("-2", "1");
  none.intensity = 0.0;
  none.kernel = JumpKernel::translation(DisplacementLaw::point_mass(1.0));
  CHECK(mean_drift(none, 4.0) == doctest::Approx(-2.0));

  JumpDiffusionModel pm;
  pm.base = make_diffusion("-3", "0");
  pm.intensity = 2.0;
  pm.kernel = JumpKernel::translation(DisplacementLaw::point_mass(1.0));
  CHECK(mean_drift(pm, 0.5) == doctest::Approx(-1.0));
}

TEST_CASE("jump integral quadrature agrees with the Simpson oracle") {
  const JumpDiffusionModel jm = example_jump_model();
  const auto V = LyapunovSpec::power_affine(1.0, 2.0);
  const double x = 3.0;
  // oracle: 2 * int_0^inf [V(x+z) - V(x)] rate e^{-rate z} dz, rate = 2
  const double rate = 2.0;
  const double oracle = 2.0 * simpson_oracle(
      [&](double z) {
        return (V.value(x + z) - V.value(x)) * rate * std::exp(-rate * z);
      },
      0.0, 60.0);
  const ProcessModel pm = jm;
  const double drift_part = jm.base.drift.eval(x) * V.d1(x);
  const double got = generator_apply(pm, V, x) - drift_part;
  CHECK(got == doctest::Approx(oracle).epsilon(1e-7));
}

TEST_CASE("Levy generator: exp V closed form and quadrature agree") {
  const LevyModel lm = example_levy_model();
  const auto V = LyapunovSpec::exponential(0.2);
  // k(0.2) = -0.4 + 0.02 + 0.25 = -0.13, so LV(1) = -0.13 e^{0.2}
  const double expect = -0.13 * std::exp(0.2);
  CHECK(generator_apply(lm, V, 1.0) ==
        doctest::Approx(expect).epsilon(1e-10));

  // same measure through the quadrature route (density e^{-z})
  LevyModel dens = lm;
  dens.measure =
      LevyMeasure::infinite_activity(Expr::parse("exp(0-x)"), 1.0);
  CHECK(generator_apply(dens, V, 1.0) ==
        doctest::Approx(expect).epsilon(1e-6));

  // divergent case: exp V with lambda above the jump tail rate
  const auto Vbad = LyapunovSpec::exponential(1.5);
  CHECK_THROWS_AS(generator_apply(lm, Vbad, 1.0), CertifyError);
}

TEST_CASE("levy_k closed forms and the slope identity") {
  const LevyModel lm = example_levy_model();
  CHECK(levy_k(lm, 0.5) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(levy_k(lm, 0.2) == doctest::Approx(-0.13).epsilon(1e-12));
  CHECK_THROWS_AS(levy_k(lm, 1.0), CertifyError);

  // k'(0) = g + m1 by central difference
  const double h = 1e-4;
  const double slope = (levy_k(lm, h) - levy_k(lm, -h)) / (2.0 * h);
  const double m1 = lm.measure.m1();
  CHECK(m1 == doctest::Approx(1.0));
  CHECK(std::abs(slope - (lm.drift + m1)) < 1e-6);

  // quadrature route matches closed form
  LevyModel dens = lm;
  dens.measure =
      LevyMeasure::infinite_activity(Expr::parse("exp(0-x)"), 1.0);
  CHECK(levy_k(dens, 0.2) == doctest::Approx(-0.13).epsilon(1e-7));
}

TEST_CASE("levy_find_lambda") {
  const LevyModel lm = example_levy_model();
  const auto found = levy_find_lambda(lm);
  CHECK(found.lambda_star > 0.0);
  CHECK(found.lambda_star < 1.0);
  CHECK(found.k_value < 0.0);
  // independent coarse scan of the closed form
  double best = 0.0;
  for (double lam = 0.01; lam < 0.99; lam += 0.001) {
    best = std::min(best, -2.0 * lam + 0.5 * lam * lam + lam / (1.0 - lam));
  }
  CHECK(found.k_value == doctest::Approx(best).epsilon(1e-3));

  // precondition: g >= -m1
  LevyModel weak = lm;
  weak.drift = -0.5;
  CHECK_THROWS_AS(levy_find_lambda(weak), CertifyError);

  // degenerate linear case: k(lambda) = -lambda, minimized at the grid top
  LevyModel nojumps;
  nojumps.drift = -1.0;
  nojumps.sigma = 0.0;
  nojumps.measure = LevyMeasure::compound(0.0, DisplacementLaw::exponential(1.0));
  const auto deg = levy_find_lambda(nojumps);
  CHECK(deg.lambda_star == doctest::Approx(deg.grid.back()));
  CHECK(deg.k_value == doctest::Approx(-deg.lambda_star));
}

TEST_CASE("drift_check: margins and pass/fail") {
  const ProcessModel m = make_diffusion("-2", "1");
  const auto V = LyapunovSpec::affine(1.0);
  const auto grid = default_certification_grid();

  const auto pass = drift_check(m, V, PhiSpec::constant(2.0), grid);
  CHECK(pass.pass);
  CHECK(std::abs(pass.worst_margin_abs) < 1e-12);

  const auto fail = drift_check(m, V, PhiSpec::constant(3.0), grid);
  CHECK(!fail.pass);
  CHECK(fail.worst_margin_abs == doctest::Approx(1.0));
}

TEST_CASE("fit_phi: constant family recovers the drift floor") {
  const ProcessModel m = make_diffusion("-2", "1");
  const auto phi =
      fit_phi(m, LyapunovSpec::affine(1.0), PhiFamily::Constant,
              default_certification_grid());
  CHECK(phi.family() == PhiFamily::Constant);
  CHECK(phi.coeff() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("fit_phi: grid sensitivity of the linear fit (documented)") {
  // LV = (-0.5 x + 0.125) e^{x/2}: the linear fit fails near 0 but gives
  // k = min(0.5 x - 0.125) = 0.375 on grids inside [1, inf)
  const ProcessModel m = make_diffusion("-x", "1");
  const auto V = LyapunovSpec::exponential(0.5);
  const auto grid_hi = num::geometric_grid(1.0, 100.0, 64);
  const auto phi = fit_phi(m, V, PhiFamily::Linear, grid_hi);
  CHECK(phi.coeff() == doctest::Approx(0.375).epsilon(1e-9));
  const auto cert = drift_check(m, V, phi, grid_hi);
  CHECK(cert.pass);

  const auto grid_lo = num::geometric_grid(0.01, 100.0, 64);
  CHECK_THROWS_AS(fit_phi(m, V, PhiFamily::Linear, grid_lo), CertifyError);
}

TEST_CASE("fit_phi: the printed power rate for affine V is inadmissible") {
  // Affine V against the jump example gives LV = -(1+x)^{-1/2}; a power
  // rate with gamma = 1/2 only fits with a coefficient collapsing like
  // 1/(1+x_max) — nowhere near the printed a c = 1
  const ProcessModel pm = example_jump_model();
  const auto V = LyapunovSpec::affine(1.0);
  const auto grid = default_certification_grid();
  const auto phi = fit_phi(pm, V, PhiFamily::Power, grid, 0.5);
  CHECK(phi.coeff() > 0.0);
  CHECK(phi.coeff() < 0.01);
  CHECK(phi.coeff() == doctest::Approx(1.0 / 1001.0).epsilon(1e-6));
  CHECK(drift_check(pm, V, phi, grid).pass);
}

TEST_CASE("fit_phi then drift_check is self-consistent") {
  const ProcessModel m = make_diffusion("-3*(1+x)^-0.5", "1");
  const auto V = LyapunovSpec::power_affine(1.0, 2.0);
  const auto grid = default_certification_grid();
  for (auto family : {PhiFamily::Constant, PhiFamily::Power}) {
    const auto phi = fit_phi(m, V, family, grid, 0.25);
    CHECK(drift_check(m, V, phi, grid).pass);
  }
}

TEST_CASE("power_affine_feasible") {
  const auto a1 = power_affine_feasible(1.0, 1.0, 1.0, 2.0);
  CHECK(a1.feasible);
  CHECK(a1.lo == doctest::Approx(1.0));
  CHECK(a1.hi == doctest::Approx(2.0));
  CHECK(a1.A_mid == doctest::Approx(1.0 * 2.0 * 1.5 - 0.5 * 2.0 * 2.25));

  const auto a2 = power_affine_feasible(1.0, 1.0, 2.0, 2.0);
  CHECK(!a2.feasible);  // 2/(4*1) = 0.5 < c = 1

  const auto a3 = power_affine_feasible(1.0, 1.0, 1.0, 1.0001);
  CHECK(a3.feasible);

  CHECK_THROWS_AS(power_affine_feasible(1.0, 1.0, 1.0, 1.0),
                  std::invalid_argument);

  // monotonicity: enlarging a or shrinking sigma never shrinks the interval
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> pos(0.2, 4.0);
  std::uniform_real_distribution<double> betas(1.01, 5.0);
  for (int i = 0; i < 300; ++i) {
    const double a = pos(gen), c = pos(gen), s = pos(gen), b = betas(gen);
    const auto base = power_affine_feasible(a, c, s, b);
    const auto bigger_a = power_affine_feasible(a * 1.7, c, s, b);
    const auto smaller_s = power_affine_feasible(a, c, s * 0.6, b);
    if (base.feasible) {
      CHECK(bigger_a.feasible);
      CHECK(smaller_s.feasible);
      CHECK(bigger_a.hi >= base.hi);
      CHECK(smaller_s.hi >= base.hi);
    }
  }
}

TEST_CASE("truncate: psi and V-hat behaviour") {
  const auto V = LyapunovSpec::power_affine(1.0, 2.0);
  const auto trunc = truncate(V, 1.0, 3.0);

  CHECK(trunc.value(0.5) == doctest::Approx(V.value(0.0)));
  CHECK(trunc.value(1.0) == doctest::Approx(1.0));  // V(psi) = V(0) = 1
  CHECK(trunc.value(3.0) == doctest::Approx(V.value(3.0)));
  CHECK(trunc.value(10.0) == doctest::Approx(V.value(10.0)));

  const auto grid = num::linear_grid(0.0, 10.0, 1000);
  double prev = trunc.psi(grid[0]);
  for (double x : grid) {
    const double p = trunc.psi(x);
    CHECK(p >= prev - 1e-14);  // nondecreasing
    CHECK(p <= x + 1e-14);     // psi(x) <= x
    prev = p;
  }

  // C^1 joins: numeric slopes approach 0 at x1 and 1 at x2
  const double h = 1e-6;
  CHECK(std::abs((trunc.psi(1.0 + h) - trunc.psi(1.0 - h)) / (2 * h)) < 1e-4);
  CHECK((trunc.psi(3.0 + h) - trunc.psi(3.0 - h)) / (2 * h) ==
        doctest::Approx(1.0).epsilon(1e-4));

  // comparability: V-hat <= V <= C V-hat on the grid
  const double C = trunc.comparability_constant(grid);
  CHECK(C >= 1.0);
  for (double x : grid) {
    CHECK(trunc.value(x) <= V.value(x) + 1e-12);
    CHECK(V.value(x) <= C * trunc.value(x) * (1.0 + 1e-12));
  }

  CHECK_THROWS_AS(truncate(V, 3.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(truncate(V, 0.0, 1.0), std::invalid_argument);
}
