#include <doctest.h>

#include "cheese/quadrature.hpp"

using namespace cheese;

namespace {

BoundaryChain unit_circle_chain() {
  CheeseSpec spec = generate_cheese(1, 0.5, 0, 0.01);
  return boundary_chain(spec, 0);
}

}  // namespace

TEST_CASE("closed-form contour integrals over the unit circle") {
  BoundaryChain chain = unit_circle_chain();
  auto one = integrate_form(chain, Integrand::one(), 1e-12);
  CHECK(std::abs(one.value) < 1e-12);

  auto zbar = integrate_form(chain, Integrand::zbar(), 1e-12);
  CHECK(std::abs(zbar.value - Complex(0.0, kTwoPi)) < 1e-11);

  Polynomial num = Polynomial::constant(1.0, 1);
  Polynomial den = Polynomial::variable(0, 1);
  auto inv = integrate_form(chain, Integrand::rational(RationalFunction(num, den)), 1e-12);
  CHECK(std::abs(inv.value - Complex(0.0, kTwoPi)) < 1e-11);

  CHECK(total_variation(chain) == doctest::Approx(kTwoPi));
}

TEST_CASE("quadrature moment matches the closed form on seeded cheeses") {
  for (std::uint64_t seed : {21ULL, 22ULL}) {
    CheeseSpec spec = generate_cheese(seed, 0.5, 15, 0.01);
    for (int k : {0, 7, 15}) {
      BoundaryChain chain = boundary_chain(spec, k);
      auto q = integrate_form(chain, Integrand::zbar(), 1e-11);
      Complex exact = moment_zbar_closed_form(chain);
      CHECK(std::abs(q.value - exact) < 1e-10);
      CHECK(q.error < 1e-9);
      // closed chain: the integral of dz1 vanishes
      auto closure = integrate_form(chain, Integrand::one(), 1e-11);
      CHECK(std::abs(closure.value) < 1e-10);
    }
  }
}

TEST_CASE("pole-proximity guard fires") {
  BoundaryChain chain = unit_circle_chain();
  Polynomial den = Polynomial::variable(0, 1) - Polynomial::constant(Complex(1.0, 0.0), 1);
  RationalFunction near_pole(Polynomial::constant(1.0, 1), den);
  // a pole on the path violates any reasonable distance certificate
  CHECK_THROWS_AS(integrate_form(chain, Integrand::rational(near_pole, 0.2), 1e-10), Error);
  // a clear denominator passes: pole at 3 with floor 0.2
  Polynomial den2 = Polynomial::variable(0, 1) - Polynomial::constant(Complex(3.0, 0.0), 1);
  RationalFunction clear(Polynomial::constant(1.0, 1), den2);
  auto r = integrate_form(chain, Integrand::rational(clear, 0.2), 1e-10);
  CHECK(std::abs(r.value) < 1e-10);  // holomorphic inside: integral 0
}

TEST_CASE("stage-0 report equals chain data") {
  CheeseSpec spec = generate_cheese(42, 0.5, 20, 0.01);
  Tolerances tol;
  TowerWork bw;
  TowerSpec t = build_exp_tower(spec, 0, 6, 42, {5, 10, 20}, 1.0, tol, bw);
  TowerWork work;
  MeasureReport r = boundary_measure(t, 0, 20, MeasureMethod::direct, work, 1e-10);
  BoundaryChain chain = boundary_chain(spec, 20);
  CHECK(r.total_variation == doctest::Approx(chain_length(chain)));
  CHECK(std::abs(r.moment_zbar - moment_zbar_closed_form(chain)) < 1e-9);
  AreaResult a = area(spec, 20, AreaMethod::boundary_integral);
  CHECK(std::abs(r.moment_zbar) == doctest::Approx(2.0 * a.value).epsilon(1e-9));
  CHECK(r.ej_variation == 0.0);
}

TEST_CASE("constant stage function: E_J empty, moment scales exactly by m") {
  CheeseSpec spec = generate_cheese(13, 0.5, 6, 0.01);
  Tolerances tol;
  TowerWork bw;
  TowerSpec t = build_exp_tower(spec, 0, 6, 13, {6}, 1.0, tol, bw);
  // handcraft stage 1 with a constant function and three sheets
  ExpStage st;
  st.level = 1;
  st.f = RationalFunction::constant(Complex(2.0, 0.0), 1);
  st.c = 0.7;  // arg 2 = 0 stays clear of the level
  st.m = 3;
  st.sched = schedule(1);
  st.dict_source = {0, 1};
  st.zero_free_margin = 2.0;
  CutLevelCert cert;
  cert.c = st.c;
  cert.min_margin = kPi;
  cert.min_endpoint_gap = 0.7;
  st.cut_certs[6] = cert;
  st.cut_length[6] = 0.0;
  t.exp_stages.push_back(st);

  TowerWork work;
  MeasureReport r0 = boundary_measure(t, 0, 6, MeasureMethod::direct, work, 1e-10);
  MeasureReport r1d = boundary_measure(t, 1, 6, MeasureMethod::direct, work, 1e-10);
  MeasureReport r1r = boundary_measure(t, 1, 6, MeasureMethod::recursive, work, 1e-10);
  CHECK(r1d.ej_variation == 0.0);
  CHECK(std::abs(r1d.moment_zbar - 3.0 * r0.moment_zbar) < 1e-9);
  CHECK(std::abs(r1r.moment_zbar - r1d.moment_zbar) < 1e-9);
  CHECK(r1d.total_variation == doctest::Approx(3.0 * r0.total_variation));
}

TEST_CASE("direct and recursive measures are mutual oracles at N=1,2") {
  CheeseSpec spec = generate_cheese(42, 0.5, 20, 0.01);
  Tolerances tol;
  TowerWork bw;
  TowerSpec t = build_exp_tower(spec, 2, 6, 42, {5, 10, 20}, 1.0, tol, bw);
  TowerWork work;
  for (int N : {1, 2}) {
    for (int k : {5, 10, 20}) {
      MeasureReport d = boundary_measure(t, N, k, MeasureMethod::direct, work, 1e-10);
      MeasureReport r = boundary_measure(t, N, k, MeasureMethod::recursive, work, 1e-10);
      CHECK(std::abs(d.moment_zbar - r.moment_zbar) <= 1e-6 * std::abs(r.moment_zbar));
      CHECK(std::abs(d.total_variation - r.total_variation) <=
            1e-6 * r.total_variation);
      // report invariants
      CHECK(std::abs(d.total_variation - (d.ei_variation + d.ej_variation)) <=
            1e-9 + d.quadrature_error);
      CHECK(std::abs(d.moment_zbar - (d.ei_moment + d.ej_moment)) <=
            1e-9 + d.quadrature_error);
      // triangle bound for the sup-norm-1 integrand conj(z1)
      CHECK(std::abs(d.moment_zbar) <= d.total_variation * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("direct lifting through three stages matches the recursive reduction") {
  // seed 12 has multi-sheet stages and a nonempty stage-3 cut set, so the
  // direct route exercises E_J window copies at full depth
  CheeseSpec spec = generate_cheese(12, 0.5, 20, 0.01);
  Tolerances tol;
  TowerWork work;
  TowerSpec t = build_exp_tower(spec, 3, 6, 12, {5, 10, 20}, 1.0, tol, work);
  REQUIRE(t.exp_stages[2].cut_certs.at(5).crossings.size() > 0);
  MeasureReport d = boundary_measure(t, 3, 5, MeasureMethod::direct, work, 1e-10);
  MeasureReport r = boundary_measure(t, 3, 5, MeasureMethod::recursive, work, 1e-10);
  CHECK(std::abs(d.moment_zbar - r.moment_zbar) <= 1e-9 * std::abs(r.moment_zbar));
  CHECK(std::abs(d.total_variation - r.total_variation) <= 1e-6 * r.total_variation);
  CHECK(d.ej_variation > 0.0);
  CHECK(std::abs(d.ej_moment) <= 1e-8 * d.ej_variation);
  // the three-stage product carries through the moment identity exactly
  MeasureReport base = boundary_measure(t, 0, 5, MeasureMethod::direct, work, 1e-10);
  double mprod = t.sheet_product(3);
  CHECK(std::abs(d.moment_zbar - mprod * base.moment_zbar) <=
        1e-8 * std::abs(base.moment_zbar) * mprod);
}

TEST_CASE("cut-copy variation: two oriented copies double the traced length") {
  // arg(z - 2) = pi on the full disc: segment of length 2, copies give 4
  CheeseSpec spec = generate_cheese(1, 0.5, 0, 0.01);
  Tolerances tol;
  TowerSpec t;
  t.kind = TowerKind::exponential;
  t.base = spec;
  t.k_list = {0};
  t.k_floor = 0;
  t.tol = tol;
  Polynomial num = Polynomial::variable(0, 1) - Polynomial::constant(2.0, 1);
  RationalFunction f{num};
  TowerWork work;
  auto cert = certify_cut_level(f, t, 0, 0, kPi, work);
  REQUIRE(cert.has_value());
  ExpStage st;
  st.level = 1;
  st.f = f;
  st.c = kPi;
  st.m = 1;
  st.sched = schedule(1);
  st.dict_source = {0, 1};
  st.zero_free_margin = 1.0;
  st.cut_certs[0] = *cert;
  t.exp_stages.push_back(st);
  MeasureReport r = boundary_measure(t, 1, 0, MeasureMethod::direct, work, 1e-10);
  CHECK(r.ej_variation == doctest::Approx(4.0).epsilon(1e-7));
  CHECK(std::abs(r.ej_moment) <= 1e-8 * r.ej_variation);
}
