// Acceptance suite: one pass/fail line per criterion, exit code = #failures.

#include <chrono>
#include <cstdio>

#include "cheese/certify.hpp"
#include "cheese/io.hpp"

using namespace cheese;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %s — %s\n", pass ? "PASS" : "FAIL", idx, name, detail.c_str());
  if (!pass) ++g_failures;
}

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Pipeline {
  CheeseSpec spec;
  TowerSpec tower;
  TowerWork work;
};

Pipeline build_pipeline(int stages) {
  Pipeline p;
  p.spec = generate_cheese(42, 0.5, 20, 0.01);
  Tolerances tol;
  p.tower = build_exp_tower(p.spec, stages, 6, 42, {5, 10, 20}, 1.0, tol, p.work);
  return p;
}

// 1. Green identity against a Monte Carlo oracle, 10 seeded cheeses.
void criterion_1() {
  auto t0 = Clock::now();
  bool pass = true;
  std::string detail;
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    int holes = static_cast<int>(2 * seed);  // 2..20
    CheeseSpec spec = generate_cheese(seed, 0.5, holes, 0.01);
    BoundaryChain chain = boundary_chain(spec, holes);
    IntegralResult q = integrate_form(chain, Integrand::zbar(), 1e-10);
    AreaResult mc = area(spec, holes, AreaMethod::monte_carlo, 10000000);
    double diff = std::abs(q.value - Complex(0.0, 2.0 * mc.value));
    double sigma = 2.0 * mc.error_estimate;  // one sigma of 2*Area_MC
    worst_ratio = std::max(worst_ratio, diff / sigma);
    if (diff > 3.0 * sigma) pass = false;
  }
  double dt = elapsed(t0);
  if (dt > 60.0) pass = false;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "10 cheeses, 1e7 MC samples each; worst |diff|/sigma = %.2f; %.1f s", worst_ratio,
                dt);
  report(1, "Green identity |int zbar dz - 2i Area_MC| <= 3 sigma", pass, buf);
}

// 2. Stage-0 norm bound, exact assertion for every seeded spec and truncation.
void criterion_2() {
  bool pass = true;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CheeseSpec spec = generate_cheese(seed, 0.5, 20, 0.01);
    for (int k = 0; k <= 20; ++k) {
      double len = chain_length(boundary_chain(spec, k));
      worst = std::max(worst, len);
      if (!(len < 3.0 * kPi)) pass = false;
    }
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf), "max chain length %.6f < 3 pi = %.6f", worst, 3.0 * kPi);
  report(2, "stage-0 norm bound ||mu_0^k|| < 2(1+r) pi", pass, buf);
}

// 3+4. Sheet multiplication law and cut-copy cancellation at N = 1, 2.
void criteria_3_4(Pipeline& p) {
  bool pass3 = true, pass4 = true;
  double worst3 = 0.0, worst4 = 0.0;
  for (int N : {1, 2}) {
    for (int k : {5, 10, 20}) {
      MeasureReport prev =
          boundary_measure(p.tower, N - 1, k, MeasureMethod::direct, p.work, 1e-10);
      MeasureReport cur =
          boundary_measure(p.tower, N, k, MeasureMethod::direct, p.work, 1e-10);
      double m = static_cast<double>(p.tower.exp_stages[static_cast<size_t>(N - 1)].m);
      double rel = std::abs(cur.ei_moment - m * prev.moment_zbar) /
                   std::abs(m * prev.moment_zbar);
      worst3 = std::max(worst3, rel);
      if (rel > 1e-6) pass3 = false;
      double cancel = std::abs(cur.ej_moment);
      double bound = 1e-8 * cur.ej_variation;
      worst4 = std::max(worst4, cur.ej_variation > 0 ? cancel / cur.ej_variation : 0.0);
      if (cancel > bound) pass4 = false;
    }
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf), "worst relative deviation %.2e (tol 1e-6)", worst3);
  report(3, "E_I multiplication law at N=1,2", pass3, buf);
  std::snprintf(buf, sizeof(buf), "worst |int_EJ zbar dz1| / ej_variation = %.2e (tol 1e-8)",
                worst4);
  report(4, "E_J cancellation at N<=2", pass4, buf);
}

// 5. Conditions (8) and (9) for N in {1,2,3}, k in {5,10,20}.
void criterion_5(Pipeline& p) {
  auto t0 = Clock::now();
  bool pass = true;
  double B_lb = kPi * (1.0 - 0.25);
  double min_delta = 1e300, min_excess = 1e300;
  for (int N : {1, 2, 3}) {
    for (int k : {5, 10, 20}) {
      MeasureMethod method = N <= 2 ? MeasureMethod::direct : MeasureMethod::recursive;
      MeasureReport rep = boundary_measure(p.tower, N, k, method, p.work, 1e-10);
      Certificate cert = certify_conditions(rep, p.tower.sheet_product(N), B_lb, 1.0);
      if (!cert.pass_condition_8 || !cert.pass_condition_9) pass = false;
      if (!(cert.delta_margin >= 1.0)) pass = false;
      if (!(cert.moment_abs > cert.moment_bound)) pass = false;
      min_delta = std::min(min_delta, cert.delta_margin);
      min_excess = std::min(min_excess, cert.moment_abs - cert.moment_bound);
    }
  }
  double dt = elapsed(t0);
  if (dt > 600.0) pass = false;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "min delta_N = %.4f (>= 1), min moment excess = %.4f, %.1f s", min_delta,
                min_excess, dt);
  report(5, "conditions (8) and (9) at N=1..3, k=5,10,20", pass, buf);
}

// 6+7. Nontriviality gap and Stokes annihilation over a 50-function family.
void criteria_6_7(Pipeline& p) {
  bool pass6 = true, pass7 = true;
  double floor = kPi * (1.0 - 0.25) / kTwoPi;  // B_lb / 2 pi = 0.375
  double worst_gap = 1e300, worst_annih = 0.0, worst_sup_slack = 1e300;
  for (int N : {1, 2}) {
    int k = 20;
    MeasureReport rep = boundary_measure(p.tower, N, k, MeasureMethod::direct, p.work, 1e-10);
    std::vector<RationalFunction> tests = make_test_family(p.tower, N, 50, 4242);
    std::vector<CVec> samples = region_sample_points(p.tower, N, k, 0.03);
    for (const Curve& c : region_boundary(p.tower, N, k, p.work))
      for (const auto& z : c.zs) samples.push_back(z);
    NontrivialityReport nr =
        nontriviality_gap(p.tower, N, k, rep, tests, samples, p.work, 1e-10);
    if (nr.tests_run + nr.tests_skipped != 50) pass6 = false;
    if (!(nr.gap >= floor - 1e-4)) pass6 = false;
    if (!(nr.sampled_sup_norm_min >= nr.gap - 1e-3)) pass6 = false;
    worst_gap = std::min(worst_gap, nr.gap);
    worst_sup_slack = std::min(worst_sup_slack, nr.sampled_sup_norm_min - nr.gap);
    double bound = 1e-8 * rep.total_variation * nr.max_test_norm;
    if (!(nr.annihilation_max <= bound)) pass7 = false;
    worst_annih = std::max(
        worst_annih, nr.annihilation_max / (rep.total_variation * nr.max_test_norm));
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "min gap %.6f >= %.6f - 1e-4; min sup slack %.3f >= -1e-3",
                worst_gap, floor, worst_sup_slack);
  report(6, "nontriviality gap >= B_lb / 2 pi over 50 tests", pass6, buf);
  std::snprintf(buf, sizeof(buf), "worst |int g dmu| / (||mu|| ||g||) = %.2e (tol 1e-8)",
                worst_annih);
  report(7, "Stokes annihilation of holomorphic rational tests", pass7, buf);
}

// 8. Square-root tower: fiber counts, alpha bounds, halving identity.
void criterion_8() {
  Tolerances tol;
  TowerSpec t = build_sqrt_tower(8, 6, 11, tol);
  bool pass = true;
  for (const auto& st : t.sqrt_stages)
    if (!(std::abs(st.alpha) < 1.0 / st.level)) pass = false;
  TowerShape sh = t.shape();
  Rng rng = Rng::stream(11, 0xACC8);
  std::vector<CVec> all;
  int tested = 0;
  for (int i = 0; i < 2000 && tested < 100; ++i) {
    Complex p = 0.99 * rng.unit_disc();
    std::vector<CVec> pts;
    try {
      pts = fiber(sh, p, 8, 1e-9);
    } catch (const Error&) {
      continue;  // point hit a stage zero; criterion asks for points avoiding zeros
    }
    bool near_zero = false;
    for (const auto& z : pts)
      for (size_t j = 1; j < z.size(); ++j)
        if (std::abs(z[j]) < 1e-6) near_zero = true;
    if (near_zero) continue;
    ++tested;
    if (pts.size() != 256) pass = false;
    for (auto& z : pts) all.push_back(std::move(z));
  }
  if (tested != 100) pass = false;
  int skipped = 0;
  double halving = halving_identity_check(t, all, &skipped);
  if (!(halving <= 1e-12)) pass = false;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "100 points with |fiber| = 2^8; all |alpha_M| < 1/M; halving residual %.2e",
                halving);
  report(8, "square-root tower fibers and halving identity", pass, buf);
}

// 9. Scheduler against brute force; condition-(6) wiring.
void criterion_9(Pipeline& p) {
  bool pass = true;
  std::vector<std::pair<long long, long long>> pairs{{0, 0}};
  for (long long m = 1; m <= 160; ++m)
    for (long long n = 1; n <= m; ++n) pairs.emplace_back(m, n);
  std::sort(pairs.begin(), pairs.end());
  for (long long N = 1; N <= 10000; ++N) {
    ScheduleIndex idx = schedule(N);
    if (idx.r != pairs[static_cast<size_t>(N - 1)].first ||
        idx.s != pairs[static_cast<size_t>(N - 1)].second || sigma(idx) != N - 1)
      pass = false;
  }
  if (p.tower.exp_stages[0].dict_source != std::make_pair(0, 1)) pass = false;
  if (p.tower.exp_stages[2].dict_source != std::make_pair(1, 1)) pass = false;
  report(9, "sigma schedule vs brute-force enumeration (N <= 10^4), wiring g_{0,1}, g_{1,1}",
         pass, "dictionary-order bijection verified");
}

// 10. Generator coefficient scheme on the truncated tower.
void criterion_10(Pipeline& p) {
  TowerShape sh = p.tower.shape(2);
  Rng rng = Rng::stream(42, 0x6e);
  std::vector<CVec> pts;
  while (pts.size() < 1000) {
    Complex z1 = rng.unit_disc();
    if (truncation_margin(p.spec, 20, z1) < 0.02) continue;
    for (auto& z : fiber(sh, z1, 2)) {
      pts.push_back(std::move(z));
      if (pts.size() == 1000) break;
    }
  }
  std::vector<GenFunction> fns;
  for (int n = 1; n <= 2; ++n) {
    const ExpStage& st = p.tower.exp_stages[static_cast<size_t>(n - 1)];
    GenFunction qinv;
    qinv.tag = GenCase::inverse_case;
    for (const CVec& z : pts) {
      Complex q = st.f.den().eval(std::span<const Complex>(z.data(), st.f.arity()));
      qinv.h_values.push_back(q);
      qinv.values.push_back(1.0 / q);
    }
    fns.push_back(std::move(qinv));
    GenFunction logf;
    logf.tag = GenCase::log_case;
    for (const CVec& z : pts) logf.values.push_back(z[static_cast<size_t>(n)]);
    fns.push_back(std::move(logf));
  }
  GeneratorReport rep = generator_coefficients(fns, 2);
  bool pass = rep.cond_i && rep.cond_ii && rep.cond_iii && rep.cond_iv;
  double worst = 0.0;
  for (double r : rep.recovery_residuals) worst = std::max(worst, r);
  if (!(worst <= 1e-6)) pass = false;
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "conditions (i)-(iv) hold; worst recovery residual %.2e on 1000 samples", worst);
  report(10, "two-generator coefficient scheme on the N=2 tower", pass, buf);
}

// 11. Density residuals over nested dictionaries on a 3-hole cheese.
void criterion_11() {
  CheeseSpec spec = generate_cheese(4, 0.5, 3, 0.01);
  BoundaryChain chain = boundary_chain(spec, 3);
  std::vector<BoundarySample> samples = chain_samples(chain, 60);
  Tolerances tol;
  TowerWork bw;
  TowerSpec t = build_exp_tower(spec, 0, 6, 4, {3}, 1.0, tol, bw);
  TowerWork work;
  std::vector<RationalFunction> dict;
  int tries = 0;
  while (dict.size() < 50 && tries < 800) {
    ++tries;
    Rng sub = Rng::stream(404, static_cast<std::uint64_t>(tries));
    Polynomial pz(1);
    unsigned deg = 1 + static_cast<unsigned>(sub.u64() % 2);
    for (unsigned d = 0; d <= deg; ++d) pz.add_term(0.8 * sub.unit_disc(), {d});
    double mx = 0.0;
    for (const auto& s : samples) mx = std::max(mx, std::abs(pz.eval(CVec{s.z})));
    if (mx < 1e-6) continue;
    Complex lam =
        mx * sub.uniform(1.2, 2.0) * std::exp(Complex(0.0, sub.uniform(0.0, kTwoPi)));
    RationalFunction g(pz - Polynomial::constant(lam, 1));
    if (min_modulus_on_region(t, 0, 3, g, work, 0.05) < 1e-3) continue;
    dict.push_back(g);
  }
  bool pass = dict.size() == 50;
  auto sizes = [&](size_t n) {
    return std::vector<RationalFunction>(dict.begin(), dict.begin() + static_cast<long>(n));
  };
  // member target: u = log|g_3| must fit to zero at every nested size
  double member_worst = 0.0;
  if (pass) {
    auto s_mem = samples;
    for (auto& s : s_mem)
      s.target = std::log(std::abs(dict[2].eval(std::span<const Complex>(&s.z, 1))));
    for (size_t n : {5, 15, 50}) {
      double r = dirichlet_residual(s_mem, sizes(n), FitNorm::L2).residual;
      member_worst = std::max(member_worst, r);
      if (!(r <= 1e-10)) pass = false;
    }
  }
  // generic target: u = Re z, nested residuals nonincreasing
  double r5 = 0, r15 = 0, r50 = 0;
  if (pass) {
    auto s_re = samples;
    for (auto& s : s_re) s.target = s.z.real();
    r5 = dirichlet_residual(s_re, sizes(5), FitNorm::L2).residual;
    r15 = dirichlet_residual(s_re, sizes(15), FitNorm::L2).residual;
    r50 = dirichlet_residual(s_re, sizes(50), FitNorm::L2).residual;
    if (!(r15 <= r5 + 1e-12 && r50 <= r15 + 1e-12)) pass = false;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "member residual %.1e (<= 1e-10); Re z residuals %.4f >= %.4f >= %.4f",
                member_worst, r5, r15, r50);
  report(11, "log-modulus density residuals, nested dictionaries 5 in 15 in 50", pass, buf);
}

// 12. Determinism of the full pipeline payloads.
void criterion_12() {
  auto run_once = [&]() {
    CheeseSpec spec = generate_cheese(42, 0.5, 12, 0.01);
    Tolerances tol;
    TowerWork work;
    TowerSpec t = build_exp_tower(spec, 2, 5, 42, {6, 12}, 1.0, tol, work);
    Json verdict = Json::array();
    double B_lb = kPi * (1.0 - 0.25);
    for (int N = 0; N <= 2; ++N) {
      for (int k : {6, 12}) {
        MeasureReport rep = boundary_measure(t, N, k, MeasureMethod::direct, work, 1e-10);
        verdict.push_back(Json{{"report", report_to_json(rep)},
                               {"certificate", certificate_to_json(certify_conditions(
                                                   rep, t.sheet_product(N), B_lb, 1.0))}});
      }
    }
    return std::make_tuple(spec_to_json(spec).dump(), tower_to_json(t).dump(),
                           verdict.dump());
  };
  auto [s1, t1, v1] = run_once();
  auto [s2, t2, v2] = run_once();
  bool pass = s1 == s2 && t1 == t2 && v1 == v2;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "spec %zu B, tower %zu B, verdict %zu B byte-identical",
                s1.size(), t1.size(), v1.size());
  report(12, "pipeline determinism (byte-identical payloads)", pass, buf);
}

}  // namespace

int main() {
  std::printf("acceptance: Swiss-cheese covering-tower certification\n");
  auto t0 = Clock::now();
  try {
    criterion_1();
    criterion_2();
    Pipeline p = build_pipeline(3);
    criteria_3_4(p);
    criterion_5(p);
    criteria_6_7(p);
    criterion_8();
    criterion_9(p);
    criterion_10(p);
    criterion_11();
    criterion_12();
  } catch (const Error& e) {
    std::printf("[FAIL] suite aborted by error [%s]: %s\n", e.code.c_str(), e.what());
    ++g_failures;
  }
  std::printf("%d criterion failure(s); total %.1f s\n", g_failures, elapsed(t0));
  return g_failures;
}
