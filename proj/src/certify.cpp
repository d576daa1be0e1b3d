#include "cheese/certify.hpp"

#include <Eigen/Dense>

#include <algorithm>

namespace cheese {

Certificate certify_conditions(const MeasureReport& rep, double sheet_product, double B_lb,
                               double target_delta) {
  if (!(B_lb > 0.0)) throw Error("invalid-bound", "B_lb must be positive");
  Certificate c;
  c.stage = rep.stage;
  c.truncation_k = rep.truncation_k;
  c.lhs_norm = rep.total_variation;
  c.rhs_norm_bound = 4.0 * kPi * sheet_product - target_delta;
  c.delta_margin = 4.0 * kPi * sheet_product - rep.total_variation;
  c.target_delta = target_delta;
  c.moment_abs = std::abs(rep.moment_zbar);
  c.moment_bound = 2.0 * B_lb * sheet_product;
  c.B_lb = B_lb;
  c.pass_condition_8 = c.lhs_norm < c.rhs_norm_bound;
  c.pass_condition_9 = c.moment_abs > c.moment_bound;
  return c;
}

bool certificate_sound(const Certificate& c) {
  return c.pass_condition_8 == (c.lhs_norm < c.rhs_norm_bound) &&
         c.pass_condition_9 == (c.moment_abs > c.moment_bound);
}

NontrivialityReport nontriviality_gap(const TowerSpec& tower, int N, int k,
                                      const MeasureReport& rep,
                                      const std::vector<RationalFunction>& tests,
                                      const std::vector<CVec>& sample_points,
                                      TowerWork& work, double tol) {
  NontrivialityReport out;
  out.theoretical_floor = 0.0;
  out.gap = 1e300;
  out.sampled_sup_norm_min = 1e300;
  double norm = rep.total_variation;
  Complex moment = rep.moment_zbar;
  for (const RationalFunction& g : tests) {
    Complex ig;
    try {
      SplitIntegral si = integrate_over_region(tower, N, k, Integrand::rational(g), work, tol);
      ig = si.ei + si.ej;
    } catch (const Error& e) {
      if (e.code == "pole-proximity") {
        ++out.tests_skipped;
        continue;
      }
      throw;
    }
    ++out.tests_run;
    out.annihilation_max = std::max(out.annihilation_max, std::abs(ig));
    out.gap = std::min(out.gap, std::abs(moment - ig) / norm);

    double sup = 0.0, gnorm = 0.0;
    for (const CVec& z : sample_points) {
      Complex gv = g.eval(std::span<const Complex>(z.data(), g.arity()));
      sup = std::max(sup, std::abs(std::conj(z[0]) - gv));
      gnorm = std::max(gnorm, std::abs(gv));
    }
    out.sampled_sup_norm_min = std::min(out.sampled_sup_norm_min, sup);
    out.max_test_norm = std::max(out.max_test_norm, gnorm);
  }
  if (out.tests_run == 0) throw Error("pole-proximity", "every test function was skipped");
  return out;
}

std::vector<RationalFunction> make_test_family(const TowerSpec& tower, int N, int count,
                                               std::uint64_t seed) {
  std::vector<RationalFunction> fam;
  const unsigned arity = static_cast<unsigned>(N + 1);
  int holes =
      tower.base ? std::min(tower.k_floor, static_cast<int>(tower.base->holes.size())) : 0;
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, 0x7E57 + static_cast<std::uint64_t>(i));
    if (i % 3 == 2 && holes >= 1) {
      // Moebius-type with pole inside a removed hole
      int h = 1 + static_cast<int>(rng.u64() % static_cast<std::uint64_t>(holes));
      const Disc& d = tower.base->holes[static_cast<size_t>(h - 1)];
      Complex b = d.center + 0.25 * d.radius * rng.unit_disc();
      Polynomial z1 = Polynomial::variable(0, arity);
      Polynomial den = z1 - Polynomial::constant(b, arity);
      Polynomial num =
          Polynomial::constant(rng.unit_disc(), arity) + z1 * (0.5 * rng.unit_disc());
      fam.push_back(RationalFunction(num, den));
    } else {
      unsigned deg = 1 + static_cast<unsigned>(rng.u64() % 4);
      Polynomial p = Polynomial::constant(rng.unit_disc(), arity);
      Polynomial z1 = Polynomial::variable(0, arity);
      Polynomial pw = Polynomial::constant(1.0, arity);
      for (unsigned dd = 1; dd <= deg; ++dd) {
        pw = pw * z1;
        p = p + pw * (0.6 * rng.unit_disc());
      }
      if (N >= 1 && i % 4 == 1) {
        // involve a lifted coordinate; still polynomial, so holomorphic
        p = p + Polynomial::variable(arity - 1, arity) * (0.2 * rng.unit_disc());
      }
      fam.push_back(RationalFunction(p));
    }
  }
  return fam;
}

std::vector<BoundarySample> chain_samples(const BoundaryChain& chain, int per_unit_length) {
  std::vector<BoundarySample> out;
  for (const auto& arc : chain.arcs) {
    double len =
        chain.circles[static_cast<size_t>(arc.circle_index)].radius * arc.angular_extent();
    int n = std::max(4, static_cast<int>(std::ceil(len * per_unit_length)));
    for (int i = 0; i < n; ++i) {
      double t = (i + 0.5) / n;
      BoundarySample s;
      s.z = chain.arc_point(arc, t);
      s.weight = len / n;
      out.push_back(s);
    }
  }
  return out;
}

DirichletResult dirichlet_residual(const std::vector<BoundarySample>& samples,
                                   const std::vector<RationalFunction>& dictionary,
                                   FitNorm norm) {
  const size_t S = samples.size(), D = dictionary.size();
  if (S == 0 || D == 0) throw Error("invalid-input", "empty samples or dictionary");
  Eigen::MatrixXd A(S, D);
  Eigen::VectorXd u(S), w(S);
  for (size_t i = 0; i < S; ++i) {
    CVec z{samples[i].z};
    for (size_t j = 0; j < D; ++j) {
      std::span<const Complex> zz(z.data(), dictionary[j].arity());
      Complex gv = dictionary[j].eval(zz);
      if (std::abs(gv) < 1e-12 || dictionary[j].den_abs(zz) < 1e-12)
        throw Error("zero-on-region", "dictionary entry vanishes at a sample");
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::log(std::abs(gv));
    }
    u(static_cast<Eigen::Index>(i)) = samples[i].target;
    w(static_cast<Eigen::Index>(i)) = samples[i].weight;
  }

  auto weighted_solve = [&](const Eigen::VectorXd& wts, DirichletResult& res) {
    Eigen::VectorXd sq = wts.cwiseSqrt();
    Eigen::MatrixXd Aw = sq.asDiagonal() * A;
    Eigen::VectorXd uw = sq.asDiagonal() * u;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Aw, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    res.condition = smin > 0 ? smax / smin : 1e300;
    res.ill_conditioned = res.condition > 1e12;
    Eigen::VectorXd t = svd.solve(uw);
    res.coefficients.assign(t.data(), t.data() + t.size());
    return (A * t - u).eval();
  };

  DirichletResult res;
  if (norm == FitNorm::L2) {
    Eigen::VectorXd r = weighted_solve(w, res);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < S; ++i) {
      num += w(static_cast<Eigen::Index>(i)) * r(static_cast<Eigen::Index>(i)) *
             r(static_cast<Eigen::Index>(i));
      den += w(static_cast<Eigen::Index>(i));
    }
    res.residual = std::sqrt(num / den);
    return res;
  }
  // sup norm: Lawson's iteratively reweighted least squares
  Eigen::VectorXd lw = w;
  Eigen::VectorXd r;
  for (int iter = 0; iter < 40; ++iter) {
    r = weighted_solve(lw, res);
    double rmax = r.cwiseAbs().maxCoeff();
    if (rmax < 1e-15) break;
    for (Eigen::Index i = 0; i < lw.size(); ++i)
      lw(i) = std::max(lw(i) * std::abs(r(i)) / rmax, 1e-14);
    double total = lw.sum();
    lw *= static_cast<double>(S) / total;
  }
  res.residual = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  return res;
}

double halving_identity_check(const TowerSpec& tower, const std::vector<CVec>& fibers,
                              int* skipped) {
  if (tower.kind != TowerKind::square_root)
    throw Error("invalid-stage", "halving identity applies to square-root towers");
  TowerShape sh = tower.shape();
  double worst = 0.0;
  int skip = 0;
  for (const CVec& z : fibers) {
    for (size_t j = 1; j < z.size(); ++j) {
      Complex val = sh.stages[j - 1].f.eval(std::span<const Complex>(z.data(), j));
      if (std::abs(val) < 1e-300 || std::abs(z[j]) < 1e-300) {
        ++skip;
        continue;
      }
      worst = std::max(worst, std::abs(std::log(std::abs(z[j])) - 0.5 * std::log(std::abs(val))));
    }
  }
  if (skipped) *skipped = skip;
  return worst;
}

GeneratorReport generator_coefficients(const std::vector<GenFunction>& fns, int start_index) {
  const int T = static_cast<int>(fns.size());
  if (T == 0) throw Error("invalid-input", "empty generator sequence");
  size_t S = fns[0].values.size();
  for (const auto& f : fns) {
    if (f.values.size() != S) throw Error("invalid-input", "sample count mismatch");
    if (f.tag == GenCase::inverse_case && f.h_values.size() != S)
      throw Error("invalid-input", "inverse case needs h samples");
  }
  auto sup = [](const std::vector<Complex>& v) {
    double m = 0.0;
    for (const Complex& x : v) m = std::max(m, std::abs(x));
    return m;
  };

  GeneratorReport rep;
  rep.start_index = start_index;
  std::vector<double> fnorm(static_cast<size_t>(T));
  for (int i = 0; i < T; ++i) {
    fnorm[static_cast<size_t>(i)] = sup(fns[static_cast<size_t>(i)].values);
    if (!(fnorm[static_cast<size_t>(i)] > 0.0))
      throw Error("invalid-input", "zero norm in generator sequence");
    rep.tags.push_back(fns[static_cast<size_t>(i)].tag);
  }

  // greedy: half of the tightest constraint; log-case tails reserve
  // geometrically so each budget is never exhausted
  std::vector<double> tail_budget(static_cast<size_t>(T), 0.0);
  rep.coefficients.assign(static_cast<size_t>(T), 0.0);
  for (int i = 0; i < T; ++i) {
    int n = start_index + i;
    double bound = std::pow(2.0, -n) / fnorm[static_cast<size_t>(i)];
    for (int kpos = 0; kpos < i; ++kpos) {
      int kn = start_index + kpos;
      if (fns[static_cast<size_t>(kpos)].tag == GenCase::inverse_case) {
        std::vector<Complex> prod(S);
        for (size_t s = 0; s < S; ++s)
          prod[s] = fns[static_cast<size_t>(i)].values[s] *
                    fns[static_cast<size_t>(kpos)].h_values[s];
        double cross = sup(prod);
        if (cross > 0.0)
          bound = std::min(bound, std::pow(2.0, -n) *
                                      rep.coefficients[static_cast<size_t>(kpos)] / cross);
        (void)kn;
      } else {
        bound = std::min(bound,
                         tail_budget[static_cast<size_t>(kpos)] /
                             (2.0 * fnorm[static_cast<size_t>(i)]));
      }
    }
    double cn = 0.5 * bound;
    rep.coefficients[static_cast<size_t>(i)] = cn;
    for (int kpos = 0; kpos < i; ++kpos)
      if (fns[static_cast<size_t>(kpos)].tag == GenCase::log_case)
        tail_budget[static_cast<size_t>(kpos)] -= cn * fnorm[static_cast<size_t>(i)];
    if (fns[static_cast<size_t>(i)].tag == GenCase::log_case)
      tail_budget[static_cast<size_t>(i)] = kPi * cn;
  }

  // post-hoc verification of (i)-(iv) on the finite truncation
  rep.cond_i = true;
  rep.cond_ii = true;
  rep.cond_iii = true;
  rep.cond_iv = true;
  for (int i = 0; i < T; ++i) {
    double cn = rep.coefficients[static_cast<size_t>(i)];
    int n = start_index + i;
    if (!(cn > 0.0)) rep.cond_i = false;
    if (!(cn * fnorm[static_cast<size_t>(i)] < std::pow(2.0, -n))) rep.cond_ii = false;
  }
  for (int kpos = 0; kpos < T; ++kpos) {
    if (fns[static_cast<size_t>(kpos)].tag == GenCase::inverse_case) {
      for (int i = kpos + 1; i < T; ++i) {
        std::vector<Complex> prod(S);
        for (size_t s = 0; s < S; ++s)
          prod[s] = fns[static_cast<size_t>(i)].values[s] *
                    fns[static_cast<size_t>(kpos)].h_values[s];
        int n = start_index + i;
        if (!(rep.coefficients[static_cast<size_t>(i)] * sup(prod) <
              std::pow(2.0, -n) * rep.coefficients[static_cast<size_t>(kpos)]))
          rep.cond_iii = false;
      }
    } else {
      double tail = 0.0;
      for (int i = kpos + 1; i < T; ++i)
        tail += rep.coefficients[static_cast<size_t>(i)] * fnorm[static_cast<size_t>(i)];
      if (!(tail < kPi * rep.coefficients[static_cast<size_t>(kpos)])) rep.cond_iv = false;
    }
  }

  // pointwise recoveries
  auto b_values = [&](int kpos) {
    std::vector<Complex> b(S, Complex(0.0, 0.0));
    for (int i = kpos; i < T; ++i)
      for (size_t s = 0; s < S; ++s)
        b[s] += rep.coefficients[static_cast<size_t>(i)] * fns[static_cast<size_t>(i)].values[s];
    return b;
  };
  for (int kpos = 0; kpos < T; ++kpos) {
    double ck = rep.coefficients[static_cast<size_t>(kpos)];
    std::vector<Complex> b = b_values(kpos);
    double res = 0.0;
    if (fns[static_cast<size_t>(kpos)].tag == GenCase::log_case) {
      // exp(-sum_{n>k} (c_n/c_k) f_n) == exp(f_k) exp(-b_k/c_k)
      for (size_t s = 0; s < S; ++s) {
        Complex tail = 0.0;
        for (int i = kpos + 1; i < T; ++i)
          tail += (rep.coefficients[static_cast<size_t>(i)] / ck) *
                  fns[static_cast<size_t>(i)].values[s];
        Complex lhs = std::exp(-tail);
        Complex rhs = std::exp(fns[static_cast<size_t>(kpos)].values[s]) * std::exp(-b[s] / ck);
        res = std::max(res, std::abs(lhs - rhs));
      }
    } else {
      // Neumann recovery of f_k = 1/h_k from b_k h_k = c_k - (c_k - b_k h_k)
      for (size_t s = 0; s < S; ++s) {
        Complex bh = b[s] * fns[static_cast<size_t>(kpos)].h_values[s];
        Complex ratio = (ck - bh) / ck;
        Complex inv = 0.0, pw = 1.0;
        for (int j = 0; j < 200; ++j) {
          inv += pw;
          pw *= ratio;
          if (std::abs(pw) < 1e-18) break;
        }
        inv /= ck;  // (b_k h_k)^{-1}
        Complex fhat = b[s] * inv;
        res = std::max(res, std::abs(fhat - fns[static_cast<size_t>(kpos)].values[s]));
      }
    }
    rep.recovery_residuals.push_back(res);
  }
  return rep;
}

}  // namespace cheese
