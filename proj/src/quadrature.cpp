#include "cheese/quadrature.hpp"

#include <algorithm>
#include <sstream>

namespace cheese {

Complex Integrand::eval(const CVec& z) const {
  switch (kind) {
    case Kind::constant_one:
      return Complex(1.0, 0.0);
    case Kind::conjugate_z1:
      return std::conj(z[0]);
    case Kind::holomorphic_rational: {
      std::span<const Complex> zz(z.data(), g.arity());
      if (g.den_abs(zz) < pole_floor)
        throw Error("pole-proximity", "integrand denominator below its certificate floor");
      return g.eval(zz);
    }
  }
  return {};
}

namespace {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1].
constexpr double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                            0.741531185599394, 0.586087235467691, 0.405845151377397,
                            0.207784955007898, 0.0};
constexpr double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                            0.140653259715525, 0.169004726639267, 0.190350578064785,
                            0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                           0.417959183673469};

struct Gk15 {
  Complex integral;
  double error;
};

template <typename F>
Gk15 gk15(const F& f, double a, double b) {
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  Complex fc = f(mid);
  Complex k = fc * kWgk[7];
  Complex g = fc * kWg[3];
  for (int i = 0; i < 7; ++i) {
    Complex lo = f(mid - half * kXgk[i]);
    Complex hi = f(mid + half * kXgk[i]);
    k += (lo + hi) * kWgk[i];
    if (i % 2 == 1) g += (lo + hi) * kWg[i / 2];
  }
  k *= half;
  g *= half;
  // |K15 - G7| grossly overestimates the K15 error on analytic integrands;
  // taken as-is it is a safely conservative bound
  double err = std::abs(k - g) + 1e-16 * std::abs(k);
  return Gk15{k, err};
}

template <typename F>
IntegralResult adaptive(const F& f, double a, double b, double tol, int max_intervals) {
  struct Piece {
    double a, b;
    Complex v;
    double e;
  };
  std::vector<Piece> pieces;
  Gk15 first = gk15(f, a, b);
  pieces.push_back(Piece{a, b, first.integral, first.error});
  int splits = 0;
  while (splits < max_intervals) {
    // find the worst piece
    size_t worst = 0;
    double total_err = 0.0;
    for (size_t i = 0; i < pieces.size(); ++i) {
      total_err += pieces[i].e;
      if (pieces[i].e > pieces[worst].e) worst = i;
    }
    if (total_err <= tol) break;
    Piece p = pieces[worst];
    if (p.b - p.a < 1e-13) break;  // step floor
    double m = 0.5 * (p.a + p.b);
    Gk15 lo = gk15(f, p.a, m), hi = gk15(f, m, p.b);
    pieces[worst] = Piece{p.a, m, lo.integral, lo.error};
    pieces.push_back(Piece{m, p.b, hi.integral, hi.error});
    ++splits;
  }
  IntegralResult out;
  // fixed summation order for reproducibility
  std::sort(pieces.begin(), pieces.end(),
            [](const Piece& x, const Piece& y) { return x.a < y.a; });
  Complex v = 0.0;
  double e = 0.0;
  for (const auto& p : pieces) {
    v += p.v;
    e += p.e;
  }
  out.value = v;
  out.error = e;
  out.converged = e <= tol * 4.0;
  return out;
}

}  // namespace

namespace {

// pole-distance certificate: the integrand denominator must clear its floor
// at the curve anchors before any quadrature node is trusted
void check_pole_distance(const Curve& curve, const Integrand& f) {
  if (f.kind != Integrand::Kind::holomorphic_rational) return;
  for (const CVec& z : curve.zs) {
    if (f.g.den_abs(std::span<const Complex>(z.data(), f.g.arity())) < f.pole_floor)
      throw Error("pole-proximity", "denominator below floor at a curve anchor");
  }
}

void check_pole_distance(const BoundaryChain& chain, const Integrand& f) {
  if (f.kind != Integrand::Kind::holomorphic_rational) return;
  for (const auto& arc : chain.arcs) {
    for (int i = 0; i <= 64; ++i) {
      CVec z{chain.arc_point(arc, i / 64.0)};
      if (f.g.den_abs(std::span<const Complex>(z.data(), f.g.arity())) < f.pole_floor)
        throw Error("pole-proximity", "denominator below floor along the chain");
    }
  }
}

}  // namespace

IntegralResult integrate_form(const Curve& curve, const TowerShape& shape,
                              const Integrand& f, double tol) {
  check_pole_distance(curve, f);
  auto h = [&](double t) -> Complex {
    Complex vel;
    CVec z = curve.at(shape, t, &vel);
    return f.eval(z) * vel;
  };
  // integrate per anchor interval so the local geometry stays smooth
  IntegralResult total;
  total.value = 0.0;
  int n = static_cast<int>(curve.ts.size());
  double per = tol / std::max(1, n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    if (curve.ts[static_cast<size_t>(i + 1)] - curve.ts[static_cast<size_t>(i)] < 1e-15)
      continue;
    IntegralResult part = adaptive(h, curve.ts[static_cast<size_t>(i)],
                                   curve.ts[static_cast<size_t>(i + 1)], per, 200);
    total.value += part.value;
    total.error += part.error;
    total.converged = total.converged && part.converged;
  }
  return total;
}

IntegralResult integrate_form(const BoundaryChain& chain, const Integrand& f, double tol) {
  check_pole_distance(chain, f);
  IntegralResult total;
  total.value = 0.0;
  double per = tol / std::max<size_t>(1, chain.arcs.size());
  for (const auto& arc : chain.arcs) {
    auto h = [&](double t) -> Complex {
      Complex z = chain.arc_point(arc, t);
      return f.eval(CVec{z}) * chain.arc_velocity(arc, t);
    };
    IntegralResult part = adaptive(h, 0.0, 1.0, per, 400);
    total.value += part.value;
    total.error += part.error;
    total.converged = total.converged && part.converged;
  }
  return total;
}

double total_variation(const Curve& curve, const TowerShape& shape, double tol) {
  auto h = [&](double t) -> Complex {
    Complex vel;
    (void)curve.at(shape, t, &vel);
    return Complex(std::abs(vel), 0.0);
  };
  double total = 0.0;
  int n = static_cast<int>(curve.ts.size());
  double per = tol / std::max(1, n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    if (curve.ts[static_cast<size_t>(i + 1)] - curve.ts[static_cast<size_t>(i)] < 1e-15)
      continue;
    total += adaptive(h, curve.ts[static_cast<size_t>(i)],
                      curve.ts[static_cast<size_t>(i + 1)], per, 200)
                 .value.real();
  }
  return total;
}

double total_variation(const BoundaryChain& chain) { return chain_length(chain); }

SplitIntegral integrate_over_region(const TowerSpec& tower, int N, int k,
                                    const Integrand& f, TowerWork& work, double tol) {
  const std::vector<Curve>& region = region_boundary(tower, N, k, work);
  TowerShape shape = tower.shape(N);
  SplitIntegral out;
  out.ei = out.ej = 0.0;
  double per = tol / std::max<size_t>(1, region.size());
  for (const Curve& c : region) {
    IntegralResult r = integrate_form(c, shape, f, per);
    if (c.eclass == 0)
      out.ei += r.value;
    else
      out.ej += r.value;
    out.error += r.error;
  }
  return out;
}

std::string region_contributions_csv(const TowerSpec& tower, int N, int k,
                                     TowerWork& work, double tol) {
  std::ostringstream os;
  os.precision(17);
  os << "piece,class,variation,moment_re,moment_im\n";
  if (N == 0) {
    BoundaryChain chain = boundary_chain(*tower.base, k);
    for (size_t i = 0; i < chain.arcs.size(); ++i) {
      BoundaryChain one;
      one.truncation_k = k;
      one.circles = chain.circles;
      one.arcs = {chain.arcs[i]};
      Complex m = moment_zbar_closed_form(one);
      os << i << ",EI," << chain_length(one) << ',' << m.real() << ',' << m.imag() << '\n';
    }
    return os.str();
  }
  const std::vector<Curve>& region = region_boundary(tower, N, k, work);
  TowerShape shape = tower.shape(N);
  double per = tol / std::max<size_t>(1, region.size());
  for (size_t i = 0; i < region.size(); ++i) {
    const Curve& c = region[i];
    IntegralResult m = integrate_form(c, shape, Integrand::zbar(), per);
    double v = total_variation(c, shape, per);
    const char* cls = c.eclass == 0 ? "EI" : (c.eclass == 1 ? "EJ_bottom" : "EJ_top");
    os << i << ',' << cls << ',' << v << ',' << m.value.real() << ',' << m.value.imag()
       << '\n';
  }
  return os.str();
}

MeasureReport boundary_measure(const TowerSpec& tower, int N, int k, MeasureMethod method,
                               TowerWork& work, double tol) {
  MeasureReport rep;
  rep.stage = N;
  rep.truncation_k = k;
  rep.method = method;
  if (N == 0) {
    BoundaryChain chain = boundary_chain(*tower.base, k);
    IntegralResult m = integrate_form(chain, Integrand::zbar(), tol);
    rep.total_variation = chain_length(chain);
    rep.moment_zbar = m.value;
    rep.ei_variation = rep.total_variation;
    rep.ei_moment = m.value;
    rep.ej_variation = 0.0;
    rep.ej_moment = 0.0;
    rep.quadrature_error = m.error;
    return rep;
  }
  const ExpStage& st = tower.exp_stages.at(static_cast<size_t>(N - 1));
  if (method == MeasureMethod::recursive) {
    MeasureReport prev = boundary_measure(tower, N - 1, k, MeasureMethod::recursive, work, tol);
    auto it = st.cut_length.find(k);
    double len;
    if (it != st.cut_length.end()) {
      len = it->second;
    } else {
      auto key = std::make_pair(N, k);
      if (work.cuts.find(key) == work.cuts.end())
        work.cuts[key] =
            trace_cut_curves(st.f, st.c, tower, N - 1, k, st.cut_certs.at(k), work);
      len = cut_z1_length(work.cuts[key], tower.shape(N));
    }
    rep.ei_variation = st.m * prev.total_variation;
    rep.ei_moment = static_cast<double>(st.m) * prev.moment_zbar;
    rep.ej_variation = 2.0 * len;
    rep.ej_moment = 0.0;
    rep.total_variation = rep.ei_variation + rep.ej_variation;
    rep.moment_zbar = rep.ei_moment;
    rep.quadrature_error = st.m * prev.quadrature_error + 1e-9;
    return rep;
  }
  // direct: integrate conj(z1) dz1 and |dz1| over every boundary piece
  const std::vector<Curve>& region = region_boundary(tower, N, k, work);
  TowerShape shape = tower.shape(N);
  double per = tol / std::max<size_t>(1, region.size());
  for (const Curve& c : region) {
    IntegralResult m = integrate_form(c, shape, Integrand::zbar(), per);
    double v = total_variation(c, shape, per);
    if (c.eclass == 0) {
      rep.ei_moment += m.value;
      rep.ei_variation += v;
    } else {
      rep.ej_moment += m.value;
      rep.ej_variation += v;
    }
    rep.quadrature_error += m.error;
  }
  rep.total_variation = rep.ei_variation + rep.ej_variation;
  rep.moment_zbar = rep.ei_moment + rep.ej_moment;
  return rep;
}

}  // namespace cheese
