#include "cheese/lift.hpp"

#include <algorithm>
#include <cassert>

namespace cheese {

namespace {
// internal continuation guards; anchor construction keeps jumps well below these
constexpr double kEvalMaxJump = 0.9;     // < pi so a principal-log step cannot wrap
constexpr double kEvalZeroFloor = 1e-13;
constexpr double kParamFloor = 1e-12;
}  // namespace

double stage_residual(const TowerShape& shape, const CVec& z, int stage) {
  const StageDef& sd = shape.stages.at(static_cast<size_t>(stage - 1));
  Complex val = sd.f.eval(std::span<const Complex>(z.data(), static_cast<size_t>(stage)));
  Complex lhs = (shape.kind == TowerKind::exponential)
                    ? std::exp(z[static_cast<size_t>(stage)])
                    : z[static_cast<size_t>(stage)] * z[static_cast<size_t>(stage)];
  return std::abs(lhs - val) / (1.0 + std::abs(val));
}

LiftedPoint make_lifted_point(const TowerShape& shape, CVec z) {
  LiftedPoint p;
  p.z = std::move(z);
  for (int j = 1; j < static_cast<int>(p.z.size()); ++j)
    p.residuals.push_back(stage_residual(shape, p.z, j));
  return p;
}

ContinueStatus continue_point(const TowerShape& shape, CVec& z, Complex new_z1,
                              double max_jump, double zero_floor) {
  ContinueStatus st;
  CVec w = z;
  w[0] = new_z1;
  for (size_t j = 1; j < z.size(); ++j) {
    const StageDef& sd = shape.stages[j - 1];
    Complex val = sd.f.eval(std::span<const Complex>(w.data(), j));
    if (std::abs(val) < zero_floor) {
      st.ok = false;
      st.zero_hit = true;
      st.bad_stage = static_cast<int>(j);
      return st;
    }
    Complex znew;
    if (shape.kind == TowerKind::exponential) {
      znew = z[j] + std::log(val * std::exp(-z[j]));
    } else {
      Complex s = std::sqrt(val);
      znew = (std::abs(s - z[j]) <= std::abs(-s - z[j])) ? s : -s;
    }
    double jump = std::abs(znew - z[j]);
    st.max_jump = std::max(st.max_jump, jump);
    if (jump > max_jump) {
      st.ok = false;
      st.bad_stage = static_cast<int>(j);
      return st;
    }
    w[j] = znew;
  }
  z = std::move(w);
  return st;
}

CVec surface_jet(const TowerShape& shape, const CVec& z) {
  CVec jet(z.size());
  jet[0] = 1.0;
  for (size_t j = 1; j < z.size(); ++j) {
    Complex val;
    CVec grad;
    shape.stages[j - 1].f.eval_grad(std::span<const Complex>(z.data(), j), val, grad);
    Complex df = 0.0;
    for (size_t i = 0; i < j; ++i) df += grad[i] * jet[i];
    if (shape.kind == TowerKind::exponential) {
      if (std::abs(val) < kEvalZeroFloor)
        throw Error("singularity-proximity", "stage value vanished in jet");
      jet[j] = df / val;
    } else {
      if (std::abs(z[j]) < kEvalZeroFloor)
        throw Error("singularity-proximity", "branch point reached in jet");
      jet[j] = df / (2.0 * z[j]);
    }
  }
  return jet;
}

void surface_eval_grad(const TowerShape& shape, const RationalFunction& g, const CVec& z,
                       Complex& value, Complex& dz1) {
  CVec jet = surface_jet(shape, z);
  CVec grad;
  g.eval_grad(std::span<const Complex>(z.data(), g.arity()), value, grad);
  dz1 = 0.0;
  for (size_t i = 0; i < g.arity(); ++i) dz1 += grad[i] * jet[i];
}

std::vector<CVec> fiber(const TowerShape& shape, Complex p, int N, double zero_tol) {
  if (N > shape.levels()) throw Error("invalid-stage", "fiber beyond built tower");
  std::vector<CVec> pts{CVec{p}};
  for (int j = 1; j <= N; ++j) {
    const StageDef& sd = shape.stages[static_cast<size_t>(j - 1)];
    std::vector<CVec> next;
    for (const CVec& z : pts) {
      Complex val = sd.f.eval(std::span<const Complex>(z.data(), static_cast<size_t>(j)));
      if (std::abs(val) < zero_tol) {
        if (shape.kind == TowerKind::exponential)
          throw Error("zero-of-f", "stage " + std::to_string(j) +
                                       " value vanished at a fiber point");
        CVec e = z;
        e.push_back(Complex(0.0, 0.0));
        next.push_back(std::move(e));
        continue;
      }
      if (shape.kind == TowerKind::exponential) {
        double A = std::arg(val);
        double L = std::log(std::abs(val));
        double lo = (sd.win_lo - A) / kTwoPi;
        double hi = (sd.win_hi - A) / kTwoPi;
        double eps = 1e-12 * (1.0 + std::abs(lo) + std::abs(hi));
        long long j0 = static_cast<long long>(std::ceil(lo - eps));
        long long j1 = static_cast<long long>(std::floor(hi + eps));
        for (long long jj = j0; jj <= j1; ++jj) {
          CVec e = z;
          e.push_back(Complex(L, A + kTwoPi * static_cast<double>(jj)));
          next.push_back(std::move(e));
        }
      } else {
        Complex s = std::sqrt(val);
        CVec a = z, b = z;
        a.push_back(s);
        b.push_back(-s);
        next.push_back(std::move(a));
        next.push_back(std::move(b));
      }
    }
    pts = std::move(next);
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Curve evaluation

namespace {

Complex arc_z1(const Curve& c, double t) {
  double th = c.th0 + t * (c.th1 - c.th0);
  return c.center + c.radius * Complex(std::cos(th), std::sin(th));
}

Complex arc_dz1(const Curve& c, double t) {
  double th = c.th0 + t * (c.th1 - c.th0);
  return Complex(0.0, 1.0) * c.radius * Complex(std::cos(th), std::sin(th)) *
         (c.th1 - c.th0);
}

size_t nearest_anchor(const Curve& c, double t) {
  auto it = std::lower_bound(c.ts.begin(), c.ts.end(), t);
  if (it == c.ts.begin()) return 0;
  if (it == c.ts.end()) return c.ts.size() - 1;
  size_t hi = static_cast<size_t>(it - c.ts.begin());
  size_t lo = hi - 1;
  return (t - c.ts[lo] <= c.ts[hi] - t) ? lo : hi;
}

// walk along the arc from a valid (t_cur, z) to parameter t
void arc_walk(const Curve& c, const TowerShape& shape, double t_cur, double t, CVec& z) {
  int guard = 0;
  while (std::abs(t - t_cur) > 0.0) {
    double dt = t - t_cur;
    while (true) {
      CVec trial = z;
      ContinueStatus st =
          continue_point(shape, trial, arc_z1(c, t_cur + dt), kEvalMaxJump, kEvalZeroFloor);
      if (st.ok) {
        z = std::move(trial);
        t_cur += dt;
        break;
      }
      if (st.zero_hit)
        throw Error("singularity-proximity",
                    "stage " + std::to_string(st.bad_stage) + " vanished on the arc");
      dt *= 0.5;
      if (std::abs(dt) < kParamFloor)
        throw Error("step-collapse", "arc continuation stalled at t=" + std::to_string(t_cur));
    }
    if (++guard > 100000) throw Error("step-collapse", "arc walk did not terminate");
  }
}

// Newton march to Re z[cut_slot] == u, Im pinned; z starts at a nearby valid point
void cut_march(const Curve& c, const TowerShape& shape, double u_target, CVec& z) {
  const size_t slot = static_cast<size_t>(c.cut_slot);
  const Complex target(u_target, c.pin_im);
  for (int iter = 0; iter < 200; ++iter) {
    Complex w = z[slot];
    if (std::abs(w - target) < 1e-13 * (1.0 + std::abs(target))) return;
    CVec jet = surface_jet(shape, z);
    Complex wp = jet[slot];
    if (std::abs(wp) < 1e-12)
      throw Error("tracing-divergence", "level curve became singular (|dw/dz1| ~ 0)");
    Complex step = (target - w) / wp;
    double cap = 0.35 / std::max(1.0, std::abs(wp));
    if (std::abs(step) > cap) step *= cap / std::abs(step);
    while (true) {
      CVec trial = z;
      ContinueStatus st =
          continue_point(shape, trial, z[0] + step, kEvalMaxJump, kEvalZeroFloor);
      if (st.ok) {
        z = std::move(trial);
        break;
      }
      if (st.zero_hit)
        throw Error("singularity-proximity", "stage value vanished during cut march");
      step *= 0.5;
      if (std::abs(step) < 1e-15)
        throw Error("step-collapse", "cut march stalled");
    }
  }
  throw Error("tracing-divergence", "cut march failed to converge");
}

Complex polyline_z1(const Curve& c, double t, Complex* slope) {
  auto it = std::upper_bound(c.ts.begin(), c.ts.end(), t);
  size_t hi = std::clamp<size_t>(static_cast<size_t>(it - c.ts.begin()), 1, c.ts.size() - 1);
  size_t lo = hi - 1;
  double span = c.ts[hi] - c.ts[lo];
  double a = span > 0 ? (t - c.ts[lo]) / span : 0.0;
  if (slope) *slope = span > 0 ? (c.zs[hi][0] - c.zs[lo][0]) / span : Complex(0.0, 0.0);
  return c.zs[lo][0] + a * (c.zs[hi][0] - c.zs[lo][0]);
}

}  // namespace

CVec Curve::at(const TowerShape& shape, double t, Complex* dz1dt) const {
  if (base == Base::arc) {
    if (nslots == 1) {
      if (dz1dt) *dz1dt = arc_dz1(*this, t);
      return CVec{arc_z1(*this, t)};
    }
    size_t ai = nearest_anchor(*this, t);
    CVec z = zs[ai];
    arc_walk(*this, shape, ts[ai], t, z);
    if (dz1dt) *dz1dt = arc_dz1(*this, t);
    return z;
  }
  if (base == Base::polyline) {
    Complex slope;
    Complex target = polyline_z1(*this, t, &slope);
    if (dz1dt) *dz1dt = slope;
    if (nslots == 1) return CVec{target};
    size_t ai = nearest_anchor(*this, t);
    CVec z = zs[ai];
    int guard = 0;
    while (std::abs(target - z[0]) > 0.0) {
      Complex step = target - z[0];
      while (true) {
        CVec trial = z;
        ContinueStatus st =
            continue_point(shape, trial, z[0] + step, kEvalMaxJump, kEvalZeroFloor);
        if (st.ok) {
          z = std::move(trial);
          break;
        }
        if (st.zero_hit)
          throw Error("singularity-proximity", "stage value vanished on segment");
        step *= 0.5;
        if (std::abs(step) < 1e-16) throw Error("step-collapse", "segment walk stalled");
      }
      if (++guard > 100000) throw Error("step-collapse", "segment walk did not terminate");
    }
    return z;
  }
  // cut curve
  double u = u0 + t * (u1 - u0);
  size_t ai = nearest_anchor(*this, t);
  CVec z = zs[ai];
  // march in controlled u increments from the anchor
  double u_cur = z[static_cast<size_t>(cut_slot)].real();
  int guard = 0;
  while (std::abs(u - u_cur) > 0.3) {
    u_cur += std::clamp(u - u_cur, -0.3, 0.3);
    cut_march(*this, shape, u_cur, z);
    if (++guard > 10000) throw Error("step-collapse", "cut evaluation stalled");
  }
  cut_march(*this, shape, u, z);
  if (dz1dt) {
    CVec jet = surface_jet(shape, z);
    *dz1dt = (u1 - u0) / jet[static_cast<size_t>(cut_slot)];
  }
  return z;
}

double Curve::anchor_z1_length() const {
  double len = 0.0;
  for (size_t i = 1; i < zs.size(); ++i) len += std::abs(zs[i][0] - zs[i - 1][0]);
  return len;
}

Curve curve_from_arc(const BoundaryChain& chain, const ArcSegment& arc) {
  Curve c;
  c.base = Curve::Base::arc;
  const Circle& circ = chain.circles.at(static_cast<size_t>(arc.circle_index));
  c.center = circ.center;
  c.radius = circ.radius;
  c.th0 = arc.start_angle;
  c.th1 = arc.end_angle;
  c.closed = arc.full_circle();
  c.nslots = 1;
  c.ts = {0.0, 1.0};
  c.zs = {CVec{arc_z1(c, 0.0)}, CVec{arc_z1(c, 1.0)}};
  return c;
}

void densify_anchors(Curve& c, const TowerShape& shape, double max_jump,
                     double zero_floor) {
  (void)zero_floor;
  std::vector<double> nts{c.ts.front()};
  std::vector<CVec> nzs{c.zs.front()};
  for (size_t i = 0; i + 1 < c.ts.size(); ++i) {
    // bisect until each hop is tame
    std::vector<std::pair<double, CVec>> stack{{c.ts[i + 1], c.zs[i + 1]}};
    double t_cur = c.ts[i];
    CVec z_cur = c.zs[i];
    int guard = 0;
    while (!stack.empty()) {
      auto [t_next, z_next] = stack.back();
      double jump = 0.0;
      for (int s = 0; s < c.nslots; ++s)
        jump = std::max(jump, std::abs(z_next[static_cast<size_t>(s)] -
                                       z_cur[static_cast<size_t>(s)]));
      if (jump <= max_jump || t_next - t_cur < 64 * kParamFloor) {
        stack.pop_back();
        t_cur = t_next;
        z_cur = z_next;
        nts.push_back(t_cur);
        nzs.push_back(z_cur);
      } else {
        double tm = 0.5 * (t_cur + t_next);
        CVec zm = z_cur;
        if (c.base == Curve::Base::arc)
          arc_walk(c, shape, t_cur, tm, zm);
        else
          zm = c.at(shape, tm);  // cut: march from nearest anchor
        stack.emplace_back(tm, std::move(zm));
      }
      if (++guard > 200000) throw Error("step-collapse", "anchor densification stalled");
    }
  }
  c.ts = std::move(nts);
  c.zs = std::move(nzs);
}

LiftedPath lift_path(const Curve& base, const TowerShape& shape, const CVec& branch_seed,
                     double max_step_arg, double lift_tol, double zero_floor) {
  if (static_cast<int>(branch_seed.size()) != shape.levels() + 1)
    throw Error("invalid-seed", "branch seed must carry one slot per stage plus base");
  Curve out;
  out.base = base.base;
  out.center = base.center;
  out.radius = base.radius;
  out.th0 = base.th0;
  out.th1 = base.th1;
  out.cut_slot = base.cut_slot;
  out.pin_im = base.pin_im;
  out.u0 = base.u0;
  out.u1 = base.u1;
  out.closed = base.closed;
  out.nslots = shape.levels() + 1;

  auto base_z1 = [&](double t) -> Complex {
    if (base.base == Curve::Base::arc) return arc_z1(base, t);
    if (base.base == Curve::Base::polyline) return polyline_z1(base, t, nullptr);
    throw Error("invalid-base", "lift_path expects an arc or traced base path");
  };

  CVec z = branch_seed;
  if (std::abs(z[0] - base_z1(0.0)) > 1e-9)
    throw Error("invalid-seed", "branch seed does not sit over the path start");
  for (int j = 1; j <= shape.levels(); ++j)
    if (stage_residual(shape, z, j) > lift_tol)
      throw Error("invalid-seed", "branch seed violates stage " + std::to_string(j));

  std::vector<double> ts{0.0};
  std::vector<CVec> zs{z};
  double t = 0.0, dt = 1.0 / 64.0;
  while (t < 1.0) {
    double step = std::min(dt, 1.0 - t);
    while (true) {
      CVec trial = z;
      ContinueStatus st =
          continue_point(shape, trial, base_z1(t + step), max_step_arg, zero_floor);
      if (st.ok) {
        z = std::move(trial);
        t += step;
        ts.push_back(t);
        zs.push_back(z);
        if (st.max_jump < 0.25 * max_step_arg) dt = std::min(dt * 1.7, 0.125);
        break;
      }
      if (st.zero_hit)
        throw Error("singularity-proximity",
                    "path passes too close to a zero/pole of stage " +
                        std::to_string(st.bad_stage) + " near t=" + std::to_string(t));
      step *= 0.5;
      dt = step;
      if (step < kParamFloor)
        throw Error("step-collapse",
                    "adaptive step collapsed at t=" + std::to_string(t) + ", z1=" +
                        std::to_string(z[0].real()) + "+" + std::to_string(z[0].imag()) + "i");
    }
  }
  out.ts = std::move(ts);
  out.zs = std::move(zs);
  LiftedPath lp;
  lp.curve = std::move(out);
  lp.max_step_arg = max_step_arg;
  return lp;
}

double RegionSpec::margin(const CVec& z) const {
  double m = cheese ? truncation_margin(*cheese, k, z[0]) : 1.0 - std::abs(z[0]);
  if (shape && shape->kind == TowerKind::exponential) {
    for (int j = 1; j <= stage && j < static_cast<int>(z.size()); ++j) {
      const StageDef& sd = shape->stages[static_cast<size_t>(j - 1)];
      double im = z[static_cast<size_t>(j)].imag();
      m = std::min(m, std::min(im - sd.win_lo, sd.win_hi - im));
    }
  }
  return m;
}

WWalk continue_log_along(const Curve& c, const TowerShape& shape,
                         const RationalFunction& f, double max_dw, double zero_floor) {
  WWalk walk;
  CVec z = c.at(shape, 0.0);
  Complex val = f.eval(std::span<const Complex>(z.data(), f.arity()));
  if (std::abs(val) < zero_floor)
    throw Error("zero-on-region", "|f| below floor at curve start");
  Complex w = std::log(val);
  walk.ts.push_back(0.0);
  walk.ws.push_back(w);
  double t = 0.0, dt = 1.0 / 32.0;
  int guard = 0;
  while (t < 1.0) {
    double step = std::min(dt, 1.0 - t);
    while (true) {
      CVec z2 = c.at(shape, t + step);
      Complex v2 = f.eval(std::span<const Complex>(z2.data(), f.arity()));
      if (std::abs(v2) < zero_floor)
        throw Error("zero-on-region", "|f| below floor along curve");
      Complex dw = std::log(v2 * std::exp(-w));
      if (std::abs(dw) <= max_dw) {
        w += dw;
        t += step;
        walk.ts.push_back(t);
        walk.ws.push_back(w);
        if (std::abs(dw) < 0.25 * max_dw) dt = std::min(dt * 1.7, 0.25);
        break;
      }
      step *= 0.5;
      dt = step;
      if (step < kParamFloor)
        throw Error("step-collapse", "log continuation stalled along curve");
    }
    if (++guard > 500000) throw Error("step-collapse", "log walk did not terminate");
  }
  return walk;
}

std::optional<CrossingRefinement> refine_crossing(const Curve& c, const TowerShape& shape,
                                                  const RationalFunction& f, double t_lo,
                                                  double t_hi, Complex w_lo, double target,
                                                  double zero_floor) {
  // w(t) = w_lo + Log(f(z(t)) e^{-w_lo}) is the exact continuation while the
  // increment stays under pi; the walk guarantees that inside one node gap.
  auto w_at = [&](double t) -> Complex {
    CVec z = c.at(shape, t);
    Complex v = f.eval(std::span<const Complex>(z.data(), f.arity()));
    if (std::abs(v) < zero_floor) throw Error("zero-on-region", "|f| vanished in refinement");
    return w_lo + std::log(v * std::exp(-w_lo));
  };
  double a = t_lo, b = t_hi;
  double ga = w_at(a).imag() - target;
  double gb = w_at(b).imag() - target;
  if (ga == 0.0) ga = -1e-300 * (gb > 0 ? 1 : -1);
  if (ga * gb > 0.0) return std::nullopt;
  double t = 0.5 * (a + b);
  for (int it = 0; it < 80; ++it) {
    Complex w;
    CVec z;
    // Newton with bisection fallback
    z = c.at(shape, t);
    Complex v = f.eval(std::span<const Complex>(z.data(), f.arity()));
    if (std::abs(v) < zero_floor) throw Error("zero-on-region", "|f| vanished in refinement");
    w = w_lo + std::log(v * std::exp(-w_lo));
    double g = w.imag() - target;
    if (g == 0.0 || b - a < 1e-15) break;
    if (ga * g < 0)
      b = t;
    else {
      a = t;
      ga = g;
    }
    Complex fval, fdz1;
    surface_eval_grad(shape, f, z, fval, fdz1);
    Complex dz1dt;
    (void)c.at(shape, t, &dz1dt);
    double gp = ((fdz1 / fval) * dz1dt).imag();
    double tn = (std::abs(gp) > 1e-30) ? t - g / gp : 0.5 * (a + b);
    if (!(tn > a && tn < b)) tn = 0.5 * (a + b);
    if (std::abs(tn - t) < 1e-15 && std::abs(g) < 1e-12) {
      t = tn;
      break;
    }
    t = tn;
  }
  CVec z = c.at(shape, t);
  Complex fval, fdz1, dz1dt;
  surface_eval_grad(shape, f, z, fval, fdz1);
  (void)c.at(shape, t, &dz1dt);
  double speed = std::abs(dz1dt);
  if (speed < 1e-30) return std::nullopt;
  CrossingRefinement out;
  out.t = t;
  out.margin = std::abs(((fdz1 / fval) * dz1dt).imag()) / speed;
  return out;
}

}  // namespace cheese
