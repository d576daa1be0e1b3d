#include "cheese/tower.hpp"

#include <algorithm>
#include <cassert>
#include <set>

namespace cheese {

namespace {
constexpr double kWalkMaxDw = 0.35;
constexpr double kZeroFloorHard = 1e-13;
}  // namespace

TowerShape TowerSpec::shape(int upto) const {
  TowerShape sh;
  sh.kind = kind;
  int n = levels();
  if (upto < 0) upto = n;
  upto = std::min(upto, n);
  if (kind == TowerKind::exponential) {
    for (int j = 0; j < upto; ++j) {
      const ExpStage& st = exp_stages[static_cast<size_t>(j)];
      sh.stages.push_back(StageDef{st.f, st.c, st.c + kTwoPi * st.m});
    }
  } else {
    for (int j = 0; j < upto; ++j) {
      const SqrtStage& st = sqrt_stages[static_cast<size_t>(j)];
      RationalFunction f(st.q.num() - st.q.den() * st.alpha, st.q.den());
      sh.stages.push_back(StageDef{std::move(f), 0.0, 0.0});
    }
  }
  return sh;
}

std::vector<int> TowerSpec::sheet_counts() const {
  std::vector<int> ms;
  for (const auto& st : exp_stages) ms.push_back(st.m);
  return ms;
}

double TowerSpec::sheet_product(int N) const {
  double p = 1.0;
  for (int j = 0; j < N && j < static_cast<int>(exp_stages.size()); ++j)
    p *= exp_stages[static_cast<size_t>(j)].m;
  return p;
}

RationalFunction next_function(const TowerSpec& tower, int N) {
  ScheduleIndex idx = schedule(N);
  int level;
  int j;
  if (idx.r == idx.s) {
    level = 0;
    j = static_cast<int>(idx.r) + 1;
  } else {
    level = static_cast<int>(sigma(ScheduleIndex{idx.s, idx.s}));
    j = static_cast<int>(idx.r - idx.s);
  }
  auto it = tower.dictionaries.find(level);
  if (it == tower.dictionaries.end() || j > static_cast<int>(it->second.size()))
    throw Error("missing-dictionary", "stage " + std::to_string(N) + " needs g_{" +
                                          std::to_string(level) + "," + std::to_string(j) +
                                          "}");
  return it->second[static_cast<size_t>(j - 1)].g.promoted(static_cast<unsigned>(N));
}

int choose_sheet_count(double /*prev_norm*/, double prev_delta, double cut_cost_C,
                       double target_delta) {
  if (!(prev_delta > 0.0)) throw Error("invalid-delta", "previous margin must be positive");
  if (cut_cost_C < 0.0 || target_delta <= 0.0)
    throw Error("invalid-delta", "cut cost must be >= 0 and target > 0");
  double m = std::ceil((cut_cost_C + target_delta) / prev_delta);
  return std::max(1, static_cast<int>(m));
}

// ---------------------------------------------------------------------------
// region boundary

namespace {

// w(t) on a walked curve, recovered from the nearest walk node.
Complex w_from_walk(const Curve& c, const TowerShape& sh, const RationalFunction& f,
                    const WWalk& walk, double t, const CVec& z_at_t) {
  auto it = std::lower_bound(walk.ts.begin(), walk.ts.end(), t);
  size_t hi = std::min<size_t>(static_cast<size_t>(it - walk.ts.begin()), walk.ts.size() - 1);
  size_t lo = hi > 0 ? hi - 1 : 0;
  size_t near = (t - walk.ts[lo] <= walk.ts[hi] - t) ? lo : hi;
  (void)c;
  (void)sh;
  Complex v = f.eval(std::span<const Complex>(z_at_t.data(), f.arity()));
  return walk.ws[near] + std::log(v * std::exp(-walk.ws[near]));
}

Curve subrange_curve(const Curve& parent, double ta, double tb) {
  Curve c;
  c.base = parent.base;
  c.center = parent.center;
  c.radius = parent.radius;
  c.cut_slot = parent.cut_slot;
  c.pin_im = parent.pin_im;
  if (parent.base == Curve::Base::arc) {
    c.th0 = parent.th0 + ta * (parent.th1 - parent.th0);
    c.th1 = parent.th0 + tb * (parent.th1 - parent.th0);
  } else {
    c.u0 = parent.u0 + ta * (parent.u1 - parent.u0);
    c.u1 = parent.u0 + tb * (parent.u1 - parent.u0);
  }
  c.closed = false;
  return c;
}

}  // namespace

const std::vector<Curve>& region_boundary(const TowerSpec& tower, int N, int k,
                                          TowerWork& work) {
  if (tower.kind != TowerKind::exponential)
    throw Error("invalid-stage", "region boundaries are built for exponential towers");
  auto key = std::make_pair(N, k);
  auto found = work.regions.find(key);
  if (found != work.regions.end()) return found->second;

  std::vector<Curve> curves;
  if (N == 0) {
    BoundaryChain chain = boundary_chain(*tower.base, k);
    for (const auto& arc : chain.arcs) curves.push_back(curve_from_arc(chain, arc));
  } else {
    const std::vector<Curve>& parent = region_boundary(tower, N - 1, k, work);
    const ExpStage& st = tower.exp_stages[static_cast<size_t>(N - 1)];
    TowerShape sh = tower.shape(N);
    auto cit = st.cut_certs.find(k);
    if (cit == st.cut_certs.end())
      throw Error("missing-certificate",
                  "stage " + std::to_string(N) + " has no cut certificate for k=" +
                      std::to_string(k));
    const CutLevelCert& cert = cit->second;

    // E_I: split each parent curve at its crossings and lift to the m sheets
    for (size_t cid = 0; cid < parent.size(); ++cid) {
      const Curve& gam = parent[cid];
      std::vector<double> splits{0.0, 1.0};
      for (const auto& x : cert.crossings)
        if (x.curve_id == static_cast<int>(cid)) splits.push_back(x.t);
      std::sort(splits.begin(), splits.end());
      WWalk walk = continue_log_along(gam, sh, st.f, kWalkMaxDw, kZeroFloorHard);
      bool any_cross = splits.size() > 2;

      for (size_t si = 0; si + 1 < splits.size(); ++si) {
        double ta = splits[si], tb = splits[si + 1];
        if (tb - ta < 1e-12) continue;
        // anchor grid: parent anchors and walk nodes inside [ta, tb]
        std::vector<double> grid{ta, tb};
        for (double t : gam.ts)
          if (t > ta + 1e-13 && t < tb - 1e-13) grid.push_back(t);
        for (double t : walk.ts)
          if (t > ta + 1e-13 && t < tb - 1e-13) grid.push_back(t);
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end(),
                               [](double a, double b) { return std::abs(a - b) < 1e-13; }),
                   grid.end());

        std::vector<CVec> coords;
        std::vector<Complex> ws;
        coords.reserve(grid.size());
        for (double t : grid) {
          CVec z = gam.at(sh, t);
          ws.push_back(w_from_walk(gam, sh, st.f, walk, t, z));
          coords.push_back(std::move(z));
        }
        double t_mid = 0.5 * (ta + tb);
        CVec z_mid = gam.at(sh, t_mid);
        Complex w_mid = w_from_walk(gam, sh, st.f, walk, t_mid, z_mid);
        long long s0 =
            static_cast<long long>(std::ceil((st.c - w_mid.imag()) / kTwoPi - 1e-12));

        for (int sheet = 0; sheet < st.m; ++sheet) {
          double off = kTwoPi * static_cast<double>(s0 + sheet);
          Curve child = subrange_curve(gam, ta, tb);
          child.nslots = N + 1;
          child.eclass = 0;
          child.closed = gam.closed && !any_cross &&
                         std::abs(walk.ws.back() - walk.ws.front()) < 1e-9;
          child.ts.reserve(grid.size());
          child.zs.reserve(grid.size());
          for (size_t gi = 0; gi < grid.size(); ++gi) {
            CVec z = coords[gi];
            Complex w = ws[gi] + Complex(0.0, off);
            // snap window-edge endpoints so the E_I/E_J mosaic closes tightly
            double wl = st.c, wh = st.c + kTwoPi * st.m;
            if (std::abs(w.imag() - wl) < 1e-9) w = Complex(w.real(), wl);
            if (std::abs(w.imag() - wh) < 1e-9) w = Complex(w.real(), wh);
            z.push_back(w);
            child.ts.push_back((grid[gi] - ta) / (tb - ta));
            child.zs.push_back(std::move(z));
          }
          curves.push_back(std::move(child));
        }
      }
    }

    // E_J: two window copies of each traced cut component
    auto cut_key = std::make_pair(N, k);
    if (work.cuts.find(cut_key) == work.cuts.end())
      work.cuts[cut_key] = trace_cut_curves(st.f, st.c, tower, N - 1, k, cert, work);
    const std::vector<Curve>& cuts = work.cuts[cut_key];
    for (const Curve& chi : cuts) {
      size_t slot = static_cast<size_t>(chi.cut_slot);
      Curve bottom = chi;
      bottom.pin_im = st.c;
      bottom.eclass = 1;
      for (auto& z : bottom.zs) z[slot] = Complex(z[slot].real(), st.c);
      curves.push_back(std::move(bottom));

      Curve top = chi;
      top.pin_im = st.c + kTwoPi * st.m;
      top.eclass = 2;
      top.u0 = chi.u1;
      top.u1 = chi.u0;
      std::reverse(top.ts.begin(), top.ts.end());
      for (auto& t : top.ts) t = 1.0 - t;
      std::reverse(top.zs.begin(), top.zs.end());
      for (auto& z : top.zs) z[slot] = Complex(z[slot].real(), top.pin_im);
      curves.push_back(std::move(top));
    }
  }
  auto [it, inserted] = work.regions.emplace(key, std::move(curves));
  (void)inserted;
  return it->second;
}

// ---------------------------------------------------------------------------
// cut level certification

namespace {

// Refine a log walk for crossing scans: small phase steps plus a midpoint
// monotonicity probe so a dip through the level between nodes gets its own
// node instead of hiding inside one gap.
WWalk refine_walk_for_scan(const Curve& gam, const TowerShape& sh,
                           const RationalFunction& f, const WWalk& walk,
                           double max_dphi) {
  WWalk out;
  auto w_corrected = [&](double t, Complex w_ref) -> Complex {
    CVec z = gam.at(sh, t);
    Complex v = f.eval(std::span<const Complex>(z.data(), f.arity()));
    return w_ref + std::log(v * std::exp(-w_ref));
  };
  struct Seg {
    double t0, t1;
    Complex w0, w1;
    int depth;
  };
  out.ts.push_back(walk.ts.front());
  out.ws.push_back(walk.ws.front());
  for (size_t i = 0; i + 1 < walk.ts.size(); ++i) {
    std::vector<Seg> stack{{walk.ts[i], walk.ts[i + 1], walk.ws[i], walk.ws[i + 1], 0}};
    while (!stack.empty()) {
      Seg s = stack.back();
      stack.pop_back();
      double dphi = std::abs(s.w1.imag() - s.w0.imag());
      bool split = dphi > max_dphi;
      Complex wm;
      bool have_mid = false;
      if (!split && s.depth < 10 && s.t1 - s.t0 > 1e-11) {
        wm = w_corrected(0.5 * (s.t0 + s.t1), s.w0);
        have_mid = true;
        double lo = std::min(s.w0.imag(), s.w1.imag());
        double hi = std::max(s.w0.imag(), s.w1.imag());
        if (wm.imag() < lo - 1e-12 || wm.imag() > hi + 1e-12) split = true;
      }
      if (split && s.depth < 14 && s.t1 - s.t0 > 1e-11) {
        if (!have_mid) wm = w_corrected(0.5 * (s.t0 + s.t1), s.w0);
        double tm = 0.5 * (s.t0 + s.t1);
        stack.push_back(Seg{tm, s.t1, wm, s.w1, s.depth + 1});
        stack.push_back(Seg{s.t0, tm, s.w0, wm, s.depth + 1});
      } else {
        out.ts.push_back(s.t1);
        out.ws.push_back(s.w1);
      }
    }
  }
  return out;
}

}  // namespace

std::optional<CutLevelCert> certify_cut_level(const RationalFunction& f,
                                              const TowerSpec& tower, int region_stage,
                                              int k, double c, TowerWork& work) {
  const std::vector<Curve>& region = region_boundary(tower, region_stage, k, work);
  TowerShape sh = tower.shape(region_stage);
  sh.stages.push_back(StageDef{f.promoted(static_cast<unsigned>(region_stage + 1)), 0.0, 0.0});

  CutLevelCert cert;
  cert.c = c;
  cert.min_margin = 1e300;
  cert.min_endpoint_gap = 1e300;
  const double margin_tol = tower.tol.transversality;
  const double tang_gap = 0.1 * margin_tol;

  for (size_t cid = 0; cid < region.size(); ++cid) {
    const Curve& gam = region[cid];
    WWalk coarse = continue_log_along(gam, sh, f, kWalkMaxDw, tower.tol.zero_free);
    WWalk walk = refine_walk_for_scan(gam, sh, f, coarse, 0.1);
    if (!gam.closed) {
      double g0 = mod_dist(walk.ws.front().imag(), c);
      double g1 = mod_dist(walk.ws.back().imag(), c);
      cert.min_endpoint_gap = std::min({cert.min_endpoint_gap, g0, g1});
      if (cert.min_endpoint_gap < margin_tol) return std::nullopt;
    }
    // near-tangency: sampled local extrema of Im w must stay clear of the level
    for (size_t i = 1; i + 1 < walk.ws.size(); ++i) {
      double a = walk.ws[i - 1].imag(), b = walk.ws[i].imag(), d = walk.ws[i + 1].imag();
      if ((b - a) * (d - b) < 0.0 && mod_dist(b, c) < tang_gap) return std::nullopt;
    }
    std::vector<double> found_ts;
    for (size_t i = 0; i + 1 < walk.ws.size(); ++i) {
      double pa = walk.ws[i].imag(), pb = walk.ws[i + 1].imag();
      double lo = std::min(pa, pb), hi = std::max(pa, pb);
      long long l0 = static_cast<long long>(std::ceil((lo - c) / kTwoPi - 1e-12));
      long long l1 = static_cast<long long>(std::floor((hi - c) / kTwoPi + 1e-12));
      for (long long ell = l0; ell <= l1; ++ell) {
        double target = c + kTwoPi * static_cast<double>(ell);
        if ((pa - target) * (pb - target) > 0.0) continue;
        auto ref = refine_crossing(gam, sh, f, walk.ts[i], walk.ts[i + 1], walk.ws[i],
                                   target, kZeroFloorHard);
        if (!ref) continue;
        bool dup = false;
        for (double t : found_ts)
          if (std::abs(t - ref->t) < 1e-10) dup = true;
        if (dup) continue;
        found_ts.push_back(ref->t);
        if (ref->margin < margin_tol) return std::nullopt;
        cert.min_margin = std::min(cert.min_margin, ref->margin);
        cert.crossings.push_back(CutCrossing{static_cast<int>(cid), ref->t, ref->margin});
      }
    }
  }
  if (cert.crossings.empty()) cert.min_margin = kPi;  // empty cut set: trivially fine
  if (cert.min_endpoint_gap > 1e299) cert.min_endpoint_gap = kPi;  // only closed curves
  return cert;
}

CutLevelCert choose_cut_level(const RationalFunction& f, const TowerSpec& tower,
                              int region_stage, int k, std::uint64_t seed,
                              TowerWork& work) {
  Rng rng = Rng::stream(seed, 0xC077 + static_cast<std::uint64_t>(region_stage));
  for (int attempt = 0; attempt < 300; ++attempt) {
    double c = rng.uniform(0.0, kTwoPi);
    if (auto cert = certify_cut_level(f, tower, region_stage, k, c, work)) return *cert;
  }
  throw Error("no-admissible-c", "no transversal cut level found after 300 draws");
}

// ---------------------------------------------------------------------------
// cut tracing

namespace {

// Newton to Re z[slot] == u with Im pinned; z mutated in place.
void newton_to_u(const TowerShape& sh, CVec& z, size_t slot, double pin, double u_target) {
  Complex target(u_target, pin);
  for (int iter = 0; iter < 100; ++iter) {
    Complex w = z[slot];
    if (std::abs(w - target) < 1e-13 * (1.0 + std::abs(target))) return;
    CVec jet = surface_jet(sh, z);
    Complex wp = jet[slot];
    if (std::abs(wp) < 1e-12)
      throw Error("tracing-divergence", "singular level curve during trace");
    Complex step = (target - w) / wp;
    while (true) {
      CVec trial = z;
      ContinueStatus st = continue_point(sh, trial, z[0] + step, 0.9, kZeroFloorHard);
      if (st.ok) {
        z = std::move(trial);
        break;
      }
      if (st.zero_hit) throw Error("singularity-proximity", "zero hit during trace");
      step *= 0.5;
      if (std::abs(step) < 1e-16) throw Error("step-collapse", "trace corrector stalled");
    }
  }
  throw Error("tracing-divergence", "trace corrector failed to converge");
}

struct TraceSeed {
  CVec z;        // slots 0..rs+1 (with continued w in the last slot)
  double pin;    // Im of the continued branch
  int pool_id;
};

}  // namespace

std::vector<Curve> trace_cut_curves(const RationalFunction& f, double c,
                                    const TowerSpec& tower, int region_stage, int k,
                                    const CutLevelCert& cert, TowerWork& work) {
  const std::vector<Curve>& region = region_boundary(tower, region_stage, k, work);
  TowerShape sh = tower.shape(region_stage);
  sh.stages.push_back(StageDef{f.promoted(static_cast<unsigned>(region_stage + 1)), 0.0, 0.0});
  const size_t slot = static_cast<size_t>(region_stage + 1);

  RegionSpec reg;
  reg.cheese = tower.base ? &*tower.base : nullptr;
  reg.k = k;
  reg.shape = &sh;
  reg.stage = region_stage;

  // crossing pool with full coordinates
  struct PoolEntry {
    CVec z;
    double pin;
    bool used = false;
  };
  std::vector<PoolEntry> pool;
  for (const auto& x : cert.crossings) {
    const Curve& gam = region[static_cast<size_t>(x.curve_id)];
    CVec z = gam.at(sh, x.t);
    Complex v = f.eval(std::span<const Complex>(z.data(), f.arity()));
    Complex w0 = std::log(v);
    long long ell = std::llround((w0.imag() - c) / kTwoPi);
    double pin = c + kTwoPi * static_cast<double>(ell);
    z.push_back(Complex(w0.real(), pin));
    pool.push_back(PoolEntry{std::move(z), pin, false});
  }

  std::vector<Curve> out;
  for (size_t start = 0; start < pool.size(); ++start) {
    if (pool[start].used) continue;
    pool[start].used = true;
    CVec z = pool[start].z;
    double pin = pool[start].pin;

    // inward direction: probe both signs of the u step
    auto probe_margin = [&](double su) -> double {
      CVec trial = z;
      CVec jet = surface_jet(sh, trial);
      Complex wp = jet[slot];
      if (std::abs(wp) < 1e-12) return -1e300;
      Complex dz = su * 0.002 / wp;
      CVec t2 = trial;
      ContinueStatus st = continue_point(sh, t2, trial[0] + dz, 0.9, kZeroFloorHard);
      if (!st.ok) return -1e300;
      newton_to_u(sh, t2, slot, pin, t2[slot].real());
      return reg.margin(t2);
    };
    double mp = probe_margin(+1.0), mm = probe_margin(-1.0);
    if (mp <= -1e299 && mm <= -1e299)
      throw Error("tracing-divergence", "cannot step off the boundary at a crossing");
    double su = (mp >= mm) ? +1.0 : -1.0;

    std::vector<CVec> nodes{z};
    double du = 0.05;
    int guard = 0;
    double travel = 0.0;
    while (true) {
      if (++guard > 60000) throw Error("tracing-divergence", "trace exceeded step limit");
      CVec jet = surface_jet(sh, z);
      Complex wp = jet[slot];
      double speed = 1.0 / std::max(1e-12, std::abs(wp));  // |dz1/du|
      double margin_now = reg.margin(z);
      double dz_cap = std::clamp(margin_now * 0.5, 0.002, 0.04);
      double step = std::min({du, 0.25, dz_cap / speed});
      CVec znext = z;
      bool ok = true;
      try {
        // predictor in z1, then corrector back to the level
        Complex dz = su * step / wp;
        CVec trial = z;
        ContinueStatus st = continue_point(sh, trial, z[0] + dz, 0.9, kZeroFloorHard);
        if (!st.ok) ok = false;
        if (ok) {
          newton_to_u(sh, trial, slot, pin, z[slot].real() + su * step);
          znext = std::move(trial);
        }
      } catch (const Error&) {
        ok = false;
      }
      if (!ok) {
        du *= 0.5;
        if (du < 1e-10) throw Error("tracing-divergence", "trace step collapsed");
        continue;
      }
      double m2 = reg.margin(znext);
      if (m2 < 0.0) {
        // bisect the exit point in u
        double lo = 0.0, hi = su * step;
        CVec zhi = znext;
        for (int b = 0; b < 60 && std::abs(hi - lo) > 1e-13; ++b) {
          double mid = 0.5 * (lo + hi);
          CVec zm = z;
          newton_to_u(sh, zm, slot, pin, z[slot].real() + mid);
          if (reg.margin(zm) >= 0.0)
            lo = mid;
          else {
            hi = mid;
            zhi = zm;
          }
        }
        // snap to the nearest unused pool crossing; the match must agree in
        // every surface coordinate, not only z1 (distinct sheets and the two
        // window copies can project to the same base point)
        int best = -1;
        double bd = 5e-5;
        for (size_t p = 0; p < pool.size(); ++p) {
          if (pool[p].used) continue;
          double d = 0.0;
          for (size_t sl = 0; sl < slot; ++sl)
            d = std::max(d, std::abs(pool[p].z[sl] - zhi[sl]));
          if (d < bd) {
            bd = d;
            best = static_cast<int>(p);
          }
        }
        if (best < 0)
          throw Error("tracing-divergence",
                      "cut endpoint does not match any certificate crossing near z1=" +
                          std::to_string(zhi[0].real()) + "+" +
                          std::to_string(zhi[0].imag()) + "i");
        pool[static_cast<size_t>(best)].used = true;
        CVec zend = pool[static_cast<size_t>(best)].z;
        zend[slot] = Complex(zend[slot].real(), pin);  // shared branch representative
        // drop nodes that overshoot the snapped endpoint in u
        while (nodes.size() > 1 &&
               su * (zend[slot].real() - nodes.back()[slot].real()) <= 0.0)
          nodes.pop_back();
        nodes.push_back(std::move(zend));
        break;
      }
      travel += std::abs(znext[0] - z[0]);
      if (travel > 500.0) throw Error("tracing-divergence", "trace length runaway");
      z = std::move(znext);
      nodes.push_back(z);
      du = std::min(du * 1.5, 0.25);
    }

    Curve chi;
    chi.base = Curve::Base::cut;
    chi.cut_slot = static_cast<int>(slot);
    chi.pin_im = pin;
    chi.nslots = region_stage + 2;
    chi.eclass = 0;
    if (nodes.back()[slot].real() < nodes.front()[slot].real())
      std::reverse(nodes.begin(), nodes.end());
    chi.u0 = nodes.front()[slot].real();
    chi.u1 = nodes.back()[slot].real();
    double span = chi.u1 - chi.u0;
    if (std::abs(span) < 1e-12) continue;  // degenerate sliver
    for (const auto& nz : nodes) chi.ts.push_back((nz[slot].real() - chi.u0) / span);
    chi.zs = std::move(nodes);
    // enforce strictly ascending params (u is monotone along the trace)
    for (size_t i = 1; i < chi.ts.size(); ++i)
      if (chi.ts[i] <= chi.ts[i - 1])
        throw Error("tracing-divergence", "non-monotone trace parameterization");
    out.push_back(std::move(chi));
  }
  return out;
}

double cut_z1_length(const std::vector<Curve>& cuts, const TowerShape& shape) {
  double total = 0.0;
  for (const Curve& c : cuts) {
    double len = 0.0;
    for (size_t i = 0; i + 1 < c.ts.size(); ++i) {
      double t0 = c.ts[i], t1 = c.ts[i + 1];
      Complex v0, vm, v1;
      (void)c.at(shape, t0, &v0);
      (void)c.at(shape, 0.5 * (t0 + t1), &vm);
      (void)c.at(shape, t1, &v1);
      len += (t1 - t0) / 6.0 * (std::abs(v0) + 4.0 * std::abs(vm) + std::abs(v1));
    }
    total += len;
  }
  return total;
}

// ---------------------------------------------------------------------------
// sample points and zero-free certification

std::vector<CVec> region_sample_points(const TowerSpec& tower, int N, int k,
                                       double base_grid_step) {
  std::vector<CVec> pts;
  TowerShape sh = tower.shape(N);
  auto push_fibers = [&](Complex p) {
    std::vector<CVec> fib;
    try {
      fib = fiber(sh, p, N, kZeroFloorHard);
    } catch (const Error&) {
      return;  // grid point sits on a zero of some stage function
    }
    for (auto& z : fib) pts.push_back(std::move(z));
  };
  for (double x = -1.0; x <= 1.0; x += base_grid_step) {
    for (double y = -1.0; y <= 1.0; y += base_grid_step) {
      Complex p(x, y);
      if (tower.base) {
        if (truncation_margin(*tower.base, k, p) < 0.0) continue;
      } else {
        if (std::abs(p) > 1.0) continue;
      }
      push_fibers(p);
    }
  }
  if (!tower.base) {
    // square-root towers: include the Shilov ring |z1| = 1
    int nring = static_cast<int>(std::ceil(kTwoPi / base_grid_step));
    for (int i = 0; i < nring; ++i) {
      double th = kTwoPi * i / nring;
      push_fibers(Complex(std::cos(th), std::sin(th)));
    }
  }
  return pts;
}

double min_modulus_on_region(const TowerSpec& tower, int level, int k,
                             const RationalFunction& g, TowerWork& work,
                             double base_grid_step) {
  double mn = 1e300;
  auto consider = [&](const CVec& z) {
    Complex v = g.eval(std::span<const Complex>(z.data(), g.arity()));
    mn = std::min(mn, std::abs(v));
  };
  if (tower.kind == TowerKind::exponential) {
    TowerShape sh = tower.shape(level);
    for (const Curve& c : region_boundary(tower, level, k, work)) {
      for (size_t i = 0; i < c.ts.size(); ++i) consider(c.zs[i]);
      // midpoints between anchors for coverage
      for (size_t i = 0; i + 1 < c.ts.size(); ++i)
        consider(c.at(sh, 0.5 * (c.ts[i] + c.ts[i + 1])));
    }
  }
  for (const CVec& z : region_sample_points(tower, level, k, base_grid_step)) consider(z);
  return mn;
}

// ---------------------------------------------------------------------------
// dictionaries

namespace {

RationalFunction mobius_entry(const CheeseSpec& spec, int hole_a, int hole_b,
                              unsigned arity, Rng& rng) {
  const Disc& da = spec.holes[static_cast<size_t>(hole_a - 1)];
  const Disc& db = spec.holes[static_cast<size_t>(hole_b - 1)];
  Complex a = da.center + 0.3 * da.radius * rng.unit_disc();
  Complex b = db.center + 0.3 * db.radius * rng.unit_disc();
  Polynomial z1 = Polynomial::variable(0, arity);
  Polynomial num = z1 - Polynomial::constant(a, arity);
  Polynomial den = z1 - Polynomial::constant(b, arity);
  return RationalFunction(num, den);
}

Polynomial random_poly_z1(unsigned arity, unsigned degree, Rng& rng) {
  Polynomial p = Polynomial::constant(0.0, arity);
  Polynomial z1 = Polynomial::variable(0, arity);
  Polynomial pow = Polynomial::constant(1.0, arity);
  for (unsigned d = 0; d <= degree; ++d) {
    p = p + pow * (0.7 * rng.unit_disc());
    pow = pow * z1;
  }
  return p;
}

}  // namespace

std::vector<DictEntry> build_dictionary(const TowerSpec& tower, int level, int J,
                                        std::uint64_t seed, TowerWork& work) {
  const bool is_exp = tower.kind == TowerKind::exponential;
  const int k = is_exp ? tower.k_floor : 0;
  const unsigned arity = static_cast<unsigned>(level + 1);
  const double tol = tower.tol.zero_free;
  std::vector<CVec> samples = region_sample_points(tower, level, k, 0.05);
  if (is_exp) {
    for (const Curve& c : region_boundary(tower, level, k, work))
      for (const auto& z : c.zs) samples.push_back(z);
  }
  if (samples.empty()) throw Error("zero-free-certification-failed", "empty sample set");

  auto sampled_min_abs = [&](const RationalFunction& g) {
    double mn = 1e300, dn = 1e300;
    for (const CVec& z : samples) {
      std::span<const Complex> zz(z.data(), g.arity());
      dn = std::min(dn, g.den_abs(zz));
      if (dn < 1e-12) return std::make_pair(0.0, dn);
      mn = std::min(mn, std::abs(g.eval(zz)));
    }
    return std::make_pair(mn, dn);
  };
  auto sampled_max_abs = [&](const Polynomial& p) {
    double mx = 0.0;
    for (const CVec& z : samples)
      mx = std::max(mx, std::abs(p.eval(std::span<const Complex>(z.data(), p.arity()))));
    return mx;
  };

  int usable_holes = 0;
  if (is_exp)
    usable_holes = std::min(tower.k_floor, static_cast<int>(tower.base->holes.size()));

  std::vector<DictEntry> entries;
  for (int j = 1; j <= J; ++j) {
    bool done = false;
    for (int attempt = 0; attempt < 60 && !done; ++attempt) {
      Rng rng = Rng::stream(seed, (static_cast<std::uint64_t>(level) << 40) ^
                                      (static_cast<std::uint64_t>(j) << 16) ^
                                      static_cast<std::uint64_t>(attempt));
      // pattern rotation: Moebius entries wind around holes (pattern 0, and a
      // two-factor product 3 that doubles the winding), shifted polynomials
      // bring zero-free bulk (1); lifted levels lead with an entry in the top
      // coordinate so later stages genuinely live on the surface (2)
      int pat;
      if (level == 0) {
        if (usable_holes >= 2) {
          constexpr int rot[4] = {0, 3, 1, 0};
          pat = rot[(j - 1) % 4];
          if (pat == 3 && usable_holes < 3) pat = 0;
        } else {
          pat = 1;
        }
      } else {
        pat = (j - 1) % 3 == 0 ? 2 : ((j - 1) % 3 == 1 && usable_holes >= 2 && is_exp ? 0 : 1);
      }
      if (!is_exp && (pat == 0 || pat == 3)) pat = 1;  // sqrt dictionaries stay polynomial

      RationalFunction g;
      if (pat == 0) {
        int ha = 1 + (j - 1) % usable_holes;
        int hb = 1 + (ha + attempt) % usable_holes;
        if (hb == ha) hb = 1 + ha % usable_holes;
        if (hb == ha) continue;
        g = mobius_entry(*tower.base, ha, hb, arity, rng);
      } else if (pat == 3) {
        // product of two Moebius factors over distinct hole pairs
        int ha = 1 + (j - 1) % usable_holes;
        int hb = 1 + (ha) % usable_holes;
        int hc = 1 + (ha + 1) % usable_holes;
        int hd = 1 + (hb + 1 + attempt) % usable_holes;
        if (hd == hc) hd = 1 + hc % usable_holes;
        if (ha == hb || hc == hd) continue;
        RationalFunction m1 = mobius_entry(*tower.base, ha, hb, arity, rng);
        RationalFunction m2 = mobius_entry(*tower.base, hc, hd, arity, rng);
        g = RationalFunction(m1.num() * m2.num(), m1.den() * m2.den());
      } else if (pat == 1) {
        unsigned deg = 1 + static_cast<unsigned>(rng.u64() % 3);
        Polynomial p = random_poly_z1(arity, deg, rng);
        double mx = sampled_max_abs(p);
        if (mx < 1e-6) continue;
        Complex lam = (mx * rng.uniform(1.2, 1.8)) *
                      std::exp(Complex(0.0, rng.uniform(0.0, kTwoPi)));
        g = RationalFunction(p - Polynomial::constant(lam, arity));
      } else {
        // affine in the top coordinate plus a z1 term
        Polynomial top = Polynomial::variable(arity - 1, arity);
        Polynomial z1 = Polynomial::variable(0, arity);
        Polynomial p = top * (0.35 * std::exp(Complex(0.0, rng.uniform(0.0, kTwoPi)))) +
                       z1 * (0.8 * rng.unit_disc());
        double mx = sampled_max_abs(p);
        if (mx < 1e-6) continue;
        Complex lam = (mx * rng.uniform(1.15, 1.6)) *
                      std::exp(Complex(0.0, rng.uniform(0.0, kTwoPi)));
        g = RationalFunction(p - Polynomial::constant(lam, arity));
      }

      auto [mn, dn] = sampled_min_abs(g);
      if (mn >= tol && dn >= tol) {
        entries.push_back(DictEntry{std::move(g), mn});
        done = true;
      }
    }
    if (!done)
      throw Error("zero-free-certification-failed",
                  "dictionary entry g_{" + std::to_string(level) + "," + std::to_string(j) +
                      "} failed certification");
  }
  return entries;
}

// ---------------------------------------------------------------------------
// alpha selection (square-root stages)

AlphaChoice choose_alpha(const RationalFunction& q, const TowerSpec& tower, int M,
                         std::uint64_t seed) {
  TowerShape sh = tower.shape(M - 1);
  // critical points of q along the surface: Newton on s(z1) = d(q o lift)/dz1
  std::vector<Complex> crit_values;
  auto s_of = [&](const CVec& z) {
    Complex val, dz1;
    surface_eval_grad(sh, q, z, val, dz1);
    return std::make_pair(val, dz1);
  };
  std::vector<CVec> starts;
  for (double x = -1.0; x <= 1.0; x += 0.22) {
    for (double y = -1.0; y <= 1.0; y += 0.22) {
      Complex p(x, y);
      if (std::abs(p) > 1.02) continue;
      try {
        for (auto& z : fiber(sh, p, M - 1, 1e-9)) starts.push_back(std::move(z));
      } catch (const Error&) {
      }
    }
  }
  for (CVec z : starts) {
    try {
    bool alive = true;
    for (int iter = 0; iter < 50 && alive; ++iter) {
      auto [val, s] = s_of(z);
      (void)val;
      if (std::abs(s) < 1e-11) break;
      // numeric derivative of s along the surface
      const double h = 1e-6;
      CVec zp = z, zm = z;
      ContinueStatus a = continue_point(sh, zp, z[0] + h, 0.9, 1e-12);
      ContinueStatus b = continue_point(sh, zm, z[0] - h, 0.9, 1e-12);
      if (!a.ok || !b.ok) {
        alive = false;
        break;
      }
      Complex sp = s_of(zp).second, sm = s_of(zm).second;
      Complex ds = (sp - sm) / (2.0 * h);
      if (std::abs(ds) < 1e-14) {
        alive = false;
        break;
      }
      Complex step = -s / ds;
      if (std::abs(step) > 0.25) step *= 0.25 / std::abs(step);
      CVec trial = z;
      ContinueStatus st = continue_point(sh, trial, z[0] + step, 0.9, 1e-12);
      if (!st.ok) {
        alive = false;
        break;
      }
      z = std::move(trial);
      if (std::abs(z[0]) > 1.3) {
        alive = false;
        break;
      }
    }
    if (!alive) continue;
    auto [val, s] = s_of(z);
    if (std::abs(s) < 1e-9 && std::abs(z[0]) <= 1.05) {
      bool dup = false;
      for (const Complex& v : crit_values)
        if (std::abs(v - val) < 1e-7) dup = true;
      if (!dup) crit_values.push_back(val);
    }
    } catch (const Error&) {
      continue;  // start abandoned (branch point or continuation failure)
    }
  }

  // sampled joint-smallness guard over the fiber grid
  std::vector<CVec> grid = region_sample_points(tower, M - 1, 0, 0.08);
  auto sampled_margin = [&](Complex alpha) {
    double mn = 1e300;
    for (const CVec& z : grid) {
      Complex val, dz1;
      surface_eval_grad(sh, q, z, val, dz1);
      mn = std::min(mn, std::max(std::abs(val - alpha), std::abs(dz1)));
    }
    return mn;
  };

  Rng rng = Rng::stream(seed, 0xA1FA);
  const double rmax = 0.95 / static_cast<double>(M);
  for (int attempt = 0; attempt < 200; ++attempt) {
    Complex alpha = rmax * rng.unit_disc();
    double margin = 2.0 * rmax;
    for (const Complex& v : crit_values) margin = std::min(margin, std::abs(alpha - v));
    margin = std::min(margin, sampled_margin(alpha));
    if (margin >= 1e-3) {
      AlphaChoice out;
      out.alpha = alpha;
      out.margin = margin;
      out.critical_values = crit_values;
      return out;
    }
  }
  throw Error("no-regular-value-found",
              "no alpha with |alpha| < 1/" + std::to_string(M) + " cleared the margin");
}

// ---------------------------------------------------------------------------
// build drivers

namespace {

std::set<int> needed_dict_levels(int stages) {
  std::set<int> lv;
  for (int N = 1; N <= stages; ++N) {
    ScheduleIndex idx = schedule(N);
    lv.insert(idx.r == idx.s ? 0 : static_cast<int>(sigma(ScheduleIndex{idx.s, idx.s})));
  }
  return lv;
}

}  // namespace

TowerSpec build_exp_tower(const CheeseSpec& spec, int stages, int dict_size,
                          std::uint64_t seed, std::vector<int> k_list,
                          double target_delta, const Tolerances& tol, TowerWork& work) {
  if (stages < 0) throw Error("invalid-stage", "stage count must be >= 0");
  std::sort(k_list.begin(), k_list.end());
  k_list.erase(std::unique(k_list.begin(), k_list.end()), k_list.end());
  if (k_list.empty()) k_list = {static_cast<int>(spec.holes.size())};
  if (k_list.back() > static_cast<int>(spec.holes.size()))
    throw Error("invalid-spec", "truncation exceeds hole count");

  TowerSpec t;
  t.kind = TowerKind::exponential;
  t.base = spec;
  t.k_list = k_list;
  t.k_floor = k_list.front();
  t.seed = seed;
  t.target_delta = target_delta;
  t.tol = tol;

  std::set<int> dict_levels = needed_dict_levels(stages);
  t.dictionaries[0] = build_dictionary(t, 0, dict_size, splitmix_of(seed, 0), work);

  // running per-k recursive norms
  std::map<int, double> var, delta;
  for (int k : k_list) {
    var[k] = chain_length(boundary_chain(spec, k));
    delta[k] = 4.0 * kPi - var[k];
    if (delta[k] <= 0.0)
      throw Error("invalid-spec", "stage-0 norm bound violated (budget too large?)");
  }

  for (int M = 1; M <= stages; ++M) {
    RationalFunction f = next_function(t, M);
    double zf = min_modulus_on_region(t, M - 1, t.k_floor, f, work);
    if (zf < tol.zero_free)
      throw Error("zero-free-certification-failed",
                  "stage " + std::to_string(M) + " function dips to |f|=" + std::to_string(zf));

    // one cut level certified across every configured truncation; a candidate
    // is committed only when its cut set also traces consistently (all
    // certificate crossings consumed), so scan misses force a redraw
    Rng crng = Rng::stream(seed, 0x9000 + static_cast<std::uint64_t>(M));
    TowerShape sh_f = t.shape(M - 1);
    sh_f.stages.push_back(StageDef{f.promoted(static_cast<unsigned>(M)), 0.0, 0.0});
    std::map<int, CutLevelCert> certs;
    std::map<int, double> cut_len;
    std::map<int, std::vector<Curve>> traced;
    bool have_c = false;
    double c = 0.0;
    for (int attempt = 0; attempt < 300 && !have_c; ++attempt) {
      c = crng.uniform(0.0, kTwoPi);
      certs.clear();
      cut_len.clear();
      traced.clear();
      bool ok = true;
      for (int k : k_list) {
        auto opt = certify_cut_level(f, t, M - 1, k, c, work);
        if (!opt) {
          ok = false;
          break;
        }
        certs[k] = *opt;
      }
      if (!ok) continue;
      try {
        for (int k : k_list) {
          traced[k] = trace_cut_curves(f, c, t, M - 1, k, certs[k], work);
          cut_len[k] = cut_z1_length(traced[k], sh_f);
        }
      } catch (const Error& e) {
        if (e.code == "tracing-divergence" || e.code == "step-collapse") continue;
        throw;
      }
      have_c = true;
    }
    if (!have_c)
      throw Error("no-admissible-c", "stage " + std::to_string(M) +
                                         ": no level passed for all truncations");
    int m = 1;
    for (int k : k_list)
      m = std::max(m, choose_sheet_count(var[k], delta[k], 2.0 * cut_len[k], target_delta));

    ScheduleIndex idx = schedule(M);
    ExpStage st;
    st.level = M;
    st.f = f.promoted(static_cast<unsigned>(M));
    st.c = c;
    st.m = m;
    st.sched = idx;
    st.dict_source = (idx.r == idx.s)
                         ? std::make_pair(0, static_cast<int>(idx.r) + 1)
                         : std::make_pair(static_cast<int>(sigma(ScheduleIndex{idx.s, idx.s})),
                                          static_cast<int>(idx.r - idx.s));
    st.cut_certs = std::move(certs);
    st.cut_length = cut_len;
    st.zero_free_margin = zf;
    t.exp_stages.push_back(std::move(st));

    for (int k : k_list) {
      work.cuts[{M, k}] = std::move(traced[k]);
      var[k] = m * var[k] + 2.0 * cut_len[k];
      delta[k] = 4.0 * kPi * t.sheet_product(M) - var[k];
    }
    if (dict_levels.count(M) && M < stages)
      t.dictionaries[M] =
          build_dictionary(t, M, dict_size, splitmix_of(seed, static_cast<std::uint64_t>(M)),
                           work);
  }
  return t;
}

TowerSpec build_sqrt_tower(int stages, int dict_size, std::uint64_t seed,
                           const Tolerances& tol) {
  TowerSpec t;
  t.kind = TowerKind::square_root;
  t.k_list = {0};
  t.k_floor = 0;
  t.seed = seed;
  t.tol = tol;
  TowerWork work;
  std::set<int> dict_levels = needed_dict_levels(stages);
  t.dictionaries[0] = build_dictionary(t, 0, dict_size, splitmix_of(seed, 0), work);
  for (int M = 1; M <= stages; ++M) {
    RationalFunction q = next_function(t, M);
    AlphaChoice ac = choose_alpha(q, t, M, splitmix_of(seed, 0x7000 + static_cast<std::uint64_t>(M)));
    ScheduleIndex idx = schedule(M);
    SqrtStage st;
    st.level = M;
    st.q = q.promoted(static_cast<unsigned>(M));
    st.alpha = ac.alpha;
    st.regular_value_margin = ac.margin;
    st.sched = idx;
    st.dict_source = (idx.r == idx.s)
                         ? std::make_pair(0, static_cast<int>(idx.r) + 1)
                         : std::make_pair(static_cast<int>(sigma(ScheduleIndex{idx.s, idx.s})),
                                          static_cast<int>(idx.r - idx.s));
    t.sqrt_stages.push_back(std::move(st));
    if (dict_levels.count(M) && M < stages)
      t.dictionaries[M] =
          build_dictionary(t, M, dict_size, splitmix_of(seed, static_cast<std::uint64_t>(M)),
                           work);
  }
  return t;
}

}  // namespace cheese
