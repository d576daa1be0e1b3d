#include "cheese/geometry.hpp"

#include <algorithm>
#include <cassert>
#include <cstdlib>
#include <thread>

namespace cheese {

unsigned worker_cap() {
  if (const char* s = std::getenv("CHEESE_THREADS")) {
    int v = std::atoi(s);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? hc : 1;
}

double CheeseSpec::radius_sum() const {
  double s = 0.0;
  for (const auto& d : holes) s += d.radius;
  return s;
}

Circle CheeseSpec::circle(int index) const {
  if (index == 0) return Circle{Complex(0.0, 0.0), 1.0};
  const Disc& d = holes.at(static_cast<size_t>(index - 1));
  return Circle{d.center, d.radius};
}

std::optional<double> circle_crossing_angle(const Circle& a, const Circle& b) {
  double d = std::abs(a.center - b.center);
  double lo = std::abs(a.radius - b.radius);
  double hi = a.radius + b.radius;
  if (d <= lo || d >= hi) {
    if (d == lo || d == hi) return 0.0;  // exact tangency
    return std::nullopt;
  }
  // angle between radius vectors at an intersection point
  double c = (a.radius * a.radius + b.radius * b.radius - d * d) /
             (2.0 * a.radius * b.radius);
  c = std::clamp(c, -1.0, 1.0);
  double phi = std::acos(c);
  return std::min(phi, kPi - phi);
}

// Intersection points of two circles (assumes they properly cross).
static std::pair<Complex, Complex> circle_intersections(const Circle& a, const Circle& b) {
  Complex delta = b.center - a.center;
  double d = std::abs(delta);
  double x = (d * d + a.radius * a.radius - b.radius * b.radius) / (2.0 * d);
  double h2 = a.radius * a.radius - x * x;
  double h = h2 > 0 ? std::sqrt(h2) : 0.0;
  Complex u = delta / d;
  Complex base = a.center + x * u;
  Complex off = Complex(-u.imag(), u.real()) * h;
  return {base + off, base - off};
}

void validate_spec(const CheeseSpec& spec, const SpecCheckOptions& opt) {
  if (!(spec.radius_budget > 0.0 && spec.radius_budget < 1.0))
    throw Error("invalid-spec", "radius_budget must lie in (0,1)");
  if (!(spec.min_crossing_angle > 0.0))
    throw Error("invalid-spec", "min_crossing_angle must be positive");
  for (const auto& h : spec.holes)
    if (!(h.radius > 0.0)) throw Error("invalid-spec", "hole radius must be positive");
  if (!(spec.radius_sum() < spec.radius_budget))
    throw Error("invalid-spec", "sum of hole radii exceeds the budget");

  int n = spec.circle_count();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      auto ang = circle_crossing_angle(spec.circle(i), spec.circle(j));
      if (ang && *ang < spec.min_crossing_angle)
        throw Error("invalid-spec", "circle pair " + std::to_string(i) + "," +
                                        std::to_string(j) + " crosses below min angle");
    }
  }
  // no triple points: every pairwise intersection stays clear of all other circles
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Circle a = spec.circle(i), b = spec.circle(j);
      if (!circle_crossing_angle(a, b)) continue;
      auto [p, q] = circle_intersections(a, b);
      for (int l = 0; l < n; ++l) {
        if (l == i || l == j) continue;
        Circle c = spec.circle(l);
        double dp = std::abs(std::abs(p - c.center) - c.radius);
        double dq = std::abs(std::abs(q - c.center) - c.radius);
        if (dp < opt.triple_sep || dq < opt.triple_sep)
          throw Error("invalid-spec", "near-triple point among circles " +
                                          std::to_string(i) + "," + std::to_string(j) +
                                          "," + std::to_string(l));
      }
    }
  }
}

// Checks whether `cand` is admissible against already placed circles.
static bool hole_admissible(const CheeseSpec& partial, const Disc& cand,
                            double min_angle, double triple_sep) {
  // must meet the closed unit disc
  if (std::abs(cand.center) - cand.radius >= 1.0) return false;

  Circle nc{cand.center, cand.radius};
  int n = partial.circle_count();
  for (int i = 0; i < n; ++i) {
    auto ang = circle_crossing_angle(partial.circle(i), nc);
    if (ang && *ang < min_angle) return false;
  }
  // new pair intersections must avoid old circles, and old pair intersections
  // must avoid the new circle
  for (int i = 0; i < n; ++i) {
    Circle a = partial.circle(i);
    if (!circle_crossing_angle(a, nc)) continue;
    auto [p, q] = circle_intersections(a, nc);
    for (int l = 0; l < n; ++l) {
      if (l == i) continue;
      Circle c = partial.circle(l);
      if (std::abs(std::abs(p - c.center) - c.radius) < triple_sep) return false;
      if (std::abs(std::abs(q - c.center) - c.radius) < triple_sep) return false;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Circle a = partial.circle(i), b = partial.circle(j);
      if (!circle_crossing_angle(a, b)) continue;
      auto [p, q] = circle_intersections(a, b);
      if (std::abs(std::abs(p - nc.center) - nc.radius) < triple_sep) return false;
      if (std::abs(std::abs(q - nc.center) - nc.radius) < triple_sep) return false;
    }
  }
  return true;
}

CheeseSpec generate_cheese(std::uint64_t seed, double radius_budget, int hole_count,
                           double min_crossing_angle, const GenOptions& opt) {
  if (!(radius_budget > 0.0 && radius_budget < 1.0))
    throw Error("invalid-spec", "radius_budget must lie in (0,1)");
  if (hole_count < 0) throw Error("invalid-spec", "hole_count must be >= 0");
  if (!(min_crossing_angle > 0.0))
    throw Error("invalid-spec", "min_crossing_angle must be positive");

  CheeseSpec spec;
  spec.radius_budget = radius_budget;
  spec.seed = seed;
  spec.min_crossing_angle = min_crossing_angle;

  // radius caps follow a geometric series that sums to radius_fill * budget
  double cap = radius_budget * opt.radius_fill * (1.0 - opt.radius_decay);
  for (int h = 0; h < hole_count; ++h) {
    if (cap < 1e-9)
      throw Error("budget-exhausted",
                  "hole " + std::to_string(h) + " cap collapsed under the budget");
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(h));
    bool placed = false;
    for (int attempt = 0; attempt < opt.max_retries_per_hole; ++attempt) {
      Disc cand;
      cand.radius = cap * rng.uniform(0.6, 1.0);
      cand.center = rng.unit_disc();
      if (hole_admissible(spec, cand, min_crossing_angle, opt.triple_sep)) {
        spec.holes.push_back(cand);
        placed = true;
        break;
      }
    }
    if (!placed)
      throw Error("transversality-unachievable",
                  "hole " + std::to_string(h) + " rejected at retry limit");
    cap *= opt.radius_decay;
  }

  validate_spec(spec, SpecCheckOptions{opt.triple_sep});
  return spec;
}

// ---------------------------------------------------------------------------
// boundary arcs

namespace {

// Open angular interval [lo, lo+width) on a circle, width in (0, 2pi).
struct Mask {
  double lo;
  double width;
};

// Angular interval of circle `c` covered by the open disc `d`, if any.
// Returns width >= 2pi when the whole circle is swallowed.
std::optional<Mask> disc_mask(const Circle& c, const Disc& d) {
  Complex delta = d.center - c.center;
  double dist = std::abs(delta);
  if (dist < 1e-15) {
    if (d.radius > c.radius) return Mask{0.0, kTwoPi + 1.0};
    return std::nullopt;
  }
  double t = (c.radius * c.radius + dist * dist - d.radius * d.radius) /
             (2.0 * c.radius * dist);
  if (t >= 1.0) return std::nullopt;                // circle clear of the disc
  if (t <= -1.0) return Mask{0.0, kTwoPi + 1.0};    // fully covered
  double beta = std::acos(t);
  double phi = std::arg(delta);
  return Mask{wrap_angle(phi - beta), 2.0 * beta};
}

// Angular interval of circle `c` lying strictly outside the closed unit disc.
std::optional<Mask> outside_unit_mask(const Circle& c) {
  double dist = std::abs(c.center);
  if (dist < 1e-15) {
    if (c.radius > 1.0) return Mask{0.0, kTwoPi + 1.0};
    return std::nullopt;
  }
  // |center + r e^{i theta}|^2 > 1  <=>  cos(theta - psi) > u
  double u = (1.0 - dist * dist - c.radius * c.radius) / (2.0 * c.radius * dist);
  if (u >= 1.0) return std::nullopt;
  if (u <= -1.0) return Mask{0.0, kTwoPi + 1.0};
  double gamma = std::acos(u);
  double psi = std::arg(c.center);
  return Mask{wrap_angle(psi - gamma), 2.0 * gamma};
}

// Complement of the union of masks on a circle, as closed [lo, hi] intervals
// with hi > lo (unnormalized: hi may exceed 2pi).
std::vector<std::pair<double, double>> kept_intervals(std::vector<Mask> masks) {
  std::vector<std::pair<double, double>> kept;
  if (masks.empty()) {
    kept.emplace_back(0.0, kTwoPi);
    return kept;
  }
  for (const Mask& m : masks)
    if (m.width >= kTwoPi) return kept;  // fully covered

  // unroll on [0, 4pi) and merge
  std::vector<std::pair<double, double>> iv;
  for (const Mask& m : masks) {
    iv.emplace_back(m.lo, m.lo + m.width);
    iv.emplace_back(m.lo + kTwoPi, m.lo + m.width + kTwoPi);
  }
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& p : iv) {
    if (!merged.empty() && p.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, p.second);
    else
      merged.push_back(p);
  }
  // walk one period starting inside the first mask
  double origin = masks.front().lo;
  double end_of_period = origin + kTwoPi;
  for (size_t i = 0; i < merged.size(); ++i) {
    if (merged[i].second <= origin || merged[i].first >= end_of_period) continue;
    double gap_lo = merged[i].second;
    double gap_hi = (i + 1 < merged.size()) ? merged[i + 1].first : end_of_period;
    gap_hi = std::min(gap_hi, end_of_period);
    if (gap_hi - gap_lo > 1e-12 && gap_lo < end_of_period)
      kept.emplace_back(gap_lo, gap_hi);
  }
  return kept;
}

}  // namespace

BoundaryChain boundary_chain(const CheeseSpec& spec, int k) {
  if (k < 0 || k > static_cast<int>(spec.holes.size()))
    throw Error("invalid-spec", "truncation k out of range");
  // re-check pair transversality among the circles active at this truncation;
  // a violation signals a corrupted spec
  for (int i = 0; i <= k; ++i) {
    for (int j = i + 1; j <= k; ++j) {
      auto ang = circle_crossing_angle(spec.circle(i), spec.circle(j));
      if (ang && *ang < spec.min_crossing_angle)
        throw Error("degenerate-arrangement",
                    "circles " + std::to_string(i) + "," + std::to_string(j) +
                        " cross below the transversality angle at k=" + std::to_string(k));
    }
  }
  BoundaryChain chain;
  chain.truncation_k = k;
  for (int i = 0; i <= k; ++i) chain.circles.push_back(spec.circle(i));

  for (int i = 0; i <= k; ++i) {
    Circle c = spec.circle(i);
    std::vector<Mask> masks;
    for (int j = 1; j <= k; ++j) {
      if (j == i) continue;
      if (auto m = disc_mask(c, spec.holes[static_cast<size_t>(j - 1)])) {
        // a mask boundary too close to another mask boundary would mean a
        // near-tangency the spec invariants exclude
        masks.push_back(*m);
      }
    }
    if (i >= 1) {
      if (auto m = outside_unit_mask(c)) masks.push_back(*m);
    }
    for (auto [lo, hi] : kept_intervals(std::move(masks))) {
      if (hi - lo < 1e-10 && hi - lo < spec.min_crossing_angle * 1e-3)
        throw Error("degenerate-arrangement",
                    "vanishing arc on circle " + std::to_string(i));
      ArcSegment arc;
      arc.circle_index = i;
      if (i == 0) {
        arc.orientation = +1;
        arc.start_angle = lo;
        arc.end_angle = hi;
      } else {
        arc.orientation = -1;
        arc.start_angle = hi;
        arc.end_angle = lo;
      }
      chain.arcs.push_back(arc);
    }
  }
  return chain;
}

Complex BoundaryChain::arc_point(const ArcSegment& a, double t) const {
  const Circle& c = circles.at(static_cast<size_t>(a.circle_index));
  double th = a.start_angle + t * (a.end_angle - a.start_angle);
  return c.center + c.radius * Complex(std::cos(th), std::sin(th));
}

Complex BoundaryChain::arc_velocity(const ArcSegment& a, double t) const {
  const Circle& c = circles.at(static_cast<size_t>(a.circle_index));
  double th = a.start_angle + t * (a.end_angle - a.start_angle);
  return Complex(0.0, 1.0) * c.radius * Complex(std::cos(th), std::sin(th)) *
         (a.end_angle - a.start_angle);
}

double chain_closure_defect(const BoundaryChain& chain) {
  Complex s = 0.0;
  for (const auto& a : chain.arcs) s += chain.arc_point(a, 1.0) - chain.arc_point(a, 0.0);
  return std::abs(s);
}

double chain_length(const BoundaryChain& chain) {
  double len = 0.0;
  for (const auto& a : chain.arcs)
    len += chain.circles[static_cast<size_t>(a.circle_index)].radius * a.angular_extent();
  return len;
}

Complex moment_zbar_closed_form(const BoundaryChain& chain) {
  // per arc: integral of conj(z) dz = r conj(c) (e^{i b} - e^{i a}) + i r^2 (b - a)
  Complex total = 0.0;
  for (const auto& arc : chain.arcs) {
    const Circle& c = chain.circles[static_cast<size_t>(arc.circle_index)];
    double a = arc.start_angle, b = arc.end_angle;
    Complex ea(std::cos(a), std::sin(a)), eb(std::cos(b), std::sin(b));
    total += c.radius * std::conj(c.center) * (eb - ea) +
             Complex(0.0, 1.0) * c.radius * c.radius * (b - a);
  }
  return total;
}

bool in_truncation(const CheeseSpec& spec, int k, Complex z, double tol) {
  return truncation_margin(spec, k, z) >= -tol;
}

double truncation_margin(const CheeseSpec& spec, int k, Complex z) {
  double m = 1.0 - std::abs(z);
  for (int j = 1; j <= k; ++j) {
    const Disc& d = spec.holes[static_cast<size_t>(j - 1)];
    m = std::min(m, std::abs(z - d.center) - d.radius);
  }
  return m;
}

AreaResult area(const CheeseSpec& spec, int k, AreaMethod method, std::uint64_t samples) {
  if (k < 0 || k > static_cast<int>(spec.holes.size()))
    throw Error("invalid-spec", "truncation k out of range");
  if (method == AreaMethod::boundary_integral) {
    BoundaryChain chain = boundary_chain(spec, k);
    Complex m = moment_zbar_closed_form(chain);
    double val = 0.5 * std::abs(m.imag());
    return AreaResult{val, 1e-13 * (1.0 + val)};
  }

  // Monte Carlo over [-1,1]^2, fixed-size blocks with per-block seeded
  // streams; the tally is a sum of per-block integer counts, so the result is
  // independent of how blocks are scheduled over workers.
  const std::uint64_t block = 1 << 16;
  std::uint64_t nblocks = (samples + block - 1) / block;
  // hot loop: squared distances only
  std::vector<double> cx(static_cast<size_t>(k)), cy(static_cast<size_t>(k)),
      r2(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) {
    cx[static_cast<size_t>(j)] = spec.holes[static_cast<size_t>(j)].center.real();
    cy[static_cast<size_t>(j)] = spec.holes[static_cast<size_t>(j)].center.imag();
    r2[static_cast<size_t>(j)] = spec.holes[static_cast<size_t>(j)].radius *
                                 spec.holes[static_cast<size_t>(j)].radius;
  }
  auto run_block = [&](std::uint64_t b) -> std::uint64_t {
    Rng rng = Rng::stream(spec.seed ^ 0xa5a5a5a5ULL, b);
    std::uint64_t n = std::min<std::uint64_t>(block, samples - b * block);
    std::uint64_t h = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      double x = rng.uniform(-1.0, 1.0);
      double y = rng.uniform(-1.0, 1.0);
      if (x * x + y * y > 1.0) continue;
      bool inside = true;
      for (size_t j = 0; j < static_cast<size_t>(k); ++j) {
        double dx = x - cx[j], dy = y - cy[j];
        if (dx * dx + dy * dy < r2[j]) {
          inside = false;
          break;
        }
      }
      if (inside) ++h;
    }
    return h;
  };
  unsigned workers = std::min<std::uint64_t>(worker_cap(), std::max<std::uint64_t>(1, nblocks));
  std::uint64_t hits = 0;
  if (workers <= 1) {
    for (std::uint64_t b = 0; b < nblocks; ++b) hits += run_block(b);
  } else {
    std::vector<std::uint64_t> partial(workers, 0);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        std::uint64_t h = 0;
        for (std::uint64_t b = w; b < nblocks; b += workers) h += run_block(b);
        partial[w] = h;
      });
    }
    for (auto& th : pool) th.join();
    for (std::uint64_t h : partial) hits += h;
  }
  double p = static_cast<double>(hits) / static_cast<double>(samples);
  double val = 4.0 * p;
  double sigma = 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  return AreaResult{val, sigma};
}

}  // namespace cheese
