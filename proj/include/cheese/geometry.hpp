#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cheese/common.hpp"

namespace cheese {

struct Disc {
  Complex center;
  double radius = 0.0;  // > 0
};

struct Circle {
  Complex center;
  double radius = 0.0;
};

/// A finite Swiss-cheese description: K = closed unit disc minus the open
/// holes.  Truncations X0^k remove only the first k holes.
struct CheeseSpec {
  std::vector<Disc> holes;
  double radius_budget = 0.0;  // sum of hole radii stays strictly below this
  std::uint64_t seed = 0;
  double min_crossing_angle = 0.0;  // radians; pairwise circle transversality

  double radius_sum() const;
  /// Circle #0 is the unit circle, #i (i>=1) bounds hole i.
  Circle circle(int index) const;
  int circle_count() const { return static_cast<int>(holes.size()) + 1; }
};

struct SpecCheckOptions {
  double triple_sep = 1e-6;  // min distance of a pair intersection to any third circle
};

/// Acute angle between the two circles at their intersection points,
/// or nullopt when the circles do not cross (disjoint or nested).
/// Tangency reports angle 0.
std::optional<double> circle_crossing_angle(const Circle& a, const Circle& b);

/// Throws Error on any violated CheeseSpec invariant.
void validate_spec(const CheeseSpec& spec, const SpecCheckOptions& opt = {});

struct GenOptions {
  int max_retries_per_hole = 2000;
  double triple_sep = 1e-6;
  double radius_decay = 0.75;     // geometric decay of the hole radius cap
  double radius_fill = 0.95;      // fraction of the budget the full series may use
};

/// Randomized placement with rejection until all invariants hold.
/// Pure function of its arguments: identical inputs give bit-identical specs.
CheeseSpec generate_cheese(std::uint64_t seed, double radius_budget, int hole_count,
                           double min_crossing_angle, const GenOptions& opt = {});

/// One maximal boundary arc.  start_angle/end_angle are in traversal order:
/// end > start for orientation +1 (counterclockwise, outer circle) and
/// end < start for orientation -1 (clockwise, hole circles).
/// |end - start| == 2pi marks a full circle.
struct ArcSegment {
  int circle_index = 0;  // 0 = unit circle, k >= 1 = hole k
  double start_angle = 0.0;
  double end_angle = 0.0;
  int orientation = +1;

  double angular_extent() const { return std::abs(end_angle - start_angle); }
  bool full_circle() const { return angular_extent() >= kTwoPi - 1e-12; }
};

/// Positively oriented piecewise-circular boundary of X0^k.
struct BoundaryChain {
  int truncation_k = 0;
  std::vector<ArcSegment> arcs;
  std::vector<Circle> circles;  // indexed by ArcSegment::circle_index

  Complex arc_point(const ArcSegment& a, double t) const;      // t in [0,1]
  Complex arc_velocity(const ArcSegment& a, double t) const;   // d z / d t
};

/// Arc decomposition of the boundary of X0^k = closed disc minus holes 1..k.
BoundaryChain boundary_chain(const CheeseSpec& spec, int k);

/// Defect of the closed-chain identity: |sum over arcs of (end point - start point)|.
double chain_closure_defect(const BoundaryChain& chain);

/// Total variation of the dz1-induced measure: sum of r * |angular extent|.
double chain_length(const BoundaryChain& chain);

enum class AreaMethod { boundary_integral, monte_carlo };

struct AreaResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Area of X0^k.  boundary_integral evaluates (1/2)|Im closed-integral of conj(z) dz|
/// in closed form per arc; monte_carlo throws `samples` points at [-1,1]^2 and
/// reports a binomial one-sigma error.  Results are independent of thread count.
AreaResult area(const CheeseSpec& spec, int k, AreaMethod method,
                std::uint64_t samples = 1000000);

/// Membership in X0^k (closed set), with a symmetric tolerance band.
bool in_truncation(const CheeseSpec& spec, int k, Complex z, double tol = 0.0);

/// Signed inclusion margin: >= 0 inside X0^k, < 0 outside; the binding
/// constraint is the minimum over circles.
double truncation_margin(const CheeseSpec& spec, int k, Complex z);

/// Exact integral of conj(z) dz over the chain (closed form on each arc).
Complex moment_zbar_closed_form(const BoundaryChain& chain);

/// Worker count for parallelizable kernels: CHEESE_THREADS when set, else the
/// hardware count.  Results never depend on this value.
unsigned worker_cap();

}  // namespace cheese
