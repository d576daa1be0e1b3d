#pragma once

#include <functional>
#include <optional>

#include "cheese/geometry.hpp"
#include "cheese/poly.hpp"

namespace cheese {

enum class TowerKind { exponential, square_root };

/// One defining relation.  Stage j (1-based) pins coordinate slot j
/// (z_{j+1} in paper counting) by exp z[j] = f(z[0..j-1]) or z[j]^2 = f(...).
/// Exp stages carry the closed window [win_lo, win_hi] for Im z[j].
struct StageDef {
  RationalFunction f;  // arity == stage level
  double win_lo = 0.0;
  double win_hi = 0.0;
};

struct TowerShape {
  TowerKind kind = TowerKind::exponential;
  std::vector<StageDef> stages;
  int levels() const { return static_cast<int>(stages.size()); }
};

/// |defining-equation residual| at slot `stage`, relative to 1 + |f|.
double stage_residual(const TowerShape& shape, const CVec& z, int stage);

struct LiftedPoint {
  CVec z;
  std::vector<double> residuals;  // per stage
};
LiftedPoint make_lifted_point(const TowerShape& shape, CVec z);

struct ContinueStatus {
  bool ok = true;
  double max_jump = 0.0;
  int bad_stage = 0;     // first stage whose jump exceeded the cap
  bool zero_hit = false; // some |f| fell below the floor
};

/// Continue slots 1..n (branch tracking) from the anchor point `z` to a new
/// base value.  Commits to `z` only on success; a failed status asks the
/// caller to subdivide the move.
ContinueStatus continue_point(const TowerShape& shape, CVec& z, Complex new_z1,
                              double max_jump, double zero_floor);

/// d z[i] / d z1 along the surface, i = 0..n (slot 0 gives 1).
CVec surface_jet(const TowerShape& shape, const CVec& z);

/// Derivative of g along the surface w.r.t. z1 at z, plus the value.
void surface_eval_grad(const TowerShape& shape, const RationalFunction& g, const CVec& z,
                       Complex& value, Complex& dz1);

/// All points of the fiber over p at stage N.  Exp: branch count per stage is
/// m or m+1 (window endpoints included).  Sqrt: all sign choices, 2^N when no
/// stage value vanishes.
std::vector<CVec> fiber(const TowerShape& shape, Complex p, int N,
                        double zero_tol = 1e-13);

/// Oriented curve on (the boundary of) a lifted region, carrying anchored
/// branch coordinates so that points anywhere along it can be recovered by
/// continuation rather than by principal-branch evaluation.
struct Curve {
  // polyline bases serve only as lift_path inputs (z1 interpolated through the
  // anchor nodes); region boundaries are arcs and cut curves.
  enum class Base { arc, cut, polyline };
  Base base = Base::arc;

  // arc geometry: z1(t) = center + radius e^{i theta(t)}, theta affine th0->th1
  Complex center;
  double radius = 0.0;
  double th0 = 0.0, th1 = 0.0;

  // cut geometry: slot `cut_slot` is pinned to Im == pin_im and
  // Re z[cut_slot] = u runs affinely u0 -> u1
  int cut_slot = 0;
  double pin_im = 0.0;
  double u0 = 0.0, u1 = 0.0;

  bool closed = false;  // full circle (no boundary joint at the seam)
  int nslots = 1;       // coordinate slots carried (region stage N -> N+1)
  int eclass = 0;       // 0: lifted piece (E_I side), 1: cut bottom copy, 2: top copy

  std::vector<double> ts;  // anchors, ascending, front()==0, back()==1
  std::vector<CVec> zs;

  CVec at(const TowerShape& shape, double t, Complex* dz1dt = nullptr) const;
  Complex z1_at(const TowerShape& shape, double t) const { return at(shape, t)[0]; }
  /// Coarse polyline length of the z1 projection through the anchors.
  double anchor_z1_length() const;
};

/// Make a (stage-0) curve from a boundary arc.
Curve curve_from_arc(const BoundaryChain& chain, const ArcSegment& arc);

/// Add anchors until consecutive anchor coordinate jumps stay below max_jump.
void densify_anchors(Curve& c, const TowerShape& shape, double max_jump,
                     double zero_floor);

struct LiftedPath {
  Curve curve;
  double max_step_arg = 0.0;
};

/// Analytic continuation of the defining relations over a base path.
/// branch_seed must satisfy the tower equations at the path start.
LiftedPath lift_path(const Curve& base, const TowerShape& shape, const CVec& branch_seed,
                     double max_step_arg, double lift_tol, double zero_floor);

/// Membership data for X_N^k (exp over a cheese) or X_N (sqrt over the disc).
struct RegionSpec {
  const CheeseSpec* cheese = nullptr;  // null: unit disc base
  int k = 0;
  const TowerShape* shape = nullptr;
  int stage = 0;

  /// >= 0 inside (binding constraint minimum: base inclusion and exp windows).
  double margin(const CVec& z) const;
};

/// Continued logarithm of f along a curve, with nodes dense enough that the
/// imaginary part moves by at most max_dw per node step.
struct WWalk {
  std::vector<double> ts;
  std::vector<Complex> ws;
};
WWalk continue_log_along(const Curve& c, const TowerShape& shape,
                         const RationalFunction& f, double max_dw, double zero_floor);

/// Solve Im w(t) == target (continued branch from the walk) in [t_lo, t_hi].
/// Returns the refined parameter and the transversality margin |d Im w / d s|
/// with s the z1 arclength.
struct CrossingRefinement {
  double t = 0.0;
  double margin = 0.0;
};
std::optional<CrossingRefinement> refine_crossing(const Curve& c, const TowerShape& shape,
                                                  const RationalFunction& f, double t_lo,
                                                  double t_hi, Complex w_lo, double target,
                                                  double zero_floor);

}  // namespace cheese
