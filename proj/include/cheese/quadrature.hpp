#pragma once

#include "cheese/tower.hpp"

namespace cheese {

/// Test integrands for the boundary measures d mu = dz1.
struct Integrand {
  enum class Kind { holomorphic_rational, conjugate_z1, constant_one };
  Kind kind = Kind::constant_one;
  RationalFunction g;       // rational kind only
  double pole_floor = 1e-6; // |den| certificate floor along the integration set

  static Integrand one() { return Integrand{Kind::constant_one, {}, 1e-6}; }
  static Integrand zbar() { return Integrand{Kind::conjugate_z1, {}, 1e-6}; }
  static Integrand rational(RationalFunction r, double floor = 1e-6) {
    return Integrand{Kind::holomorphic_rational, std::move(r), floor};
  }

  Complex eval(const CVec& z) const;
};

struct IntegralResult {
  Complex value;
  double error = 0.0;
  bool converged = true;
};

/// Adaptive Gauss-Kronrod integral of f dz1 along one curve.
IntegralResult integrate_form(const Curve& curve, const TowerShape& shape,
                              const Integrand& f, double tol);

/// Same over a stage-0 boundary chain.
IntegralResult integrate_form(const BoundaryChain& chain, const Integrand& f, double tol);

/// Total variation of the dz1-induced measure: integral of |dz1|.
double total_variation(const Curve& curve, const TowerShape& shape, double tol);
double total_variation(const BoundaryChain& chain);

enum class MeasureMethod { direct, recursive };

struct MeasureReport {
  int stage = 0;
  int truncation_k = 0;
  double total_variation = 0.0;
  Complex moment_zbar;
  double ei_variation = 0.0;
  double ej_variation = 0.0;
  Complex ei_moment;
  Complex ej_moment;
  double quadrature_error = 0.0;
  MeasureMethod method = MeasureMethod::direct;
};

/// The measure mu_N^k induced by dz1 on the boundary of X_N^k, with its
/// E_I / E_J decomposition.  `direct` lifts and integrates every boundary
/// piece; `recursive` applies the sheet multiplication law and the two-copy
/// cut cancellation stage by stage.
MeasureReport boundary_measure(const TowerSpec& tower, int N, int k, MeasureMethod method,
                               TowerWork& work, double tol = 1e-10);

/// Integral of g dz1 over the full region boundary at stage N (direct path),
/// split into E_I / E_J parts.
struct SplitIntegral {
  Complex ei, ej;
  double error = 0.0;
};
SplitIntegral integrate_over_region(const TowerSpec& tower, int N, int k,
                                    const Integrand& f, TowerWork& work, double tol);

/// Per-piece audit table of the direct measurement: one CSV row per boundary
/// piece with its class, z1-length, and conj(z1) dz1 contribution.
std::string region_contributions_csv(const TowerSpec& tower, int N, int k,
                                     TowerWork& work, double tol = 1e-10);

}  // namespace cheese
