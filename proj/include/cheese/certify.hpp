#pragma once

#include "cheese/quadrature.hpp"

namespace cheese {

/// Pass/fail record for the stage norm bound and the moment lower bound.
struct Certificate {
  int stage = 0;
  int truncation_k = 0;
  double lhs_norm = 0.0;        // ||mu_N^k||
  double rhs_norm_bound = 0.0;  // 4 pi m1..mN - target_delta
  double delta_margin = 0.0;    // achieved: 4 pi m1..mN - lhs_norm
  double target_delta = 0.0;
  double moment_abs = 0.0;
  double moment_bound = 0.0;  // 2 B_lb m1..mN
  double B_lb = 0.0;
  bool pass_condition_8 = false;
  bool pass_condition_9 = false;
};

/// Pure predicate over a measure report; failure is a valid certificate.
Certificate certify_conditions(const MeasureReport& rep, double sheet_product, double B_lb,
                               double target_delta);

/// Recompute the pass booleans from the stored fields (soundness check).
bool certificate_sound(const Certificate& c);

struct NontrivialityReport {
  double gap = 0.0;                  // min over tests of |I(zbar - g)| / ||mu||
  double theoretical_floor = 0.0;    // B_lb / 2pi
  double sampled_sup_norm_min = 0.0; // min over tests of sampled ||zbar - g||
  double annihilation_max = 0.0;     // max over tests of |I(g)|
  double max_test_norm = 0.0;        // max over tests of sampled ||g||
  int tests_run = 0;
  int tests_skipped = 0;  // pole-proximity
};

/// The Stokes-annihilation lower bound on the distance from conj(z1) to every
/// holomorphic rational test function, plus sampled sup-norm corroboration.
NontrivialityReport nontriviality_gap(const TowerSpec& tower, int N, int k,
                                      const MeasureReport& rep,
                                      const std::vector<RationalFunction>& tests,
                                      const std::vector<CVec>& sample_points,
                                      TowerWork& work, double tol = 1e-10);

/// Seeded family of holomorphic rational test functions (polynomials plus
/// hole-pole Moebius combinations), pole-free near the region.
std::vector<RationalFunction> make_test_family(const TowerSpec& tower, int N, int count,
                                               std::uint64_t seed);

enum class FitNorm { L2, sup };

struct BoundarySample {
  Complex z;
  double weight = 1.0;
  double target = 0.0;  // u(z)
};

struct DirichletResult {
  double residual = 0.0;  // weighted RMS (L2) or max (sup)
  std::vector<double> coefficients;
  double condition = 0.0;
  bool ill_conditioned = false;
};

/// Best real-linear fit of sum_i t_i log|g_i| to the target values.
/// Nested dictionaries on the same samples give nonincreasing residuals.
DirichletResult dirichlet_residual(const std::vector<BoundarySample>& samples,
                                   const std::vector<RationalFunction>& dictionary,
                                   FitNorm norm);

/// Boundary samples with arc-length weights covering every arc of the chain.
std::vector<BoundarySample> chain_samples(const BoundaryChain& chain, int per_unit_length);

/// Max over samples and stages of | log|z_{n+1}| - (1/2) log|f_n| |.
/// Samples with a vanishing stage value are skipped and counted.
double halving_identity_check(const TowerSpec& tower, const std::vector<CVec>& fibers,
                              int* skipped = nullptr);

enum class GenCase { log_case, inverse_case };

/// One member of the generator sequence, sampled on shared points.
struct GenFunction {
  GenCase tag = GenCase::log_case;
  std::vector<Complex> values;    // f_n at the sample points
  std::vector<Complex> h_values;  // inverse case only: h_n with f_n = 1/h_n
};

struct GeneratorReport {
  int start_index = 0;               // global index of the first function (N+1)
  std::vector<double> coefficients;  // c_n
  std::vector<GenCase> tags;
  bool cond_i = false, cond_ii = false, cond_iii = false, cond_iv = false;
  std::vector<double> recovery_residuals;  // per position, Case I or II
};

/// Greedy coefficient scheme: c_n at half the tightest active constraint,
/// with geometric reservation of the log-case tail budgets.  All four
/// conditions are re-verified post hoc and the Case I/II recoveries are
/// evaluated pointwise on the samples.
GeneratorReport generator_coefficients(const std::vector<GenFunction>& fns, int start_index);

}  // namespace cheese
