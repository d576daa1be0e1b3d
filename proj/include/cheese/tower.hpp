#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>

#include "cheese/lift.hpp"
#include "cheese/schedule.hpp"

namespace cheese {

/// One transversal crossing of arg f with the cut level along a region
/// boundary curve.  Splitting of lifted boundary pieces reuses these
/// locations; they are not re-detected downstream.
struct CutCrossing {
  int curve_id = 0;
  double t = 0.0;
  double margin = 0.0;  // |d(arg f)/ds|, s = z1 arclength
};

struct CutLevelCert {
  double c = 0.0;
  double min_margin = 0.0;
  double min_endpoint_gap = 0.0;  // distance mod 2pi of c from arg f at boundary corners
  std::vector<CutCrossing> crossings;
};

struct ExpStage {
  int level = 0;
  RationalFunction f;
  double c = 0.0;
  int m = 1;
  ScheduleIndex sched;
  std::pair<int, int> dict_source;      // (level, j), j 1-based
  std::map<int, CutLevelCert> cut_certs;  // per truncation k
  std::map<int, double> cut_length;       // z1-length of the cut set (single copy), per k
  double zero_free_margin = 0.0;          // min |f| over certification samples
};

struct SqrtStage {
  int level = 0;
  RationalFunction q;  // stage function before the alpha shift
  Complex alpha;
  double regular_value_margin = 0.0;
  ScheduleIndex sched;
  std::pair<int, int> dict_source;
};

struct DictEntry {
  RationalFunction g;
  double zero_free_margin = 0.0;
};

struct Tolerances {
  double quadrature = 1e-10;
  double lift = 1e-9;
  double transversality = 1e-3;
  double zero_free = 1e-3;
  double max_step_arg = 0.35;
  double triple_sep = 1e-6;

  bool operator==(const Tolerances&) const = default;
};

struct TowerSpec {
  TowerKind kind = TowerKind::exponential;
  std::optional<CheeseSpec> base;  // nullopt: unit disc (square-root tower)
  std::vector<ExpStage> exp_stages;
  std::vector<SqrtStage> sqrt_stages;
  std::map<int, std::vector<DictEntry>> dictionaries;  // per checkpoint level
  std::vector<int> k_list;
  int k_floor = 0;  // dictionary zeros/poles confined to holes <= k_floor
  std::uint64_t seed = 0;
  double target_delta = 1.0;
  Tolerances tol;

  int levels() const {
    return static_cast<int>(kind == TowerKind::exponential ? exp_stages.size()
                                                           : sqrt_stages.size());
  }
  /// Defining relations for stages 1..upto (all stages when upto < 0).
  TowerShape shape(int upto = -1) const;
  /// Exp sheet counts m_1..m_N.
  std::vector<int> sheet_counts() const;
  double sheet_product(int N) const;  // m_1 * ... * m_N
};

/// Transient per-run caches (regions, traced cuts); deterministic rebuilds.
struct TowerWork {
  std::map<std::pair<int, int>, std::vector<Curve>> regions;  // (N, k) -> boundary of X_N^k
  std::map<std::pair<int, int>, std::vector<Curve>> cuts;     // (stage, k) -> traced cut set
};

/// The stage-N function dictated by the sigma schedule (condition-(6) wiring).
/// For square-root towers this is q_N, before the alpha shift.
RationalFunction next_function(const TowerSpec& tower, int N);

/// J seeded rational functions in z1..z_{level+1}, each certified zero-free on
/// the level's region by boundary + fiber-grid sampling.
std::vector<DictEntry> build_dictionary(const TowerSpec& tower, int level, int J,
                                        std::uint64_t seed, TowerWork& work);

/// Oriented boundary curves of X_N^k (exponential towers).
const std::vector<Curve>& region_boundary(const TowerSpec& tower, int N, int k,
                                          TowerWork& work);

/// Certify one cut level candidate against the stage-(M-1) region at truncation
/// k.  Returns nullopt when some crossing or corner check fails.
std::optional<CutLevelCert> certify_cut_level(const RationalFunction& f,
                                              const TowerSpec& tower, int region_stage,
                                              int k, double c, TowerWork& work);

/// Draw seeded candidates until one passes certify_cut_level.
CutLevelCert choose_cut_level(const RationalFunction& f, const TowerSpec& tower,
                              int region_stage, int k, std::uint64_t seed,
                              TowerWork& work);

/// Least m >= 1 with m * prev_delta - cut_cost_C >= target_delta.
int choose_sheet_count(double prev_norm, double prev_delta, double cut_cost_C,
                       double target_delta);

/// Regular-value selection for square-root stages: alpha with |alpha| < 1/M
/// clear of the critical values of q on the stage region.
struct AlphaChoice {
  Complex alpha;
  double margin = 0.0;
  std::vector<Complex> critical_values;
};
AlphaChoice choose_alpha(const RationalFunction& q, const TowerSpec& tower, int M,
                         std::uint64_t seed);

/// Connected components of {arg f == c (mod 2pi)} inside X_{region_stage}^k,
/// traced from the certificate crossings, oriented with Re log f increasing.
/// Components carry slots z1..z_{region_stage+1} plus the continued log f.
std::vector<Curve> trace_cut_curves(const RationalFunction& f, double c,
                                    const TowerSpec& tower, int region_stage, int k,
                                    const CutLevelCert& cert, TowerWork& work);

/// z1-length of traced curves (Simpson on the node grid; nodes are dense).
double cut_z1_length(const std::vector<Curve>& cuts, const TowerShape& shape);

/// Build drivers.  Stage data (c, m, alpha, certificates) is chosen so the
/// certificates hold simultaneously for every truncation in k_list.
TowerSpec build_exp_tower(const CheeseSpec& spec, int stages, int dict_size,
                          std::uint64_t seed, std::vector<int> k_list,
                          double target_delta, const Tolerances& tol, TowerWork& work);
TowerSpec build_sqrt_tower(int stages, int dict_size, std::uint64_t seed,
                           const Tolerances& tol);

/// Min |g| over region boundary anchors and an interior fiber grid.
double min_modulus_on_region(const TowerSpec& tower, int level, int k,
                             const RationalFunction& g, TowerWork& work,
                             double base_grid_step = 0.05);

/// Interior sample points of X_N^k: fibers over a base grid.
std::vector<CVec> region_sample_points(const TowerSpec& tower, int N, int k,
                                       double base_grid_step);

}  // namespace cheese
