#pragma once

#include <json.hpp>

#include "cheese/certify.hpp"

namespace cheese {

using Json = nlohmann::ordered_json;

/// Shortest decimal string that round-trips the double exactly.
std::string dump_double(double v);
double parse_double(const Json& j);

Json spec_to_json(const CheeseSpec& spec);
CheeseSpec spec_from_json(const Json& j);

Json rational_to_json(const RationalFunction& r);
RationalFunction rational_from_json(const Json& j);

Json tower_to_json(const TowerSpec& t);
TowerSpec tower_from_json(const Json& j);

Json report_to_json(const MeasureReport& r);
Json certificate_to_json(const Certificate& c);
Json nontriviality_to_json(const NontrivialityReport& r);
Json generator_report_to_json(const GeneratorReport& r);

std::string chain_to_csv(const BoundaryChain& chain);
/// t plus re/im pairs per coordinate, one row per anchor.
std::string lifted_path_to_csv(const Curve& curve);
/// Per-arc contributions of the stage-0 moment integral, for audit.
std::string chain_contributions_csv(const BoundaryChain& chain);

/// Cheese figure with optional cut-curve overlays (z1 projections).
std::string cheese_svg(const CheeseSpec& spec, int k,
                       const std::vector<Curve>* cuts = nullptr);

struct RunConfig {
  std::uint64_t seed = 1;
  double radius_budget = 0.5;
  int hole_count = 20;
  double min_crossing_angle = 0.01;
  std::vector<int> k_list{5, 10, 20};
  int stages = 2;
  TowerKind tower_kind = TowerKind::exponential;
  int dict_size = 6;
  double target_delta = 1.0;
  Tolerances tol;
  std::uint64_t mc_samples = 1000000;
  int test_count = 50;
  int direct_max_stage = 2;  // direct measures mandatory up to here, recursive beyond
  std::string out_dir = ".";

  bool operator==(const RunConfig&) const = default;
};

Json config_to_json(const RunConfig& c);
RunConfig config_from_json(const Json& j);

/// Versioned-document guard: throws on unknown major version.
void check_version(const Json& j, int expected_major, const std::string& what);

void atomic_write(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

std::uint64_t fnv1a(const std::string& s);

}  // namespace cheese
