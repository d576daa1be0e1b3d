#include <doctest.h>

#include <filesystem>

#include "cheese/io.hpp"

using namespace cheese;

TEST_CASE("spec JSON round-trips losslessly and deterministically") {
  CheeseSpec spec = generate_cheese(42, 0.5, 20, 0.01);
  Json j = spec_to_json(spec);
  CheeseSpec back = spec_from_json(j);
  CHECK(back.seed == spec.seed);
  CHECK(back.radius_budget == spec.radius_budget);
  REQUIRE(back.holes.size() == spec.holes.size());
  for (size_t i = 0; i < spec.holes.size(); ++i) {
    CHECK(back.holes[i].center == spec.holes[i].center);
    CHECK(back.holes[i].radius == spec.holes[i].radius);
  }
  CHECK(spec_to_json(back).dump() == j.dump());
}

TEST_CASE("tower JSON round-trips bit-exactly") {
  CheeseSpec spec = generate_cheese(42, 0.5, 8, 0.01);
  Tolerances tol;
  TowerWork work;
  TowerSpec t = build_exp_tower(spec, 2, 4, 42, {4, 8}, 1.0, tol, work);
  Json j = tower_to_json(t);
  TowerSpec back = tower_from_json(j);
  CHECK(tower_to_json(back).dump() == j.dump());
  // stage data survives exactly
  REQUIRE(back.exp_stages.size() == 2);
  CHECK(back.exp_stages[0].c == t.exp_stages[0].c);
  CHECK(back.exp_stages[0].m == t.exp_stages[0].m);
  CHECK(back.exp_stages[1].cut_certs.at(8).crossings.size() ==
        t.exp_stages[1].cut_certs.at(8).crossings.size());
  // a reloaded tower reproduces measures（certificates drive the splits)
  TowerWork wa, wb;
  MeasureReport ra = boundary_measure(t, 2, 8, MeasureMethod::direct, wa, 1e-10);
  MeasureReport rb = boundary_measure(back, 2, 8, MeasureMethod::direct, wb, 1e-10);
  CHECK(ra.total_variation == rb.total_variation);
  CHECK(ra.moment_zbar == rb.moment_zbar);
}

TEST_CASE("sqrt tower JSON round-trip") {
  Tolerances tol;
  TowerSpec t = build_sqrt_tower(3, 4, 7, tol);
  Json j = tower_to_json(t);
  TowerSpec back = tower_from_json(j);
  CHECK(tower_to_json(back).dump() == j.dump());
  CHECK(back.sqrt_stages[2].alpha == t.sqrt_stages[2].alpha);
}

TEST_CASE("config round-trips losslessly") {
  RunConfig c;
  c.seed = 123456789012345ULL;
  c.radius_budget = 0.5;
  c.k_list = {5, 10, 20};
  c.stages = 3;
  c.tower_kind = TowerKind::square_root;
  c.tol.quadrature = 1e-11;
  Json j = config_to_json(c);
  RunConfig back = config_from_json(j);
  CHECK(back == c);
  CHECK(config_to_json(back).dump() == j.dump());
}

TEST_CASE("version guard rejects unknown majors") {
  Json j{{"version", 2}, {"seed", 1}};
  CHECK_THROWS_AS(check_version(j, 1, "doc"), Error);
  Json missing{{"seed", 1}};
  CHECK_THROWS_AS(check_version(missing, 1, "doc"), Error);
}

TEST_CASE("chain CSV and SVG carry the expected structure") {
  CheeseSpec spec0 = generate_cheese(1, 0.5, 0, 0.01);
  std::string svg0 = cheese_svg(spec0, 0);
  CHECK(std::count(svg0.begin(), svg0.end(), '\n') > 2);
  size_t circles0 = 0;
  for (size_t pos = 0; (pos = svg0.find("<circle", pos)) != std::string::npos; ++pos)
    ++circles0;
  CHECK(circles0 == 1);

  CheeseSpec spec5 = generate_cheese(3, 0.5, 5, 0.01);
  std::string svg5 = cheese_svg(spec5, 5);
  size_t circles5 = 0;
  for (size_t pos = 0; (pos = svg5.find("<circle", pos)) != std::string::npos; ++pos)
    ++circles5;
  CHECK(circles5 == 6);

  BoundaryChain chain = boundary_chain(spec5, 5);
  std::string csv = chain_to_csv(chain);
  CHECK(csv.rfind("circle_index,start_angle,end_angle,orientation", 0) == 0);
  CHECK(static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n')) ==
        chain.arcs.size() + 1);
}

TEST_CASE("exact decimal strings round-trip doubles") {
  for (double v : {0.1, kPi, 1e-300, -2.5e17, 0.0}) {
    Json j = dump_double(v);
    CHECK(parse_double(j) == v);
  }
}

TEST_CASE("lifted path CSV carries one re/im pair per coordinate") {
  TowerShape sh;
  sh.kind = TowerKind::exponential;
  sh.stages.push_back(
      StageDef{RationalFunction(Polynomial::variable(0, 1)), -9.0, 9.0});
  Curve base;
  base.base = Curve::Base::arc;
  base.center = 0.0;
  base.radius = 1.0;
  base.th0 = 0.0;
  base.th1 = kPi;
  base.nslots = 1;
  base.ts = {0.0, 1.0};
  base.zs = {CVec{Complex(1.0, 0.0)}, CVec{Complex(-1.0, 0.0)}};
  LiftedPath lp = lift_path(base, sh, CVec{Complex(1.0, 0.0), Complex(0.0, 0.0)}, 0.35,
                            1e-9, 1e-12);
  std::string csv = lifted_path_to_csv(lp.curve);
  CHECK(csv.rfind("t,z1_re,z1_im,z2_re,z2_im", 0) == 0);
  CHECK(static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n')) ==
        lp.curve.ts.size() + 1);
}

TEST_CASE("atomic_write replaces files and creates directories") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "cheese_io_test";
  fs::remove_all(dir);
  std::string p = (dir / "sub" / "x.json").string();
  atomic_write(p, "alpha");
  CHECK(read_file(p) == "alpha");
  atomic_write(p, "beta");
  CHECK(read_file(p) == "beta");
  CHECK(!fs::exists(p + ".tmp"));
  fs::remove_all(dir);
}
