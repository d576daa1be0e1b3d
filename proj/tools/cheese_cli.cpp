// Command-line front end: generates Swiss-cheese specs, builds covering
// towers, measures boundary forms, certifies the norm/moment inequalities,
// and emits reports/figures.

#include <CLI11.hpp>

#include <ctime>
#include <iostream>
#include <sstream>

#include "cheese/io.hpp"

using namespace cheese;

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  return dir + "/" + name;
}

Json meta_block() {
  // timestamps live here, outside the deterministic payload
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return Json{{"created_utc", buf}};
}

int cmd_gen_cheese(const RunConfig& cfg, const std::string& out) {
  CheeseSpec spec;
  try {
    spec = generate_cheese(cfg.seed, cfg.radius_budget, cfg.hole_count,
                           cfg.min_crossing_angle);
    validate_spec(spec);
  } catch (const Error& e) {
    std::cerr << "gen-cheese failed [" << e.code << "]: " << e.what() << "\n";
    return 2;
  }
  Json doc = spec_to_json(spec);
  doc["meta"] = meta_block();
  atomic_write(out, doc.dump(2) + "\n");
  double min_angle = 1e300;
  for (int i = 0; i < spec.circle_count(); ++i)
    for (int j = i + 1; j < spec.circle_count(); ++j)
      if (auto a = circle_crossing_angle(spec.circle(i), spec.circle(j)))
        min_angle = std::min(min_angle, *a);
  std::cout << "spec: " << out << "\n"
            << "holes: " << spec.holes.size() << "  sum radii: " << spec.radius_sum()
            << " < budget " << spec.radius_budget << "\n"
            << "min crossing angle: "
            << (min_angle > 1e299 ? std::string("n/a (no crossings)")
                                  : dump_double(min_angle))
            << "\n";
  return 0;
}

int cmd_build_tower(const RunConfig& cfg, const std::string& spec_path,
                    const std::string& out) {
  try {
    TowerSpec t;
    TowerWork work;
    if (cfg.tower_kind == TowerKind::exponential) {
      CheeseSpec spec = spec_from_json(Json::parse(read_file(spec_path)));
      t = build_exp_tower(spec, cfg.stages, cfg.dict_size, cfg.seed, cfg.k_list,
                          cfg.target_delta, cfg.tol, work);
    } else {
      t = build_sqrt_tower(cfg.stages, cfg.dict_size, cfg.seed, cfg.tol);
    }
    Json doc = tower_to_json(t);
    doc["meta"] = meta_block();
    atomic_write(out, doc.dump(2) + "\n");
    std::cout << "tower: " << out << "\n";
    if (t.kind == TowerKind::exponential) {
      for (const auto& st : t.exp_stages)
        std::cout << "stage " << st.level << ": c=" << dump_double(st.c) << " m=" << st.m
                  << " zero-free margin " << dump_double(st.zero_free_margin) << "\n";
    } else {
      for (const auto& st : t.sqrt_stages)
        std::cout << "stage " << st.level << ": |alpha|=" << std::abs(st.alpha) << " < 1/"
                  << st.level << "  margin " << dump_double(st.regular_value_margin)
                  << "\n";
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "build-tower failed [" << e.code << "]: " << e.what() << "\n";
    return 3;
  }
}

int cmd_measure(const RunConfig& cfg, const std::string& tower_path,
                const std::string& out, const std::string& audit_dir) {
  try {
    TowerSpec t = tower_from_json(Json::parse(read_file(tower_path)));
    TowerWork work;
    Json runs = Json::array();
    for (int N = 0; N <= t.levels(); ++N) {
      for (int k : t.k_list) {
        Json entry;
        entry["N"] = N;
        entry["k"] = k;
        MeasureReport rec =
            boundary_measure(t, N, k, MeasureMethod::recursive, work, cfg.tol.quadrature);
        entry["recursive"] = report_to_json(rec);
        if (N <= std::max(2, cfg.direct_max_stage)) {
          MeasureReport dir =
              boundary_measure(t, N, k, MeasureMethod::direct, work, cfg.tol.quadrature);
          entry["direct"] = report_to_json(dir);
          entry["moment_agreement_rel"] = dump_double(
              std::abs(dir.moment_zbar - rec.moment_zbar) /
              std::max(1e-300, std::abs(rec.moment_zbar)));
        }
        if (!audit_dir.empty() && N <= std::max(2, cfg.direct_max_stage)) {
          std::string name = "contributions_N" + std::to_string(N) + "_k" +
                             std::to_string(k) + ".csv";
          atomic_write(join_path(audit_dir, name),
                       region_contributions_csv(t, N, k, work, cfg.tol.quadrature));
        }
        runs.push_back(entry);
      }
    }
    Json doc{{"version", 1}, {"tower_hash", fnv1a(tower_to_json(t).dump())}, {"runs", runs}};
    doc["meta"] = meta_block();
    atomic_write(out, doc.dump(2) + "\n");
    std::cout << "measures: " << out << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "measure failed [" << e.code << "]: " << e.what() << "\n";
    return 3;
  }
}

int cmd_certify(const RunConfig& cfg, const std::string& tower_path,
                const std::string& out) {
  bool all_pass = true;
  try {
    TowerSpec t = tower_from_json(Json::parse(read_file(tower_path)));
    TowerWork work;
    double B_lb = t.base ? kPi * (1.0 - t.base->radius_budget * t.base->radius_budget)
                         : kPi;
    Json runs = Json::array();
    if (t.kind == TowerKind::exponential) {
      for (int N = 0; N <= t.levels(); ++N) {
        for (int k : t.k_list) {
          Json entry;
          entry["N"] = N;
          entry["k"] = k;
          MeasureReport rec = boundary_measure(t, N, k, MeasureMethod::recursive, work,
                                               cfg.tol.quadrature);
          entry["recursive"] = report_to_json(rec);
          MeasureReport use = rec;
          if (N <= std::max(2, cfg.direct_max_stage)) {
            MeasureReport dir = boundary_measure(t, N, k, MeasureMethod::direct, work,
                                                 cfg.tol.quadrature);
            entry["direct"] = report_to_json(dir);
            entry["moment_agreement_rel"] = dump_double(
                std::abs(dir.moment_zbar - rec.moment_zbar) /
                std::max(1e-300, std::abs(rec.moment_zbar)));
            use = dir;
          }
          Certificate cert =
              certify_conditions(use, t.sheet_product(N), B_lb, t.target_delta);
          entry["certificate"] = certificate_to_json(cert);
          all_pass = all_pass && cert.pass_condition_8 && cert.pass_condition_9;
          runs.push_back(entry);
        }
      }
      // nontriviality at the deepest direct stage, largest truncation
      int N_gap = std::min(t.levels(), 2);
      int k_gap = t.k_list.back();
      MeasureReport rep =
          boundary_measure(t, N_gap, k_gap, MeasureMethod::direct, work, cfg.tol.quadrature);
      std::vector<RationalFunction> tests =
          make_test_family(t, N_gap, cfg.test_count, splitmix_of(t.seed, 0x6a9));
      std::vector<CVec> samples = region_sample_points(t, N_gap, k_gap, 0.04);
      NontrivialityReport nr =
          nontriviality_gap(t, N_gap, k_gap, rep, tests, samples, work, cfg.tol.quadrature);
      nr.theoretical_floor = B_lb / kTwoPi;
      Json nrj = nontriviality_to_json(nr);
      nrj["N"] = N_gap;
      nrj["k"] = k_gap;
      bool gap_ok = nr.gap >= nr.theoretical_floor - 1e-4;
      nrj["pass"] = gap_ok;
      all_pass = all_pass && gap_ok;

      // density residuals over nested dictionaries on the stage-0 boundary
      BoundaryChain chain = boundary_chain(*t.base, t.k_floor);
      std::vector<BoundarySample> bs = chain_samples(chain, 60);
      for (auto& s : bs) s.target = s.z.real();
      std::vector<RationalFunction> dict;
      for (const auto& e : t.dictionaries.at(0)) dict.push_back(e.g);
      Json dens = Json::array();
      double prev = 1e300;
      bool dens_ok = true;
      for (size_t sz = 1; sz <= dict.size(); ++sz) {
        std::vector<RationalFunction> sub(dict.begin(), dict.begin() + static_cast<long>(sz));
        DirichletResult dr = dirichlet_residual(bs, sub, FitNorm::L2);
        dens_ok = dens_ok && dr.residual <= prev + 1e-12;
        prev = dr.residual;
        // sup-norm refinement pass on the same dictionary, reported alongside
        DirichletResult ds = dirichlet_residual(bs, sub, FitNorm::sup);
        dens.push_back(Json{{"dict_size", sz},
                            {"residual_l2", dump_double(dr.residual)},
                            {"residual_sup", dump_double(ds.residual)},
                            {"ill_conditioned", dr.ill_conditioned}});
      }
      all_pass = all_pass && dens_ok;

      Json doc{{"version", 1},
               {"spec_hash", fnv1a(spec_to_json(*t.base).dump())},
               {"tower_hash", fnv1a(tower_to_json(t).dump())},
               {"B_lb", dump_double(B_lb)},
               {"runs", runs},
               {"nontriviality", nrj},
               {"density", Json{{"target", "Re z"}, {"nested", dens}, {"pass", dens_ok}}},
               {"all_pass", all_pass}};
      doc["meta"] = meta_block();
      atomic_write(out, doc.dump(2) + "\n");
    } else {
      // square-root tower: fiber counts, alpha bounds, halving identity
      TowerShape sh = t.shape();
      Rng rng = Rng::stream(t.seed, 0xF1BE);
      int N = t.levels();
      bool fibers_ok = true;
      std::vector<CVec> all;
      for (int i = 0; i < 100; ++i) {
        Complex p = 0.98 * rng.unit_disc();
        auto pts = fiber(sh, p, N);
        fibers_ok = fibers_ok &&
                    pts.size() == (static_cast<size_t>(1) << static_cast<unsigned>(N));
        for (auto& z : pts) all.push_back(std::move(z));
      }
      bool alpha_ok = true;
      for (const auto& st : t.sqrt_stages)
        alpha_ok = alpha_ok && std::abs(st.alpha) < 1.0 / st.level;
      int skipped = 0;
      double halving = halving_identity_check(t, all, &skipped);
      bool halving_ok = halving <= 1e-12;
      all_pass = fibers_ok && alpha_ok && halving_ok;
      Json doc{{"version", 1},
               {"tower_hash", fnv1a(tower_to_json(t).dump())},
               {"fiber_cardinality_pass", fibers_ok},
               {"alpha_bound_pass", alpha_ok},
               {"halving_max_residual", dump_double(halving)},
               {"halving_pass", halving_ok},
               {"all_pass", all_pass}};
      doc["meta"] = meta_block();
      atomic_write(out, doc.dump(2) + "\n");
    }
    std::cout << "verdict: " << out << (all_pass ? "  (all pass)" : "  (FAILURES)") << "\n";
    return all_pass ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "certify failed [" << e.code << "]: " << e.what() << "\n";
    return 3;
  }
}

int cmd_report(const std::string& spec_path, const std::string& tower_path,
               const std::string& verdict_path, const std::string& out_dir) {
  try {
    CheeseSpec spec = spec_from_json(Json::parse(read_file(spec_path)));
    std::vector<Curve> cuts;
    int k_draw = static_cast<int>(spec.holes.size());
    if (!tower_path.empty()) {
      TowerSpec t = tower_from_json(Json::parse(read_file(tower_path)));
      if (t.kind == TowerKind::exponential && t.levels() >= 1) {
        TowerWork work;
        k_draw = t.k_list.back();
        const ExpStage& st = t.exp_stages[0];
        cuts = trace_cut_curves(st.f, st.c, t, 0, k_draw, st.cut_certs.at(k_draw), work);
      }
    }
    atomic_write(join_path(out_dir, "cheese.svg"),
                 cheese_svg(spec, k_draw, cuts.empty() ? nullptr : &cuts));
    BoundaryChain chain = boundary_chain(spec, k_draw);
    atomic_write(join_path(out_dir, "boundary_chain.csv"), chain_to_csv(chain));
    atomic_write(join_path(out_dir, "arc_contributions.csv"),
                 chain_contributions_csv(chain));

    std::ostringstream summary;
    summary << "cheese: " << spec.holes.size() << " holes, budget "
            << dump_double(spec.radius_budget) << ", sum radii "
            << dump_double(spec.radius_sum()) << "\n";
    if (!verdict_path.empty()) {
      Json v = Json::parse(read_file(verdict_path));
      if (v.contains("runs"))
        for (const auto& run : v.at("runs")) {
          const Json& cert = run.at("certificate");
          summary << "N=" << run.at("N") << " k=" << run.at("k") << " |mu|="
                  << cert.at("lhs_norm").get<std::string>()
                  << " cond8=" << (cert.at("pass_condition_8").get<bool>() ? "pass" : "FAIL")
                  << " cond9=" << (cert.at("pass_condition_9").get<bool>() ? "pass" : "FAIL")
                  << "\n";
        }
      if (v.contains("all_pass"))
        summary << "all_pass: " << (v.at("all_pass").get<bool>() ? "true" : "false") << "\n";
    }
    atomic_write(join_path(out_dir, "summary.txt"), summary.str());
    std::cout << "report written to " << out_dir << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "report failed [" << e.code << "]: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Swiss-cheese covering-tower construction and certification"};
  app.require_subcommand(1);

  std::string config_path;
  RunConfig cfg;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config; flags override");
  };

  auto* gen = app.add_subcommand("gen-cheese", "generate a Swiss-cheese spec");
  std::string gen_out = "cheese.json";
  add_config(gen);
  gen->add_option("--seed", cfg.seed, "RNG seed");
  gen->add_option("--budget", cfg.radius_budget, "radius budget in (0,1)");
  gen->add_option("--holes", cfg.hole_count, "number of holes");
  gen->add_option("--min-angle", cfg.min_crossing_angle, "transversality angle");
  gen->add_option("--out", gen_out, "output spec path");

  auto* bld = app.add_subcommand("build-tower", "build a covering tower over a spec");
  std::string bld_spec = "cheese.json", bld_out = "tower.json", bld_kind = "exp";
  add_config(bld);
  bld->add_option("--spec", bld_spec, "cheese spec path (exp kind)");
  bld->add_option("--kind", bld_kind, "exp|sqrt")->check(CLI::IsMember({"exp", "sqrt"}));
  bld->add_option("--stages", cfg.stages, "stage count N");
  bld->add_option("--dict", cfg.dict_size, "dictionary entries per level");
  bld->add_option("--seed", cfg.seed, "RNG seed");
  bld->add_option("--k", cfg.k_list, "truncation list");
  bld->add_option("--target-delta", cfg.target_delta, "condition-(8) margin target");
  bld->add_option("--out", bld_out, "output tower path");

  auto* mea = app.add_subcommand("measure", "boundary measures for all (N,k)");
  std::string mea_tower = "tower.json", mea_out = "measures.json", mea_audit;
  add_config(mea);
  mea->add_option("--tower", mea_tower, "tower path");
  mea->add_option("--out", mea_out, "output path");
  mea->add_option("--audit-dir", mea_audit, "write per-piece contribution CSVs here");

  auto* cer = app.add_subcommand("certify", "run all certificates and write a verdict");
  std::string cer_tower = "tower.json", cer_out = "verdict.json";
  add_config(cer);
  cer->add_option("--tower", cer_tower, "tower path");
  cer->add_option("--tests", cfg.test_count, "nontriviality test family size");
  cer->add_option("--out", cer_out, "output verdict path");

  auto* rep = app.add_subcommand("report", "emit SVG/CSV/summary artifacts");
  std::string rep_spec = "cheese.json", rep_tower, rep_verdict, rep_dir = ".";
  add_config(rep);
  rep->add_option("--spec", rep_spec, "cheese spec path");
  rep->add_option("--tower", rep_tower, "tower path (optional: cut overlays)");
  rep->add_option("--verdict", rep_verdict, "verdict path (optional: summary)");
  rep->add_option("--out-dir", rep_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (!config_path.empty()) {
    try {
      cfg = config_from_json(Json::parse(read_file(config_path)));
    } catch (const Error& e) {
      std::cerr << "config error [" << e.code << "]: " << e.what() << "\n";
      return 2;
    }
    // flags override file values
    CLI11_PARSE(app, argc, argv);
  }

  try {
    if (gen->parsed()) {
      if (!(cfg.radius_budget > 0.0 && cfg.radius_budget < 1.0)) {
        std::cerr << "gen-cheese: budget must lie in (0,1)\n";
        return 2;
      }
      return cmd_gen_cheese(cfg, gen_out);
    }
    if (bld->parsed()) {
      cfg.tower_kind = bld_kind == "exp" ? TowerKind::exponential : TowerKind::square_root;
      return cmd_build_tower(cfg, bld_spec, bld_out);
    }
    if (mea->parsed()) return cmd_measure(cfg, mea_tower, mea_out, mea_audit);
    if (cer->parsed()) return cmd_certify(cfg, cer_tower, cer_out);
    if (rep->parsed()) return cmd_report(rep_spec, rep_tower, rep_verdict, rep_dir);
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
