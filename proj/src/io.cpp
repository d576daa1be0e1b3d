#include "cheese/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cheese {

std::string dump_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("io-error", "double formatting failed");
  return std::string(buf, p);
}

double parse_double(const Json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error("io-error", "bad double literal: " + s);
  return v;
}

static Json complex_to_json(Complex z) {
  return Json::array({dump_double(z.real()), dump_double(z.imag())});
}
static Complex complex_from_json(const Json& j) {
  return Complex(parse_double(j.at(0)), parse_double(j.at(1)));
}

Json spec_to_json(const CheeseSpec& spec) {
  Json holes = Json::array();
  for (const auto& h : spec.holes)
    holes.push_back(Json{{"re", dump_double(h.center.real())},
                         {"im", dump_double(h.center.imag())},
                         {"radius", dump_double(h.radius)}});
  return Json{{"version", 1},
              {"seed", spec.seed},
              {"radius_budget", dump_double(spec.radius_budget)},
              {"min_crossing_angle", dump_double(spec.min_crossing_angle)},
              {"holes", holes}};
}

CheeseSpec spec_from_json(const Json& j) {
  check_version(j, 1, "cheese spec");
  CheeseSpec spec;
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.radius_budget = parse_double(j.at("radius_budget"));
  spec.min_crossing_angle = parse_double(j.at("min_crossing_angle"));
  for (const auto& h : j.at("holes"))
    spec.holes.push_back(
        Disc{Complex(parse_double(h.at("re")), parse_double(h.at("im"))),
             parse_double(h.at("radius"))});
  return spec;
}

static Json poly_to_json(const Polynomial& p) {
  Json terms = Json::array();
  for (const auto& t : p.terms()) {
    Json e = Json::array();
    for (unsigned x : t.exps) e.push_back(x);
    terms.push_back(Json{{"c", complex_to_json(t.coef)}, {"e", e}});
  }
  return Json{{"arity", p.arity()}, {"terms", terms}};
}

static Polynomial poly_from_json(const Json& j) {
  Polynomial p(j.at("arity").get<unsigned>());
  for (const auto& t : j.at("terms")) {
    std::vector<unsigned> e;
    for (const auto& x : t.at("e")) e.push_back(x.get<unsigned>());
    p.add_term(complex_from_json(t.at("c")), std::move(e));
  }
  return p;
}

Json rational_to_json(const RationalFunction& r) {
  return Json{{"num", poly_to_json(r.num())}, {"den", poly_to_json(r.den())}};
}

RationalFunction rational_from_json(const Json& j) {
  return RationalFunction(poly_from_json(j.at("num")), poly_from_json(j.at("den")));
}

static Json tolerances_to_json(const Tolerances& t) {
  return Json{{"quadrature", dump_double(t.quadrature)},
              {"lift", dump_double(t.lift)},
              {"transversality", dump_double(t.transversality)},
              {"zero_free", dump_double(t.zero_free)},
              {"max_step_arg", dump_double(t.max_step_arg)},
              {"triple_sep", dump_double(t.triple_sep)}};
}

static Tolerances tolerances_from_json(const Json& j) {
  Tolerances t;
  t.quadrature = parse_double(j.at("quadrature"));
  t.lift = parse_double(j.at("lift"));
  t.transversality = parse_double(j.at("transversality"));
  t.zero_free = parse_double(j.at("zero_free"));
  t.max_step_arg = parse_double(j.at("max_step_arg"));
  t.triple_sep = parse_double(j.at("triple_sep"));
  return t;
}

Json tower_to_json(const TowerSpec& t) {
  Json j;
  j["version"] = 1;
  j["kind"] = t.kind == TowerKind::exponential ? "exponential" : "square_root";
  j["base"] = t.base ? spec_to_json(*t.base) : Json("unit_disc");
  j["seed"] = t.seed;
  j["k_list"] = t.k_list;
  j["k_floor"] = t.k_floor;
  j["target_delta"] = dump_double(t.target_delta);
  j["tolerances"] = tolerances_to_json(t.tol);
  Json dicts = Json::object();
  for (const auto& [level, entries] : t.dictionaries) {
    Json arr = Json::array();
    for (const auto& e : entries)
      arr.push_back(Json{{"g", rational_to_json(e.g)},
                         {"zero_free_margin", dump_double(e.zero_free_margin)}});
    dicts[std::to_string(level)] = arr;
  }
  j["dictionaries"] = dicts;
  Json stages = Json::array();
  if (t.kind == TowerKind::exponential) {
    for (const auto& st : t.exp_stages) {
      Json certs = Json::object();
      for (const auto& [k, cert] : st.cut_certs) {
        Json xs = Json::array();
        for (const auto& x : cert.crossings)
          xs.push_back(Json::array(
              {x.curve_id, dump_double(x.t), dump_double(x.margin)}));
        certs[std::to_string(k)] = Json{{"c", dump_double(cert.c)},
                                        {"min_margin", dump_double(cert.min_margin)},
                                        {"min_endpoint_gap", dump_double(cert.min_endpoint_gap)},
                                        {"crossings", xs}};
      }
      Json lens = Json::object();
      for (const auto& [k, len] : st.cut_length) lens[std::to_string(k)] = dump_double(len);
      stages.push_back(Json{{"level", st.level},
                            {"f", rational_to_json(st.f)},
                            {"c", dump_double(st.c)},
                            {"m", st.m},
                            {"schedule", Json::array({st.sched.r, st.sched.s})},
                            {"dict_source", Json::array({st.dict_source.first, st.dict_source.second})},
                            {"zero_free_margin", dump_double(st.zero_free_margin)},
                            {"cut_certs", certs},
                            {"cut_length", lens}});
    }
  } else {
    for (const auto& st : t.sqrt_stages) {
      stages.push_back(Json{{"level", st.level},
                            {"q", rational_to_json(st.q)},
                            {"alpha", complex_to_json(st.alpha)},
                            {"regular_value_margin", dump_double(st.regular_value_margin)},
                            {"schedule", Json::array({st.sched.r, st.sched.s})},
                            {"dict_source", Json::array({st.dict_source.first, st.dict_source.second})}});
    }
  }
  j["stages"] = stages;
  return j;
}

TowerSpec tower_from_json(const Json& j) {
  check_version(j, 1, "tower spec");
  TowerSpec t;
  t.kind = j.at("kind").get<std::string>() == "exponential" ? TowerKind::exponential
                                                            : TowerKind::square_root;
  if (j.at("base").is_string())
    t.base = std::nullopt;
  else
    t.base = spec_from_json(j.at("base"));
  t.seed = j.at("seed").get<std::uint64_t>();
  t.k_list = j.at("k_list").get<std::vector<int>>();
  t.k_floor = j.at("k_floor").get<int>();
  t.target_delta = parse_double(j.at("target_delta"));
  t.tol = tolerances_from_json(j.at("tolerances"));
  for (const auto& [key, arr] : j.at("dictionaries").items()) {
    std::vector<DictEntry> entries;
    for (const auto& e : arr)
      entries.push_back(DictEntry{rational_from_json(e.at("g")),
                                  parse_double(e.at("zero_free_margin"))});
    t.dictionaries[std::stoi(key)] = std::move(entries);
  }
  for (const auto& s : j.at("stages")) {
    if (t.kind == TowerKind::exponential) {
      ExpStage st;
      st.level = s.at("level").get<int>();
      st.f = rational_from_json(s.at("f"));
      st.c = parse_double(s.at("c"));
      st.m = s.at("m").get<int>();
      st.sched = ScheduleIndex{s.at("schedule").at(0).get<long long>(),
                               s.at("schedule").at(1).get<long long>()};
      st.dict_source = {s.at("dict_source").at(0).get<int>(),
                        s.at("dict_source").at(1).get<int>()};
      st.zero_free_margin = parse_double(s.at("zero_free_margin"));
      for (const auto& [k, cj] : s.at("cut_certs").items()) {
        CutLevelCert cert;
        cert.c = parse_double(cj.at("c"));
        cert.min_margin = parse_double(cj.at("min_margin"));
        cert.min_endpoint_gap = parse_double(cj.at("min_endpoint_gap"));
        for (const auto& x : cj.at("crossings"))
          cert.crossings.push_back(
              CutCrossing{x.at(0).get<int>(), parse_double(x.at(1)), parse_double(x.at(2))});
        st.cut_certs[std::stoi(k)] = std::move(cert);
      }
      for (const auto& [k, len] : s.at("cut_length").items())
        st.cut_length[std::stoi(k)] = parse_double(len);
      t.exp_stages.push_back(std::move(st));
    } else {
      SqrtStage st;
      st.level = s.at("level").get<int>();
      st.q = rational_from_json(s.at("q"));
      st.alpha = complex_from_json(s.at("alpha"));
      st.regular_value_margin = parse_double(s.at("regular_value_margin"));
      st.sched = ScheduleIndex{s.at("schedule").at(0).get<long long>(),
                               s.at("schedule").at(1).get<long long>()};
      st.dict_source = {s.at("dict_source").at(0).get<int>(),
                        s.at("dict_source").at(1).get<int>()};
      t.sqrt_stages.push_back(std::move(st));
    }
  }
  return t;
}

Json report_to_json(const MeasureReport& r) {
  return Json{{"stage", r.stage},
              {"truncation_k", r.truncation_k},
              {"method", r.method == MeasureMethod::direct ? "direct" : "recursive"},
              {"total_variation", dump_double(r.total_variation)},
              {"moment_zbar", complex_to_json(r.moment_zbar)},
              {"ei_variation", dump_double(r.ei_variation)},
              {"ej_variation", dump_double(r.ej_variation)},
              {"ei_moment", complex_to_json(r.ei_moment)},
              {"ej_moment", complex_to_json(r.ej_moment)},
              {"quadrature_error", dump_double(r.quadrature_error)}};
}

Json certificate_to_json(const Certificate& c) {
  return Json{{"stage", c.stage},
              {"truncation_k", c.truncation_k},
              {"lhs_norm", dump_double(c.lhs_norm)},
              {"rhs_norm_bound", dump_double(c.rhs_norm_bound)},
              {"delta_margin", dump_double(c.delta_margin)},
              {"target_delta", dump_double(c.target_delta)},
              {"moment_abs", dump_double(c.moment_abs)},
              {"moment_bound", dump_double(c.moment_bound)},
              {"B_lb", dump_double(c.B_lb)},
              {"pass_condition_8", c.pass_condition_8},
              {"pass_condition_9", c.pass_condition_9}};
}

Json nontriviality_to_json(const NontrivialityReport& r) {
  return Json{{"gap", dump_double(r.gap)},
              {"theoretical_floor", dump_double(r.theoretical_floor)},
              {"sampled_sup_norm_min", dump_double(r.sampled_sup_norm_min)},
              {"annihilation_max", dump_double(r.annihilation_max)},
              {"max_test_norm", dump_double(r.max_test_norm)},
              {"tests_run", r.tests_run},
              {"tests_skipped", r.tests_skipped}};
}

Json generator_report_to_json(const GeneratorReport& r) {
  Json cs = Json::array(), tags = Json::array(), recs = Json::array();
  for (double c : r.coefficients) cs.push_back(dump_double(c));
  for (GenCase t : r.tags) tags.push_back(t == GenCase::log_case ? "log" : "inverse");
  for (double x : r.recovery_residuals) recs.push_back(dump_double(x));
  return Json{{"start_index", r.start_index}, {"coefficients", cs},
              {"case_tags", tags},           {"cond_i", r.cond_i},
              {"cond_ii", r.cond_ii},        {"cond_iii", r.cond_iii},
              {"cond_iv", r.cond_iv},        {"recovery_residuals", recs}};
}

std::string chain_to_csv(const BoundaryChain& chain) {
  std::ostringstream os;
  os << "circle_index,start_angle,end_angle,orientation\n";
  for (const auto& a : chain.arcs)
    os << a.circle_index << ',' << dump_double(a.start_angle) << ','
       << dump_double(a.end_angle) << ',' << a.orientation << '\n';
  return os.str();
}

std::string lifted_path_to_csv(const Curve& curve) {
  std::ostringstream os;
  os << "t";
  for (int s = 0; s < curve.nslots; ++s) os << ",z" << (s + 1) << "_re,z" << (s + 1) << "_im";
  os << "\n";
  for (size_t i = 0; i < curve.ts.size(); ++i) {
    os << dump_double(curve.ts[i]);
    for (int s = 0; s < curve.nslots; ++s)
      os << ',' << dump_double(curve.zs[i][static_cast<size_t>(s)].real()) << ','
         << dump_double(curve.zs[i][static_cast<size_t>(s)].imag());
    os << '\n';
  }
  return os.str();
}

std::string chain_contributions_csv(const BoundaryChain& chain) {
  std::ostringstream os;
  os << "arc,circle_index,length,moment_re,moment_im\n";
  for (size_t i = 0; i < chain.arcs.size(); ++i) {
    const auto& arc = chain.arcs[i];
    BoundaryChain one;
    one.truncation_k = chain.truncation_k;
    one.circles = chain.circles;
    one.arcs = {arc};
    Complex m = moment_zbar_closed_form(one);
    os << i << ',' << arc.circle_index << ','
       << dump_double(chain.circles[static_cast<size_t>(arc.circle_index)].radius *
                      arc.angular_extent())
       << ',' << dump_double(m.real()) << ',' << dump_double(m.imag()) << '\n';
  }
  return os.str();
}

std::string cheese_svg(const CheeseSpec& spec, int k, const std::vector<Curve>* cuts) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.15 -1.15 2.3 2.3\" "
        "width=\"640\" height=\"640\">\n";
  os << "<g fill=\"none\" stroke-width=\"0.006\">\n";
  os << "<circle cx=\"0\" cy=\"0\" r=\"1\" stroke=\"black\"/>\n";
  for (int j = 1; j <= k && j <= static_cast<int>(spec.holes.size()); ++j) {
    const Disc& d = spec.holes[static_cast<size_t>(j - 1)];
    os << "<circle cx=\"" << d.center.real() << "\" cy=\"" << -d.center.imag() << "\" r=\""
       << d.radius << "\" stroke=\"#888\"/>\n";
  }
  if (cuts) {
    for (const Curve& c : *cuts) {
      os << "<polyline stroke=\"#c22\" points=\"";
      for (const auto& z : c.zs) os << z[0].real() << ',' << -z[0].imag() << ' ';
      os << "\"/>\n";
    }
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

Json config_to_json(const RunConfig& c) {
  return Json{{"version", 1},
              {"seed", c.seed},
              {"radius_budget", dump_double(c.radius_budget)},
              {"hole_count", c.hole_count},
              {"min_crossing_angle", dump_double(c.min_crossing_angle)},
              {"k_list", c.k_list},
              {"stages", c.stages},
              {"tower_kind", c.tower_kind == TowerKind::exponential ? "exp" : "sqrt"},
              {"dict_size", c.dict_size},
              {"target_delta", dump_double(c.target_delta)},
              {"tolerances", tolerances_to_json(c.tol)},
              {"mc_samples", c.mc_samples},
              {"test_count", c.test_count},
              {"direct_max_stage", c.direct_max_stage},
              {"out_dir", c.out_dir}};
}

RunConfig config_from_json(const Json& j) {
  check_version(j, 1, "run config");
  RunConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.radius_budget = parse_double(j.at("radius_budget"));
  c.hole_count = j.at("hole_count").get<int>();
  c.min_crossing_angle = parse_double(j.at("min_crossing_angle"));
  c.k_list = j.at("k_list").get<std::vector<int>>();
  c.stages = j.at("stages").get<int>();
  c.tower_kind = j.at("tower_kind").get<std::string>() == "exp" ? TowerKind::exponential
                                                                : TowerKind::square_root;
  c.dict_size = j.at("dict_size").get<int>();
  c.target_delta = parse_double(j.at("target_delta"));
  c.tol = tolerances_from_json(j.at("tolerances"));
  c.mc_samples = j.at("mc_samples").get<std::uint64_t>();
  c.test_count = j.at("test_count").get<int>();
  c.direct_max_stage = j.at("direct_max_stage").get<int>();
  c.out_dir = j.at("out_dir").get<std::string>();
  if (c.stages < 0) throw Error("io-error", "config: stage count must be >= 0");
  for (double tv : {c.tol.quadrature, c.tol.lift, c.tol.transversality, c.tol.zero_free,
                    c.tol.max_step_arg, c.tol.triple_sep})
    if (!(tv > 0.0)) throw Error("io-error", "config: all tolerances must be positive");
  return c;
}

void check_version(const Json& j, int expected_major, const std::string& what) {
  if (!j.contains("version"))
    throw Error("io-error", what + " lacks a version field");
  int v = j.at("version").get<int>();
  if (v != expected_major)
    throw Error("io-error", what + " has unsupported version " + std::to_string(v));
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("io-error", "cannot open " + tmp.string());
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw Error("io-error", "short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("io-error", "cannot read " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace cheese
