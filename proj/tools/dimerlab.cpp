// Command-line surface for the dimer pipeline: domain I/O, verification
// suites, convergence experiments, and plot-data emission.  Every run writes
// a manifest (configuration, versions, timings, artifact hashes) next to its
// outputs; failures exit nonzero with a machine-readable JSON record naming
// the violated invariant and its location.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dimerlab/continuum.hpp"
#include "dimerlab/dbar.hpp"
#include "dimerlab/doubledimer.hpp"
#include "dimerlab/kasteleyn.hpp"
#include "dimerlab/lattice.hpp"
#include "dimerlab/primitive.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dimerlab;

namespace {

struct Failure {
  std::string invariant;
  std::string location;
  std::string detail;
};

struct RunConfig {
  std::string command;
  std::string domain_file;
  std::string gen_spec;
  std::string backend = "exact";
  uint64_t seed = 1;
  std::string out_dir = "out";
  std::vector<double> meshes;
  int cap = 24;
  int samples = 1000;
  int threads = 1;
};

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

struct Artifacts {
  fs::path dir;
  json entries = json::array();

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(dir);
    std::ofstream f(dir / name, std::ios::binary);
    f << content;
    entries.push_back({{"file", name},
                       {"bytes", content.size()},
                       {"fnv1a64", hex64(fnv1a(content))}});
  }
};

json config_json(const RunConfig& c) {
  return {{"command", c.command},   {"domain", c.domain_file},
          {"gen", c.gen_spec},      {"backend", c.backend},
          {"seed", c.seed},         {"out", c.out_dir},
          {"meshes", c.meshes},     {"cap", c.cap},
          {"samples", c.samples},   {"threads", c.threads}};
}

Domain load_domain(const RunConfig& c) {
  if (!c.domain_file.empty()) {
    std::ifstream f(c.domain_file);
    if (!f) throw Failure{"domain-file-readable", c.domain_file, "cannot open file"};
    std::stringstream ss;
    ss << f.rdbuf();
    return Domain::from_json(ss.str());
  }
  if (!c.gen_spec.empty()) return domain_from_generator_spec(c.gen_spec);
  throw Failure{"domain-source-present", "command line",
                "provide --domain <file> or --gen <spec>"};
}

std::pair<Sq, Sq> even_pair_or_fail(const Domain& d) {
  auto pr = find_even_pair(d);
  if (!pr)
    throw Failure{"marked-pair-exists", "domain",
                  "no admissible boundary pair (u0, v0) found"};
  return *pr;
}

// -- commands ---------------------------------------------------------------

int cmd_count(const RunConfig& c, Artifacts& art) {
  Domain d = load_domain(c);
  KasteleynSystem sys(d, c.backend == "float" ? Backend::Float : Backend::Exact);
  TilingCount tc = sys.count_tilings();
  json out = {{"squares", d.squares().size()},
              {"balanced", tc.balanced},
              {"exact", tc.is_exact},
              {"count", tc.count.get_str()},
              {"log_abs_det", tc.log_abs_det}};
  art.write("count.json", out.dump(2) + "\n");
  std::cout << tc.count.get_str() << "\n";
  if (int(d.squares().size()) <= c.cap) {
    auto ts = enumerate_tilings(d, c.cap);
    if (tc.is_exact && mpz_class(ts.size()) != tc.count)
      throw Failure{"determinant-equals-enumeration", "count",
                    "determinant " + tc.count.get_str() + " vs enumeration " +
                        std::to_string(ts.size())};
  }
  return 0;
}

int cmd_coupling(const RunConfig& c, Artifacts& art) {
  Domain d = load_domain(c);
  KasteleynSystem sys(d, c.backend == "float" ? Backend::Float : Backend::Exact);
  if (!sys.square() || sys.singular())
    throw Failure{"coupling-defined", "coupling",
                  "domain is unbalanced or has no tilings"};
  art.write("coupling.csv", sys.coupling_csv());
  std::cout << "coupling table: " << d.black_count() << " x " << d.white_count()
            << " entries\n";
  return 0;
}

int cmd_solve_fg(const RunConfig& c, Artifacts& art) {
  Domain d = load_domain(c);
  auto [u0, v0] = even_pair_or_fail(d);
  std::cout << "u0=(" << u0.n << "," << u0.m << ") v0=(" << v0.n << "," << v0.m
            << ")\n";
  if (c.backend == "float") {
    BlackFieldF F = solve_F_float(d, v0);
    WhiteFieldF G = solve_G_float(d, u0);
    auto rf = check_holomorphic(F, {v0});
    auto rg = check_holomorphic(G, {u0});
    art.write("F.csv", F.to_csv());
    art.write("G.csv", G.to_csv());
    std::cout << "max residual F " << rf.max_residual << ", G " << rg.max_residual
              << "\n";
    if (rf.max_residual > 1e-8 || rg.max_residual > 1e-8)
      throw Failure{"dbar-residual-zero", "solve-fg", "float residual above 1e-8"};
  } else {
    BlackFieldE F = solve_F_exact(d, v0);
    WhiteFieldE G = solve_G_exact(d, u0);
    auto rf = check_holomorphic(F, {v0});
    auto rg = check_holomorphic(G, {u0});
    art.write("F.csv", F.to_csv());
    art.write("G.csv", G.to_csv());
    if (!rf.exact_zero || !rg.exact_zero)
      throw Failure{"dbar-residual-zero", "solve-fg",
                    "nonzero residual at an interior square"};
    std::cout << "residuals exactly zero at " << rf.checked + rg.checked
              << " squares\n";
  }
  return 0;
}

int cmd_primitive(const RunConfig& c, Artifacts& art) {
  Domain d = load_domain(c);
  auto [u0, v0] = even_pair_or_fail(d);
  BlackFieldE F = solve_F_exact(d, v0, PoleNorm::Mesh1);
  WhiteFieldE G = solve_G_exact(d, u0, PoleNorm::Mesh1);
  BoundaryArcPair arcs = boundary_arcs(d, u0, v0);
  Vx z0 = arcs.arc_v0u0[arcs.arc_v0u0.size() / 2];
  auto res = integrate_primitive(d, F, G, {u0, v0}, z0);
  art.write("H.csv", res.H.to_csv());
  if (!res.exact_closed || !res.exact_real || res.unreached != 0)
    throw Failure{"primitive-closed-real", "primitive",
                  "loop residual or imaginary part nonzero"};
  auto bv = boundary_values(d, res.H, arcs, F, G);
  auto lf = leapfrog_formula_check(res.H, F, G, {u0, v0});
  auto sc = saddle_check(res.H, {u0, v0});
  auto nc = nonlinear_check(res.H, {u0, v0});
  auto sh = sholomorphic_check(d, F, G, res.H, {u0, v0});
  json rep = {{"constant_on_arcs", bv.constant_on_arcs},
              {"closed_forms_agree", bv.closed_forms_agree},
              {"boundary_jump", (bv.on_u0v0 - bv.on_v0u0).str()},
              {"leapfrog_checked", lf.checked},
              {"leapfrog_violations", lf.violations},
              {"saddle_violations", sc.violations},
              {"nonlinear_violations", nc.violations},
              {"projection_violations", sh.projection_violations},
              {"increment_violations", sh.increment_violations}};
  art.write("primitive_report.json", rep.dump(2) + "\n");
  std::cout << rep.dump(2) << "\n";
  if (!bv.constant_on_arcs || !bv.closed_forms_agree || !bv.nonzero)
    throw Failure{"arc-values-and-closed-forms", "primitive",
                  "boundary arc values inconsistent"};
  if (!lf.ok() || !sc.ok() || !nc.ok() || !sh.ok())
    throw Failure{"vertex-identities", "primitive",
                  "leap-frog / saddle / nonlinear / projection check failed"};
  return 0;
}

int cmd_expected_height(const RunConfig& c, Artifacts& art) {
  Domain d = load_domain(c);
  auto [u0, v0] = even_pair_or_fail(d);
  if (c.backend == "float") {
    FloatVertexField eh = expected_height_float(d, u0, v0);
    art.write("expected_height.csv", eh.to_csv());
    for (size_t k = 0; k < d.vertices().size(); ++k)
      if (eh.known[k] && (eh.values[k] < -1e-9 || eh.values[k] > 1 + 1e-9))
        throw Failure{"height-in-unit-range",
                      "vertex (" + std::to_string(d.vertices()[k].p) + "," +
                          std::to_string(d.vertices()[k].q) + ")",
                      "value " + std::to_string(eh.values[k])};
  } else {
    ExactVertexField eh = expected_height_exact(d, u0, v0);
    std::ostringstream os;
    os << "p,q,rational,sqrt2_coeff\n";
    for (size_t k = 0; k < d.vertices().size(); ++k)
      if (eh.known[k])
        os << d.vertices()[k].p << "," << d.vertices()[k].q << ","
           << eh.values[k].x.get_str() << "," << eh.values[k].y.get_str()
           << "\n";
    art.write("expected_height.csv", os.str());
  }
  std::cout << "expected height written for " << d.vertices().size()
            << " vertices\n";
  return 0;
}

int cmd_verify_theorem1(const RunConfig& c, Artifacts& art) {
  Domain d = load_domain(c);
  if (!d.is_odd_temperley())
    throw Failure{"odd-temperley-domain", "verify-theorem1",
                  "domain fails the corner-subtype condition"};
  auto pr = find_odd_pair(d);
  if (!pr)
    throw Failure{"marked-pair-exists", "verify-theorem1",
                  "no admissible (u1, u2) pair"};
  auto [u1, u2] = *pr;
  Theorem1Report rep = c.backend == "float" ? verify_theorem1_float(d, u1, u2)
                                            : verify_theorem1(d, u1, u2);
  json out = {{"interior_vertices", rep.interior_vertices},
              {"violations", rep.violations},
              {"max_abs_laplacian", rep.max_abs_laplacian}};
  art.write("theorem1.json", out.dump(2) + "\n");
  std::cout << rep.violations << " violations / " << rep.interior_vertices
            << " interior vertices\n";
  if (!rep.pass())
    throw Failure{"leapfrog-harmonicity", "verify-theorem1",
                  std::to_string(rep.violations) + " interior vertices violate"};
  return 0;
}

int cmd_sample(const RunConfig& c, Artifacts& art) {
  Domain d = load_domain(c);
  Backend b = c.backend == "exact" ? Backend::Exact : Backend::Float;
  KasteleynSystem sys(d, b);
  if (!sys.square() || sys.singular())
    throw Failure{"domain-tileable", "sample", "no perfect matchings"};
  std::mt19937_64 rng(c.seed);
  std::ostringstream os;
  for (int i = 0; i < c.samples; ++i)
    os << sample_tiling(sys, rng).to_json(d) << "\n";
  art.write("samples.jsonl", os.str());
  std::cout << c.samples << " samples written\n";
  return 0;
}

int cmd_converge(const RunConfig& c, Artifacts& art) {
  StaircaseShape shape = StaircaseShape::unit_square();
  if (!c.gen_spec.empty()) {
    json spec = json::parse(c.gen_spec);
    std::string kind = spec.value("kind", "unit_square");
    if (kind == "l_shape")
      shape = StaircaseShape::l_shape();
    else if (kind != "unit_square" && kind != "rectangle")
      throw Failure{"shape-supported", "converge",
                    "use unit_square or l_shape"};
  }
  int base = 20, levels = 3;
  if (!c.meshes.empty()) {
    base = int(std::lround(1.0 / c.meshes.front()));
    levels = int(c.meshes.size());
  }
  ConvergenceReport rep = convergence_report(shape, base, levels);
  art.write("convergence.csv", rep.to_csv());
  std::cout << rep.to_csv();
  if (!rep.eh_decreasing)
    throw Failure{"error-column-decreasing", "converge",
                  "sup|E[h] - hm| did not decrease across the mesh ladder"};
  return 0;
}

int cmd_corners(const RunConfig& c, Artifacts& art) {
  Domain d = load_domain(c);
  CornerCounts cc = d.corner_counts();
  PiecewiseClass pc = classify_piecewise_temperley(d);
  json out = {{"white_convex", cc.white_convex},
              {"white_concave", cc.white_concave},
              {"black_convex", cc.black_convex},
              {"black_concave", cc.black_concave},
              {"black_piecewise", pc.black_piecewise},
              {"black_n", pc.black_n},
              {"white_piecewise", pc.white_piecewise},
              {"white_m", pc.white_m}};
  art.write("corners.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  if (cc.convex() != cc.concave() + 4)
    throw Failure{"corner-balance", "corners",
                  "convex corner excess is not 4"};
  if (pc.black_piecewise && cc.white_convex != pc.black_n + 1)
    throw Failure{"piecewise-corner-count", "corners",
                  "white convex corners disagree with the segment count"};
  return 0;
}

int cmd_verify_all(const RunConfig& c, Artifacts& art) {
  Domain d = load_domain(c);
  json report = json::object();

  if (d.is_odd_temperley()) {
    RunConfig cc = c;
    int rc = cmd_verify_theorem1(cc, art);
    report["theorem1"] = "pass";
    (void)rc;
  } else {
    if (!d.balanced())
      throw Failure{"domain-balanced", "verify-all",
                    "unbalanced non-odd-Temperley domain"};
    if (int(d.squares().size()) <= c.cap) {
      KasteleynSystem sys(d, Backend::Exact);
      auto ts = enumerate_tilings(d, c.cap);
      TilingCount tc = sys.count_tilings();
      if (mpz_class(ts.size()) != tc.count)
        throw Failure{"determinant-equals-enumeration", "verify-all",
                      "count mismatch"};
      report["count"] = tc.count.get_str();
      // edge probabilities against enumeration frequencies
      for (Sq w : d.whites())
        for (Sq u : Domain::neighbors(w)) {
          if (d.black_index(u) < 0) continue;
          int hits = 0;
          for (auto& t : ts) hits += t.covers(d, u, w) ? 1 : 0;
          Rational freq(hits, int(ts.size()));
          freq.canonicalize();
          if (sys.edge_probability_exact(u, w) != freq)
            throw Failure{"coupling-equals-frequency",
                          "edge (" + std::to_string(u.n) + "," +
                              std::to_string(u.m) + ")-(" +
                              std::to_string(w.n) + "," + std::to_string(w.m) +
                              ")",
                          "|C(u,v)| differs from the enumeration frequency"};
        }
      report["edge_probabilities"] = "pass";
    }
    auto pr = find_even_pair(d);
    if (pr) {
      auto [u0, v0] = *pr;
      CouplingFactorization fac = coupling_dbl(d, u0, v0);
      if (!fac.equal_everywhere || !fac.constant_matches)
        throw Failure{"coupling-factorization", "verify-all",
                      "C difference is not const*F*G with the predicted constant"};
      report["factorization"] = "pass";
      RunConfig cc = c;
      cmd_primitive(cc, art);
      report["primitive"] = "pass";
      if (int(d.squares().size()) <= c.cap) {
        RationalVertexField oracle = enumerate_double_dimer_expectation(d, u0, v0, c.cap);
        ExactVertexField pipe = expected_height_exact(d, u0, v0);
        for (size_t k = 0; k < d.vertices().size(); ++k) {
          Vx z = d.vertices()[k];
          if (!oracle.defined(z) || !pipe.defined(z)) continue;
          if (!(pipe.values[k] - Qr2(oracle.values[k])).is_zero())
            throw Failure{"pipeline-equals-oracle",
                          "vertex (" + std::to_string(z.p) + "," +
                              std::to_string(z.q) + ")",
                          "expected height mismatch"};
        }
        report["expected_height"] = "pass";
      }
    } else {
      report["factorization"] = "skipped (no admissible pair)";
    }
  }
  art.write("verify_all.json", report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dimer pipeline: counting, coupling functions, heights, sampling"};
  app.require_subcommand(1);

  RunConfig cfg;
  if (const char* t = std::getenv("DIMERLAB_THREADS")) cfg.threads = std::atoi(t);

  std::string mesh_list;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--domain", cfg.domain_file, "domain JSON file");
    sub->add_option("--gen", cfg.gen_spec, "inline generator spec JSON");
    sub->add_option("--backend", cfg.backend, "exact|float")
        ->check(CLI::IsMember({"exact", "float"}));
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--meshes", mesh_list, "comma-separated mesh list");
    sub->add_option("--cap", cfg.cap, "enumeration size cap");
    sub->add_option("--samples", cfg.samples, "sample count");
  };

  std::vector<std::pair<std::string, int (*)(const RunConfig&, Artifacts&)>> cmds =
      {{"count", cmd_count},
       {"coupling", cmd_coupling},
       {"solve-fg", cmd_solve_fg},
       {"primitive", cmd_primitive},
       {"expected-height", cmd_expected_height},
       {"verify-theorem1", cmd_verify_theorem1},
       {"sample", cmd_sample},
       {"converge", cmd_converge},
       {"corners", cmd_corners},
       {"verify-all", cmd_verify_all}};
  for (auto& [name, fn] : cmds) add_common(app.add_subcommand(name));

  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  cfg.command = sub->get_name();
  // float is the natural default for the approximate commands
  if (sub->get_option("--backend")->count() == 0 &&
      (cfg.command == "converge" || cfg.command == "sample"))
    cfg.backend = "float";
  if (!mesh_list.empty()) {
    std::stringstream ss(mesh_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) cfg.meshes.push_back(std::stod(tok));
  }

  Artifacts art{fs::path(cfg.out_dir)};
  auto t0 = std::chrono::steady_clock::now();
  int rc = 0;
  try {
    for (auto& [name, fn] : cmds)
      if (name == cfg.command) rc = fn(cfg, art);
  } catch (const Failure& f) {
    json err = {{"error", {{"invariant", f.invariant},
                           {"location", f.location},
                           {"detail", f.detail}}}};
    std::cout << err.dump() << "\n";
    rc = 1;
  } catch (const std::exception& e) {
    json err = {{"error", {{"invariant", "no-unhandled-exception"},
                           {"location", cfg.command},
                           {"detail", e.what()}}}};
    std::cout << err.dump() << "\n";
    rc = 2;
  }
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count();

  json manifest = {{"config", config_json(cfg)},
                   {"versions", {{"library", "dimerlab 0.1.0"},
                                 {"compiler", __VERSION__}}},
                   {"timings", {{"total_ms", ms}}},
                   {"status", rc == 0 ? "pass" : "fail"},
                   {"outputs", art.entries}};
  fs::create_directories(art.dir);
  std::ofstream mf(art.dir / "manifest.json");
  mf << manifest.dump(2) << "\n";
  return rc;
}
