// ntforge command-line front end.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ntforge/scenario.hpp"

namespace {

using ntforge::json;

struct Common {
  std::string scenario;
  std::string instance;
  std::optional<int> depth;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::size_t> dense_cap;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool needs_scenario) {
  auto* s = app->add_option("scenario", c.scenario, "scenario file (JSON)");
  if (needs_scenario) {
    s->required();
  } else {
    app->add_option("--instance", c.instance, "shipped semigroup instance instead of a scenario file");
  }
  app->add_option("--depth", c.depth, "truncation / enumeration depth");
  app->add_option("--tol", c.tol, "tolerance");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--trials", c.trials, "random trials");
  app->add_option("--dense-cap", c.dense_cap, "largest dimension for dense SVD");
  app->add_option("--out", c.out, "write the JSON result to this file");
}

ntforge::Overrides overrides(const Common& c) { return {c.depth, c.tol, c.seed, c.trials, c.dense_cap}; }

ntforge::Scenario load(const Common& c) {
  if (!c.scenario.empty()) return ntforge::load_scenario_file(c.scenario, overrides(c));
  if (!c.instance.empty()) return ntforge::load_scenario(json{{"semigroup", c.instance}}, overrides(c));
  throw ntforge::ScenarioError("", "a scenario file or --instance is required");
}

std::string basename(const std::string& path) {
  const auto pos = path.find_last_of('/');
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

int emit(const json& j, const std::string& out, int code) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f) {
      std::cerr << "error: cannot write " << out << "\n";
      return 2;
    }
    f << text;
  }
  return code;
}

/// Runs one item built from command-line arguments and prints its result.
int run_single(const Common& c, json item, bool values_only = false) {
  const auto sc = load(c);
  const auto r = ntforge::run_item(sc, item, 0);
  json out;
  if (values_only) {
    out = r.values;
  } else {
    out["op"] = item["op"];
    out["status"] = r.status;
    out["settings"] = {{"depth", item.value("depth", sc.settings.depth)},
                       {"tol", sc.settings.tol},
                       {"seed", item.value("seed", sc.settings.seed)}};
    out["values"] = r.values;
  }
  return emit(out, c.out, r.status == "fail" ? 1 : 0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ntforge: semigroup, Wick-calculus and Fock-space computations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ntforge::kVersion));

  // run
  Common run_c;
  bool no_timestamp = false;
  auto* run = app.add_subcommand("run", "run a scenario and write a JSON report");
  add_common(run, run_c, true);
  run->add_flag("--no-timestamp", no_timestamp, "leave the timestamp field empty");

  // explain / list-instances
  std::string explain_name;
  auto* explain = app.add_subcommand("explain", "describe a check or operation");
  explain->add_option("check", explain_name, "check name")->required();
  auto* list = app.add_subcommand("list-instances", "list shipped semigroup instances");

  // segments / partition-check
  Common seg_c;
  std::vector<std::string> seg_F;
  auto* segments = app.add_subcommand("segments", "initial segments of a finite set F");
  add_common(segments, seg_c, false);
  segments->add_option("-F,--F", seg_F, "elements of F")->required();
  Common part_c;
  std::vector<std::string> part_F;
  auto* partition = app.add_subcommand("partition-check", "check the partition of P by the sets P_{F,C}");
  add_common(partition, part_c, false);
  partition->add_option("-F,--F", part_F, "elements of F")->required();

  // nt
  Common nt_c;
  std::string nt_a, nt_b, nt_grade;
  int nt_search = -1;
  auto* nt = app.add_subcommand("nt", "Wick-calculus operations on scenario elements");
  nt->require_subcommand(1);
  auto* nt_mul = nt->add_subcommand("mul", "product of two elements");
  auto* nt_adj = nt->add_subcommand("adjoint", "adjoint of an element");
  auto* nt_exp = nt->add_subcommand("expect", "diagonal expectation (cancellative semigroups)");
  auto* nt_grd = nt->add_subcommand("grade", "grades, or the projection onto one grade");
  auto* nt_nrm = nt->add_subcommand("norm", "core norm");
  for (auto* s : {nt_mul, nt_adj, nt_exp, nt_grd, nt_nrm}) {
    add_common(s, nt_c, true);
    s->add_option("a", nt_a, "element name")->required();
  }
  nt_mul->add_option("b", nt_b, "second element name")->required();
  nt_grd->add_option("--grade", nt_grade, "grade to project onto");
  nt_nrm->add_option("--search-depth", nt_search, "search depth for mixed keys");

  // fock
  Common fock_c;
  std::string fock_a, fock_p, fock_kind = "ideal", fock_t;
  auto* fock = app.add_subcommand("fock", "truncated Fock representation");
  fock->require_subcommand(1);
  auto* f_build = fock->add_subcommand("build", "assemble the Fock operator of an element");
  auto* f_norm = fock->add_subcommand("norm", "operator norm of the Fock lift");
  auto* f_exp = fock->add_subcommand("expect", "transcendental expectation");
  auto* f_proj = fock->add_subcommand("project", "projections Q_p and onto pP");
  auto* f_red = fock->add_subcommand("reduce", "compare with the source-restricted representation");
  for (auto* s : {f_build, f_norm, f_exp, f_red}) {
    add_common(s, fock_c, true);
    s->add_option("a", fock_a, "element name")->required();
  }
  add_common(f_proj, fock_c, true);
  f_proj->add_option("p", fock_p, "object")->required();
  f_proj->add_option("--kind", fock_kind, "ideal or point");
  f_red->add_option("--t", fock_t, "source object (default e)");

  // check
  Common chk_c;
  std::string chk_p, chk_rep = "fock", chk_unit, chk_a, chk_source, chk_expect, chk_element;
  std::vector<std::string> chk_qs;
  auto* check = app.add_subcommand("check", "representation checks");
  check->require_subcommand(1);
  auto* c_toep = check->add_subcommand("toeplitz", "Toeplitz covariance");
  auto* c_c = check->add_subcommand("condition-c", "condition (C)");
  auto* c_cp = check->add_subcommand("condition-cprime", "condition (C')");
  auto* c_ap = check->add_subcommand("aperiodicity", "aperiodicity search");
  auto* c_gr = check->add_subcommand("graded", "graded-representation inequality");
  auto* c_pr = check->add_subcommand("projections", "projection-family equivalences");
  for (auto* s : {c_toep, c_c, c_cp, c_ap, c_gr, c_pr}) add_common(s, chk_c, true);
  for (auto* s : {c_toep, c_c, c_cp}) {
    s->add_option("--p", chk_p, "object p")->required();
    s->add_option("--qs", chk_qs, "objects q_i");
  }
  for (auto* s : {c_toep, c_c, c_cp, c_pr}) s->add_option("--rep", chk_rep, "fock or character");
  c_cp->add_option("--a", chk_a, "element whose first term is tested");
  c_ap->add_option("--unit", chk_unit, "nontrivial unit x")->required();
  c_ap->add_option("--source", chk_source, "backend or bundle");
  c_gr->add_option("--rep", chk_rep, "regular or collapse");
  c_gr->add_option("--element", chk_element, "bundle element (random samples otherwise)");
  c_pr->add_option("--expect", chk_expect, "equivalent or degenerate");

  // bundle
  Common bun_c;
  std::string bun_element;
  bool bun_matrix = false;
  auto* bundle = app.add_subcommand("bundle", "Fell bundles over finite groups");
  bundle->require_subcommand(1);
  auto* b_rt = bundle->add_subcommand("roundtrip", "bundle to precategory and back");
  auto* b_reg = bundle->add_subcommand("regular", "regular representation of an element");
  auto* b_sp = bundle->add_subcommand("spectrum", "spectrum in the regular representation");
  for (auto* s : {b_rt, b_reg, b_sp}) add_common(s, bun_c, true);
  for (auto* s : {b_reg, b_sp}) s->add_option("element", bun_element, "bundle element")->required();
  b_reg->add_flag("--matrix", bun_matrix, "include the matrix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto sc = ntforge::load_scenario_file(run_c.scenario, overrides(run_c));
      const auto report = ntforge::run_scenario(sc, {basename(run_c.scenario), !no_timestamp});
      return emit(report, run_c.out, ntforge::exit_code(report));
    }
    if (*explain) {
      try {
        std::cout << ntforge::explain(explain_name);
        return 0;
      } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what();
        return 2;
      }
    }
    if (*list) {
      for (const auto& i : ntforge::shipped_instances())
        std::cout << i.name << "\t" << i.semigroup->describe() << "\t" << i.description << "\n";
      return 0;
    }
    if (*segments) return run_single(seg_c, {{"op", "segments"}, {"F", seg_F}}, true);
    if (*partition) {
      json item{{"op", "partition-check"}, {"F", part_F}};
      const auto sc = load(part_c);
      const auto r = ntforge::run_item(sc, item, 0);
      return emit(r.values, part_c.out, r.status == "pass" ? 0 : 1);
    }
    if (*nt) {
      json item{{"a", nt_a}};
      if (*nt_mul) item["op"] = "nt-mul", item["b"] = nt_b;
      if (*nt_adj) item["op"] = "nt-adjoint";
      if (*nt_exp) item["op"] = "nt-expect";
      if (*nt_grd) {
        item["op"] = "nt-grade";
        if (!nt_grade.empty()) item["grade"] = nt_grade;
      }
      if (*nt_nrm) item["op"] = "nt-norm", item["search_depth"] = nt_search;
      return run_single(nt_c, item);
    }
    if (*fock) {
      json item;
      if (*f_build) item = {{"op", "fock-build"}, {"a", fock_a}};
      if (*f_norm) item = {{"op", "fock-norm"}, {"a", fock_a}};
      if (*f_exp) item = {{"op", "fock-expect"}, {"a", fock_a}};
      if (*f_proj) item = {{"op", "fock-project"}, {"p", fock_p}, {"kind", fock_kind}};
      if (*f_red) {
        item = {{"op", "fock-reduction"}, {"a", fock_a}};
        if (!fock_t.empty()) item["t"] = fock_t;
      }
      return run_single(fock_c, item);
    }
    if (*check) {
      json item;
      if (*c_toep || *c_c || *c_cp) {
        item = {{"p", chk_p}, {"qs", chk_qs}, {"rep", chk_rep}};
        item["op"] = *c_toep ? "check-toeplitz" : *c_c ? "check-condition-c" : "check-condition-cprime";
        if (!chk_a.empty()) item["a"] = chk_a;
      }
      if (*c_ap) {
        item = {{"op", "check-aperiodicity"}, {"unit", chk_unit}};
        if (!chk_source.empty()) item["source"] = chk_source;
      }
      if (*c_gr) {
        item = {{"op", "check-graded"}, {"rep", chk_rep == "fock" ? "regular" : chk_rep}};
        if (!chk_element.empty()) item["element"] = chk_element;
      }
      if (*c_pr) {
        item = {{"op", "check-projections"}, {"rep", chk_rep}};
        if (!chk_expect.empty()) item["expect"] = chk_expect;
      }
      return run_single(chk_c, item);
    }
    if (*bundle) {
      json item;
      if (*b_rt) item = {{"op", "bundle-roundtrip"}};
      if (*b_reg) item = {{"op", "bundle-regular"}, {"element", bun_element}, {"matrix", bun_matrix}};
      if (*b_sp) item = {{"op", "bundle-spectrum"}, {"element", bun_element}};
      return run_single(bun_c, item);
    }
  } catch (const ntforge::ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
