#pragma once

// JSON scenarios: a semigroup, a backend, named elements, an optional
// bundle, and a list of items executed in order into a report.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ntforge/analysis.hpp"
#include "ntforge/fellbundle.hpp"
#include "ntforge/fock.hpp"
#include "ntforge/instances.hpp"
#include "ntforge/lcm.hpp"
#include "ntforge/precategory.hpp"
#include "ntforge/semigroup.hpp"
#include "ntforge/wick.hpp"

namespace ntforge {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.3.0";

/// Malformed JSON or a scenario that fails validation. `field` names the
/// offending location ("backend.generator_dims[1]"), or is empty for
/// syntax errors, which carry line and column instead.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string field, const std::string& msg)
      : std::runtime_error(field.empty() ? msg : field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct Settings {
  int depth = 4;
  double tol = 1e-9;
  std::uint64_t seed = 1;
  int trials = 20;
  std::size_t dense_cap = 4096;
};

// ---- JSON helpers -------------------------------------------------------------------

namespace scn {

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::string msg = e.what();
    const auto pos = msg.find("syntax error");
    if (pos != std::string::npos) msg = msg.substr(pos);
    throw ScenarioError("", "parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
  }
}

inline const json& need(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ScenarioError(path, "expected an object");
  if (!j.contains(key)) throw ScenarioError(path + "." + key, "missing required field");
  return j.at(key);
}

template <class T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ScenarioError(path, "has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get_as<T>(j.at(key), path + "." + key);
}

inline cplx parse_scalar(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ScenarioError(path, "expected a number or an [re, im] pair");
}

inline Matrix parse_matrix(const json& j, const std::string& path) {
  if (!j.is_array()) throw ScenarioError(path, "expected a matrix (list of rows)");
  const Index rows = static_cast<Index>(j.size());
  Index cols = -1;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array()) throw ScenarioError(path + "[" + std::to_string(i) + "]", "expected a row");
    if (cols < 0) cols = static_cast<Index>(j[i].size());
    if (static_cast<Index>(j[i].size()) != cols)
      throw ScenarioError(path + "[" + std::to_string(i) + "]", "row length differs from the first row");
  }
  Matrix m(rows, std::max<Index>(cols, 0));
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k)
      m(i, k) = parse_scalar(j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                             path + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  return m;
}

inline json scalar_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(scalar_json(m(i, k)));
    rows.push_back(row);
  }
  return rows;
}

inline json report_json(const CheckReport& r, std::size_t max_failures = 10) {
  json f = json::array();
  for (std::size_t i = 0; i < r.failures.size() && i < max_failures; ++i) f.push_back(r.failures[i]);
  return {{"checked", r.checked}, {"failures", r.failures.size()}, {"examples", f}};
}

inline std::string timestamp_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace scn

// ---- scenario ----------------------------------------------------------------------

inline SemigroupPtr parse_semigroup(const json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return find_instance(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(path, e.what());
    }
  }
  if (j.contains("instance")) return parse_semigroup(j.at("instance"), path + ".instance");
  const auto kind = scn::get_as<std::string>(scn::need(j, "kind", path), path + ".kind");
  try {
    if (kind == "direct_sum") {
      const int r = scn::get_as<int>(scn::need(j, "rank", path), path + ".rank");
      if (r < 1) throw ScenarioError(path + ".rank", "must be positive");
      return Semigroup::direct_sum(r);
    }
    if (kind == "free_monoid") {
      const auto letters = scn::get_as<std::string>(scn::need(j, "letters", path), path + ".letters");
      if (letters.empty()) throw ScenarioError(path + ".letters", "must be nonempty");
      return Semigroup::free_monoid(letters);
    }
    if (kind == "free_product") {
      const auto& fs = scn::need(j, "factors", path);
      std::vector<SemigroupPtr> factors;
      for (std::size_t i = 0; i < fs.size(); ++i)
        factors.push_back(parse_semigroup(fs[i], path + ".factors[" + std::to_string(i) + "]"));
      auto names = scn::get_or<std::vector<std::string>>(j, "names", {}, path);
      if (names.empty())
        for (std::size_t i = 0; i < factors.size(); ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
      if (names.size() != factors.size()) throw ScenarioError(path + ".names", "needs one name per factor");
      return Semigroup::free_product(factors, names);
    }
    if (kind == "unit_extension") {
      const auto base = parse_semigroup(scn::need(j, "base", path), path + ".base");
      const auto moduli = scn::get_as<std::vector<int>>(scn::need(j, "moduli", path), path + ".moduli");
      return Semigroup::unit_extension(base, moduli);
    }
    if (kind == "absorption") return Semigroup::absorption();
    if (kind == "finite_group") {
      const auto names = scn::get_as<std::vector<std::string>>(scn::need(j, "names", path), path + ".names");
      const auto table =
          scn::get_as<std::vector<std::vector<int>>>(scn::need(j, "table", path), path + ".table");
      return Semigroup::finite_group(names, table);
    }
    if (kind == "cyclic_group") {
      const auto moduli = scn::get_as<std::vector<int>>(scn::need(j, "moduli", path), path + ".moduli");
      const auto gens = scn::get_or<std::vector<std::string>>(j, "generators", {}, path);
      return Semigroup::cyclic_group_product(moduli, gens);
    }
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(path, e.what());
  }
  throw ScenarioError(path + ".kind", "unknown semigroup kind '" + kind + "'");
}

struct BundleSpec {
  std::shared_ptr<GroupPrecategory> crossed;
  std::shared_ptr<BundleFiberFamily> bundle;
  std::map<std::string, std::vector<FiberElem>> elements;  // one fiber element per group index
};

struct Scenario {
  Settings settings;
  SemigroupPtr S;
  PrecategoryPtr L;
  ColorIdeal K;
  std::map<std::string, NTElement> elements;
  std::vector<std::string> element_order;
  std::optional<BundleSpec> bundle;
  json items = json::array();
};

inline Element parse_element(const Semigroup& S, const json& j, const std::string& path) {
  try {
    return S.parse(scn::get_as<std::string>(j, path));
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(path, e.what());
  }
}

inline Arrow parse_arrow(const Precategory& L, const ColorIdeal& K, const json& j, const std::string& path,
                         std::mt19937_64& rng) {
  const auto& S = L.semigroup();
  const Element r = parse_element(S, scn::need(j, "range", path), path + ".range");
  const Element s = parse_element(S, scn::need(j, "source", path), path + ".source");
  if (scn::get_or<bool>(j, "unit", false, path)) {
    if (r != s) throw ScenarioError(path + ".unit", "unit arrows need range = source");
    return L.unit(r, K);
  }
  if (scn::get_or<bool>(j, "random", false, path)) return L.random(r, s, K, rng);
  const auto& blocks = scn::need(j, "blocks", path);
  if (!blocks.is_array() || static_cast<int>(blocks.size()) != L.colors())
    throw ScenarioError(path + ".blocks", "needs one entry per color (" + std::to_string(L.colors()) + ")");
  std::vector<Matrix> ms;
  for (int c = 0; c < L.colors(); ++c) {
    const auto [rows, cols] = L.block_shape(r, s, c);
    const std::string bp = path + ".blocks[" + std::to_string(c) + "]";
    const auto& bj = blocks[static_cast<std::size_t>(c)];
    if (bj.is_null() || rows * cols == 0) {
      ms.push_back(Matrix::Zero(rows, cols));
      continue;
    }
    Matrix m = scn::parse_matrix(bj, bp);
    if (m.rows() != rows || m.cols() != cols)
      throw ScenarioError(bp, "expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " block, got " +
                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    ms.push_back(std::move(m));
  }
  return L.make(r, s, std::move(ms));
}

inline BundleSpec parse_bundle(const json& j, const std::string& path, std::mt19937_64& rng) {
  BundleSpec out;
  const auto G = parse_semigroup(scn::need(j, "group", path), path + ".group");
  if (G->kind() != SemigroupKind::FiniteGroup) throw ScenarioError(path + ".group", "must be a finite group");
  const auto dims = scn::get_as<std::vector<Index>>(scn::need(j, "dims", path), path + ".dims");
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (dims[i] < 1) throw ScenarioError(path + ".dims[" + std::to_string(i) + "]", "must be positive");
  auto alpha = trivial_action(G, dims);
  if (j.contains("action")) {
    const auto& act = j.at("action");
    if (!act.is_object()) throw ScenarioError(path + ".action", "expected an object keyed by group element");
    for (const auto& [gname, spec] : act.items()) {
      const std::string ap = path + ".action." + gname;
      const int g = static_cast<int>(parse_element(*G, json(gname), ap).data.at(0));
      BlockAutomorphism a;
      a.perm = scn::get_as<std::vector<int>>(scn::need(spec, "perm", ap), ap + ".perm");
      const auto& us = scn::need(spec, "unitaries", ap);
      for (std::size_t i = 0; i < us.size(); ++i)
        a.unitaries.push_back(scn::parse_matrix(us[i], ap + ".unitaries[" + std::to_string(i) + "]"));
      try {
        a.validate(dims);
      } catch (const std::invalid_argument& e) {
        throw ScenarioError(ap, e.what());
      }
      alpha[static_cast<std::size_t>(g)] = std::move(a);
    }
  }
  try {
    out.crossed = std::make_shared<GroupPrecategory>(GroupPrecategory::crossed(G, dims, alpha));
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(path + ".action", e.what());
  }
  out.bundle = std::make_shared<BundleFiberFamily>(bundle_from_precategory(*out.crossed));
  if (j.contains("elements")) {
    for (const auto& [name, spec] : j.at("elements").items()) {
      const std::string ep = path + ".elements." + name;
      std::vector<FiberElem> parts;
      for (int g = 0; g < G->group_order(); ++g) parts.push_back(out.bundle->zero(g));
      if (spec.is_string() && spec.get<std::string>() == "random") {
        for (int g = 0; g < G->group_order(); ++g) parts[static_cast<std::size_t>(g)] = out.bundle->random(g, rng);
      } else {
        if (!spec.is_object()) throw ScenarioError(ep, "expected an object keyed by group element or \"random\"");
        for (const auto& [gname, blocks] : spec.items()) {
          const std::string gp = ep + "." + gname;
          const int g = static_cast<int>(parse_element(*G, json(gname), gp).data.at(0));
          if (!blocks.is_array() || blocks.size() != dims.size())
            throw ScenarioError(gp, "needs one block per summand of A");
          for (std::size_t b = 0; b < dims.size(); ++b) {
            Matrix m = scn::parse_matrix(blocks[b], gp + "[" + std::to_string(b) + "]");
            if (m.rows() != dims[b] || m.cols() != dims[b])
              throw ScenarioError(gp + "[" + std::to_string(b) + "]", "expected a " + std::to_string(dims[b]) + "x" +
                                                                       std::to_string(dims[b]) + " block");
            parts[static_cast<std::size_t>(g)][b] = std::move(m);
          }
        }
      }
      out.elements[name] = std::move(parts);
    }
  }
  return out;
}

struct Overrides {
  std::optional<int> depth;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::size_t> dense_cap;
};

inline Scenario load_scenario(const json& root, const Overrides& ov = {}) {
  Scenario sc;
  if (!root.is_object()) throw ScenarioError("(root)", "expected an object");
  for (const auto& [key, v] : root.items()) {
    static const std::set<std::string> known{"settings", "semigroup", "backend", "elements", "bundle", "items",
                                             "description"};
    if (!known.count(key)) throw ScenarioError(key, "unknown section");
  }
  const json settings = root.value("settings", json::object());
  sc.settings.depth = scn::get_or<int>(settings, "depth", sc.settings.depth, "settings");
  sc.settings.tol = scn::get_or<double>(settings, "tol", sc.settings.tol, "settings");
  sc.settings.seed = scn::get_or<std::uint64_t>(settings, "seed", sc.settings.seed, "settings");
  sc.settings.trials = scn::get_or<int>(settings, "trials", sc.settings.trials, "settings");
  sc.settings.dense_cap = scn::get_or<std::size_t>(settings, "dense_cap", sc.settings.dense_cap, "settings");
  if (ov.depth) sc.settings.depth = *ov.depth;
  if (ov.tol) sc.settings.tol = *ov.tol;
  if (ov.seed) sc.settings.seed = *ov.seed;
  if (ov.trials) sc.settings.trials = *ov.trials;
  if (ov.dense_cap) sc.settings.dense_cap = *ov.dense_cap;
  if (sc.settings.depth < 0) throw ScenarioError("settings.depth", "must be nonnegative");
  if (!(sc.settings.tol > 0)) throw ScenarioError("settings.tol", "must be positive");

  std::mt19937_64 rng(sc.settings.seed);

  if (root.contains("semigroup")) sc.S = parse_semigroup(root.at("semigroup"), "semigroup");

  if (root.contains("backend")) {
    if (!sc.S) throw ScenarioError("backend", "requires a semigroup section");
    const auto& b = root.at("backend");
    const auto kind = scn::get_or<std::string>(b, "kind", "colored", "backend");
    try {
      if (kind == "colored") {
        std::vector<Dims> gd;
        if (b.contains("generator_dims")) {
          gd = scn::get_as<std::vector<Dims>>(b.at("generator_dims"), "backend.generator_dims");
        } else {
          gd.assign(sc.S->generators().size(), Dims{1});
        }
        sc.L = Precategory::colored(sc.S, gd, scn::get_or<bool>(b, "allow_zero", false, "backend"));
      } else if (kind == "zero_tensor") {
        sc.L = Precategory::zero_tensor(
            sc.S, scn::get_as<Dims>(scn::need(b, "object_dims", "backend"), "backend.object_dims"));
      } else {
        throw ScenarioError("backend.kind", "unknown backend kind '" + kind + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ScenarioError("backend.generator_dims", e.what());
    }
    const auto v = sc.L->validate(sc.settings.depth);
    if (!v.passed) throw ScenarioError("backend.generator_dims", v.failures.front());
    if (b.contains("ideal")) {
      for (int c : scn::get_as<std::vector<int>>(b.at("ideal"), "backend.ideal")) {
        if (c < 0 || c >= sc.L->colors())
          throw ScenarioError("backend.ideal", "color " + std::to_string(c) + " does not exist");
        sc.K.colors.insert(c);
      }
    } else {
      sc.K = sc.L->full_ideal();
    }
  }

  if (root.contains("elements")) {
    if (!sc.L) throw ScenarioError("elements", "requires a backend section");
    const auto& es = root.at("elements");
    if (!es.is_object()) throw ScenarioError("elements", "expected an object keyed by element name");
    for (const auto& [name, terms] : es.items()) {
      const std::string ep = "elements." + name;
      if (!terms.is_array()) throw ScenarioError(ep, "expected a list of terms");
      NTElement x(sc.L, sc.K);
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string tp = ep + "[" + std::to_string(i) + "]";
        const Arrow a = parse_arrow(*sc.L, sc.K, terms[i], tp, rng);
        try {
          x.add(a);
        } catch (const std::invalid_argument& e) {
          throw ScenarioError(tp, e.what());
        }
      }
      sc.elements.emplace(name, std::move(x));
      sc.element_order.push_back(name);
    }
  }

  if (root.contains("bundle")) sc.bundle = parse_bundle(root.at("bundle"), "bundle", rng);

  if (root.contains("items")) {
    sc.items = root.at("items");
    if (!sc.items.is_array()) throw ScenarioError("items", "expected a list");
    for (std::size_t i = 0; i < sc.items.size(); ++i) {
      const std::string ip = "items[" + std::to_string(i) + "]";
      scn::get_as<std::string>(scn::need(sc.items[i], "op", ip), ip + ".op");
    }
  }
  return sc;
}

inline Scenario load_scenario_file(const std::string& path, const Overrides& ov = {}) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", "cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario(scn::parse_text(ss.str()), ov);
}

// ---- items -------------------------------------------------------------------------

/// Item status: "pass" / "fail" for checks, "info" for computations.
struct ItemResult {
  std::string status = "info";
  json values = json::object();
};

namespace scn {

struct ItemContext {
  const Scenario& sc;
  const json& item;
  std::string path;
  int depth;
  double tol;
  std::uint64_t seed;
  int trials;

  const Semigroup& S() const {
    if (!sc.S) throw ScenarioError(path, "this item needs a semigroup section");
    return *sc.S;
  }
  const PrecategoryPtr& L() const {
    if (!sc.L) throw ScenarioError(path, "this item needs a backend section");
    return sc.L;
  }
  const BundleSpec& bundle() const {
    if (!sc.bundle) throw ScenarioError(path, "this item needs a bundle section");
    return *sc.bundle;
  }
  const NTElement& element(const std::string& key) const {
    const auto name = get_as<std::string>(need(item, key, path), path + "." + key);
    const auto it = sc.elements.find(name);
    if (it == sc.elements.end()) throw ScenarioError(path + "." + key, "unknown element '" + name + "'");
    return it->second;
  }
  Element object(const std::string& key) const { return parse_element(S(), need(item, key, path), path + "." + key); }
  std::vector<Element> objects(const std::string& key) const {
    const auto& arr = need(item, key, path);
    if (!arr.is_array()) throw ScenarioError(path + "." + key, "expected a list of elements");
    std::vector<Element> out;
    for (std::size_t i = 0; i < arr.size(); ++i)
      out.push_back(parse_element(S(), arr[i], path + "." + key + "[" + std::to_string(i) + "]"));
    return out;
  }
};

inline json nt_json(const NTElement& x) {
  const auto& S = x.backend().semigroup();
  json terms = json::array();
  for (const auto& [k, a] : x.terms()) {
    json blocks = json::array();
    for (const auto& b : a.blocks) blocks.push_back(matrix_json(b));
    terms.push_back({{"range", S.format(k.first)}, {"source", S.format(k.second)}, {"blocks", blocks}});
  }
  return terms;
}

inline json elements_json(const Semigroup& S, const std::vector<Element>& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(S.format(e));
  return out;
}

inline json segments_json(const Semigroup& S, const InitialSegmentFamily& fam) {
  json segs = json::array();
  for (const auto& seg : fam.segments) segs.push_back({{"C", elements_json(S, seg.C)}, {"sigma", S.format(seg.sigma)}});
  return segs;
}

/// Sources {e} for colored backends and all objects for the zero backend,
/// where the e-th summand alone carries no information about K(s,s), s ≠ e.
inline std::shared_ptr<const Truncation> fock_truncation_for_checks(const PrecategoryPtr& L, const ColorIdeal& K,
                                                                    int depth) {
  if (L->kind() == BackendKind::ZeroTensor)
    return std::make_shared<const Truncation>(Truncation::make(L, K, depth));
  return std::make_shared<const Truncation>(
      Truncation::make(L, K, depth, std::vector<Element>{L->semigroup().identity()}));
}

inline ConcreteRep representation_for(const ItemContext& c) {
  const auto kind = get_or<std::string>(c.item, "rep", "fock", c.path);
  if (kind == "fock") return fock_representation(fock_truncation_for_checks(c.L(), c.sc.K, c.depth));
  if (kind == "character") {
    try {
      return scalar_character_rep(c.L(), c.depth);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(c.path + ".rep", e.what());
    }
  }
  throw ScenarioError(c.path + ".rep", "unknown representation '" + kind + "' (fock, character)");
}

/// Applies an optional {"expect_max": x} / {"expect_min": x} bound to `value`.
inline std::optional<bool> expectation(const ItemContext& c, double value) {
  std::optional<bool> ok;
  if (c.item.contains("expect_max")) ok = value <= get_as<double>(c.item.at("expect_max"), c.path + ".expect_max");
  if (c.item.contains("expect_min"))
    ok = ok.value_or(true) && value >= get_as<double>(c.item.at("expect_min"), c.path + ".expect_min");
  return ok;
}

inline ItemResult pass_fail(bool ok, json values) {
  ItemResult r;
  r.status = ok ? "pass" : "fail";
  r.values = std::move(values);
  return r;
}

inline ItemResult info(json values) {
  ItemResult r;
  r.values = std::move(values);
  return r;
}

inline ItemResult op_laws(const ItemContext& c) {
  const auto rep = check_semigroup_laws(c.S(), c.depth);
  return pass_fail(rep.passed, {{"instance", c.S().describe()}, {"depth", c.depth}, {"laws", report_json(rep)}});
}

inline ItemResult op_segments(const ItemContext& c, bool check) {
  const auto F = normalize_subset(c.objects("F"));
  InitialSegmentFamily fam;
  try {
    fam = initial_segments(c.S(), F);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(c.path + ".F", e.what());
  }
  const auto part = check_partition(c.S(), F, c.depth);
  json v{{"F", elements_json(c.S(), fam.F)}, {"segments", segments_json(c.S(), fam)}, {"partition_ok", part.passed}};
  if (check) {
    v["depth"] = c.depth;
    v["checked"] = part.checked;
    return pass_fail(part.passed, v);
  }
  return info(v);
}

inline ItemResult op_controlled_map(const ItemContext& c) {
  const auto name = get_or<std::string>(c.item, "map", "abelianization", c.path);
  SemigroupMap theta;
  if (name == "abelianization") {
    try {
      theta = abelianization_map(c.sc.S);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(c.path + ".map", e.what());
    }
  } else if (name == "identity") {
    theta = identity_map(c.sc.S);
  } else {
    throw ScenarioError(c.path + ".map", "unknown map '" + name + "' (abelianization, identity)");
  }
  const auto rep = check_controlled_map(theta, c.depth);
  return pass_fail(rep.passed, {{"map", theta.name}, {"target", theta.target->describe()}, {"depth", c.depth},
                                {"report", report_json(rep)}});
}

inline ItemResult op_backend(const ItemContext& c) {
  const auto& L = *c.L();
  const auto v = L.validate(c.depth);
  const auto wa = check_well_aligned(L, c.sc.K, c.depth, c.seed);
  const auto nd = check_nondegenerate(L, c.sc.K, c.depth);
  const auto es = check_essential(L, c.sc.K, c.depth);
  return pass_fail(v.passed && wa.passed,
                   {{"multiplicative", v.passed}, {"well_aligned", wa.passed}, {"nondegenerate", nd.passed},
                    {"essential", es.essential}, {"well_aligned_report", report_json(wa)},
                    {"nondegenerate_report", report_json(nd)}});
}

inline ItemResult op_nt(const ItemContext& c, const std::string& op) {
  if (op == "nt-mul") return info({{"result", nt_json(nt_mul(c.element("a"), c.element("b")))}});
  if (op == "nt-adjoint") return info({{"result", nt_json(nt_adjoint(c.element("a")))}});
  if (op == "nt-expect") {
    try {
      return info({{"result", nt_json(diagonal_expectation(c.element("a")))}});
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(c.path, e.what());
    }
  }
  if (op == "nt-grade") {
    const auto& x = c.element("a");
    const auto g = default_grading(c.sc.S);
    if (c.item.contains("grade")) {
      std::vector<std::int64_t> target;
      try {
        target = g.parse(get_as<std::string>(c.item.at("grade"), c.path + ".grade"));
      } catch (const std::invalid_argument& e) {
        throw ScenarioError(c.path + ".grade", e.what());
      }
      return info({{"grading", g.name}, {"grade", g.format(target)}, {"result", nt_json(grade_project(x, g, target))}});
    }
    json grades = json::array();
    for (const auto& gr : grades_of(x, g)) grades.push_back(g.format(gr));
    return info({{"grading", g.name}, {"grades", grades}});
  }
  // nt-norm
  CoreNorm n;
  try {
    n = core_norm(c.element("a"), get_or<int>(c.item, "search_depth", -1, c.path));
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(c.path, e.what());
  }
  json v{{"norm", n.value}, {"exact", n.exact}, {"truncated", n.truncated}, {"search_depth", n.search_depth}};
  if (auto ok = expectation(c, n.value)) return pass_fail(*ok, v);
  return info(v);
}

inline Truncation truncation_for(const ItemContext& c) {
  Truncation tr = Truncation::make(c.L(), c.sc.K, c.depth);
  tr.dense_cap = get_or<std::size_t>(c.item, "dense_cap", c.sc.settings.dense_cap, c.path);
  return tr;
}

inline ItemResult op_fock(const ItemContext& c, const std::string& op) {
  const Truncation tr = truncation_for(c);
  if (op == "fock-build") {
    const auto T = lift(c.element("a"), tr);
    return info({{"depth", c.depth}, {"hilbert_dim", T.hilbert_dim()}, {"objects", tr.objects.size()},
                 {"blocks", T.blocks().size()}, {"frobenius_bound", T.frobenius_bound()}});
  }
  if (op == "fock-norm") {
    const auto& x = c.element("a");
    const auto fn = fock_norm(x, tr);
    json v{{"norm", fn.norm}, {"exact", fn.exact}, {"depth", fn.depth}};
    std::optional<bool> ok = expectation(c, fn.norm);
    try {
      const auto cn = core_norm(x);
      if (cn.exact) {
        v["core_norm"] = cn.value;
        v["difference"] = std::abs(cn.value - fn.norm);
        const bool agree = std::abs(cn.value - fn.norm) <= 1e-6;
        ok = ok.value_or(true) && agree;
      }
    } catch (const std::invalid_argument&) {
      v["core_norm"] = nullptr;
    }
    if (ok) return pass_fail(*ok, v);
    return info(v);
  }
  if (op == "fock-expect") {
    const auto E = transcendental_expectation(c.element("a"), tr);
    const double n = E.norm();
    json v{{"norm", n}, {"depth", c.depth}};
    if (auto ok = expectation(c, n)) return pass_fail(*ok, v);
    return info(v);
  }
  if (op == "fock-project") {
    const Element p = c.object("p");
    const auto kind = get_or<std::string>(c.item, "kind", "ideal", c.path);
    FockOperator Q;
    if (kind == "ideal") {
      Q = projection_QT(p, tr);
    } else if (kind == "point") {
      Q = projection_Qw(p, tr);
    } else {
      throw ScenarioError(c.path + ".kind", "unknown projection kind '" + kind + "' (ideal, point)");
    }
    const Matrix D = Q.to_dense();
    const Matrix defect = D * D - D;
    return info({{"p", c.S().format(p)}, {"kind", kind}, {"depth", c.depth}, {"rank", numerical_rank(D, kRankTol)},
                 {"hilbert_dim", D.rows()},
                 {"idempotent_defect", defect.size() ? defect.cwiseAbs().maxCoeff() : 0.0}});
  }
  // fock-reduction
  const auto& x = c.element("a");
  const Element t = c.item.contains("t") ? c.object("t") : c.S().identity();
  const auto sr = fock_source_restricted(x, t, tr);
  json v{{"t", c.S().format(t)}, {"full_norm", sr.full_norm}, {"restricted_norm", sr.restricted_norm},
         {"hypothesis_ok", sr.hypothesis_ok}, {"note", sr.note}};
  if (!sr.hypothesis_ok) return info(v);
  return pass_fail(std::abs(sr.full_norm - sr.restricted_norm) <= 1e-6, v);
}

inline json witness(const ConcreteRep& phi, const std::vector<Element>& qs) {
  json q = json::array();
  for (const auto& e : qs) q.push_back(phi.L->semigroup().format(e));
  return q;
}

inline ItemResult op_check(const ItemContext& c, const std::string& op) {
  if (op == "check-projections") {
    const auto phi = representation_for(c);
    const int pd = get_or<int>(c.item, "object_depth", std::min(c.depth, 2), c.path);
    const auto eq = check_projection_equivalences(phi, pd, get_or<double>(c.item, "tol", 1e-9, c.path));
    json w = json::array();
    for (std::size_t i = 0; i < eq.witnesses.size() && i < 10; ++i) w.push_back(eq.witnesses[i]);
    const bool all = eq.equal_projections && eq.semilattice && eq.preorder && eq.special_relation;
    json v{{"rep", phi.name},           {"equal_projections", eq.equal_projections}, {"semilattice", eq.semilattice},
           {"preorder", eq.preorder},   {"special_relation", eq.special_relation},   {"max_distance", eq.max_distance},
           {"witnesses", w}};
    const auto expect = get_or<std::string>(c.item, "expect", "equivalent", c.path);
    if (expect == "equivalent") return pass_fail(all, v);
    if (expect == "degenerate") return pass_fail(!eq.equal_projections && !eq.special_relation, v);
    throw ScenarioError(c.path + ".expect", "unknown expectation '" + expect + "' (equivalent, degenerate)");
  }
  if (op == "check-graded") {
    const auto& B = c.bundle();
    const auto kind = get_or<std::string>(c.item, "rep", "regular", c.path);
    GradedRep psi;
    try {
      psi = kind == "regular" ? regular_representation(*B.bundle) : collapsing_representation(*B.bundle);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(c.path + ".rep", e.what());
    }
    if (kind != "regular" && kind != "collapse")
      throw ScenarioError(c.path + ".rep", "unknown representation '" + kind + "' (regular, collapse)");
    std::vector<std::vector<FiberElem>> samples;
    if (c.item.contains("element")) {
      const auto name = get_as<std::string>(c.item.at("element"), c.path + ".element");
      const auto it = B.elements.find(name);
      if (it == B.elements.end()) throw ScenarioError(c.path + ".element", "unknown bundle element '" + name + "'");
      samples.push_back(it->second);
    } else {
      std::mt19937_64 rng(c.seed);
      for (int k = 0; k < c.trials; ++k) {
        std::vector<FiberElem> s;
        for (int g = 0; g < B.bundle->order(); ++g) s.push_back(B.bundle->random(g, rng));
        samples.push_back(std::move(s));
      }
    }
    const auto rep = check_graded_bundle(psi, samples, c.tol);
    json f = json::array();
    for (std::size_t i = 0; i < rep.failures.size() && i < 5; ++i) f.push_back(rep.failures[i]);
    return pass_fail(rep.passed,
                     {{"rep", psi.name}, {"checked", rep.checked}, {"worst_gap", rep.worst_gap}, {"failures", f}});
  }
  if (op == "check-aperiodicity") {
    const int trials = c.trials;
    AperiodicityResult res;
    json v;
    const auto source = get_or<std::string>(c.item, "source", c.sc.bundle ? "bundle" : "backend", c.path);
    if (source == "bundle") {
      const auto& B = c.bundle();
      const auto& G = *B.crossed->group();
      const int x = static_cast<int>(parse_element(G, need(c.item, "unit", c.path), c.path + ".unit").data.at(0));
      if (x == 0) throw ScenarioError(c.path + ".unit", "must be a nontrivial unit");
      const auto dims = B.crossed->algebra_dims();
      const auto crossed = B.crossed;
      auto tensor_x = [crossed, dims, x](const Matrix& a) {
        return block_diag(crossed->rtensor(0, 0, split_blocks(a, dims), x));
      };
      Matrix b = Matrix::Identity(block_mask(dims).rows(), block_mask(dims).cols());
      if (c.item.contains("b")) b = block_diag(split_blocks(parse_matrix(c.item.at("b"), c.path + ".b"), dims));
      Matrix h = Matrix::Identity(b.rows(), b.cols());
      if (c.item.contains("h")) h = parse_matrix(c.item.at("h"), c.path + ".h");
      res = aperiodicity_search(tensor_x, b, h, block_mask(dims), trials, c.seed);
      v = {{"source", "bundle"}, {"unit", G.format(G.make({x}))}};
    } else if (source == "backend") {
      const auto& L = *c.L();
      const Element x = c.object("unit");
      if (!c.S().is_unit(x) || c.S().is_identity(x)) throw ScenarioError(c.path + ".unit", "must be a nontrivial unit");
      const Element e = c.S().identity();
      std::vector<Index> dims;
      for (int col = 0; col < L.colors(); ++col) dims.push_back(L.block_shape(e, e, col).first);
      auto Lp = c.L();
      auto tensor_x = [Lp, dims, e, x](const Matrix& a) {
        return block_diag(Lp->rtensor(Lp->make(e, e, split_blocks(a, dims)), x).blocks);
      };
      const Matrix mask = block_mask(dims);
      Matrix b = Matrix::Identity(mask.rows(), mask.cols());
      if (c.item.contains("b")) b = parse_matrix(c.item.at("b"), c.path + ".b");
      res = aperiodicity_search(tensor_x, b, Matrix::Identity(mask.rows(), mask.cols()), mask, trials, c.seed);
      v = {{"source", "backend"}, {"unit", c.S().format(x)}};
    } else {
      throw ScenarioError(c.path + ".source", "unknown source '" + source + "' (backend, bundle)");
    }
    v["best"] = res.best;
    v["evaluations"] = res.evaluations;
    v["trials"] = trials;
    v["certificate"] = matrix_json(res.certificate);
    if (auto ok = expectation(c, res.best)) return pass_fail(*ok, v);
    return info(v);
  }

  const auto phi = representation_for(c);
  const Element p = c.object("p");
  const auto qs = c.objects("qs");
  try {
    if (op == "check-toeplitz") {
      const auto r = check_toeplitz_covariance(phi, p, qs);
      return pass_fail(r.passed, {{"rep", phi.name},
                                  {"p", c.S().format(p)},
                                  {"qs", witness(phi, qs)},
                                  {"rank_p", r.rank_a},
                                  {"rank_qs", r.rank_b},
                                  {"rank_joint", r.rank_joint}});
    }
    if (op == "check-condition-c") {
      const auto r = check_condition_C(phi, p, qs);
      return pass_fail(r.passed, {{"rep", phi.name},
                                  {"p", c.S().format(p)},
                                  {"qs", witness(phi, qs)},
                                  {"smallest_singular_value", r.smallest_singular_value},
                                  {"commutator", r.commutator}});
    }
    // check-condition-cprime
    const auto phi_bar = extend_representation(phi, c.sc.K);
    std::mt19937_64 rng(c.seed);
    const Arrow a = c.item.contains("a") ? c.element("a").terms().begin()->second
                                         : c.L()->random(p, p, c.L()->full_ideal(), rng);
    const auto r = check_condition_Cprime(phi_bar, p, qs, a, get_or<double>(c.item, "tol", 1e-6, c.path));
    return pass_fail(r.passed, {{"rep", phi_bar.name},
                                {"p", c.S().format(p)},
                                {"qs", witness(phi, qs)},
                                {"norm", r.norm},
                                {"compressed_norm", r.compressed_norm}});
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(c.path, e.what());
  }
}

inline ItemResult op_bundle(const ItemContext& c, const std::string& op) {
  const auto& B = c.bundle();
  if (op == "bundle-roundtrip") {
    const auto rt = check_round_trip(*B.bundle, get_or<int>(c.item, "samples", 3, c.path), c.seed);
    const auto laws = check_bundle_laws(*B.bundle, 1, c.seed);
    const double iso = isomorphism_defect(*B.crossed, 1, c.seed);
    return pass_fail(rt.bit_exact && laws.passed && iso <= 1e-10,
                     {{"bit_exact", rt.bit_exact}, {"checked", rt.checked}, {"bundle_laws", report_json(laws)},
                      {"isomorphism_defect", iso}});
  }
  const auto name = get_as<std::string>(need(c.item, "element", c.path), c.path + ".element");
  const auto it = B.elements.find(name);
  if (it == B.elements.end()) throw ScenarioError(c.path + ".element", "unknown bundle element '" + name + "'");
  const auto psi = regular_representation(*B.bundle);
  const Matrix M = represent_sum(psi, it->second);
  if (op == "bundle-regular") {
    json v{{"dim", M.rows()},
           {"norm", spectral_norm(M)},
           {"e_norm", algebra_norm(it->second[0])},
           {"e_compression_norm", spectral_norm(e_compression(*B.bundle, M))}};
    if (get_or<bool>(c.item, "matrix", false, c.path)) v["matrix"] = matrix_json(M);
    return info(v);
  }
  // bundle-spectrum
  Eigen::ComplexEigenSolver<Matrix> es(M);
  std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  json out = json::array();
  for (const auto& z : ev) out.push_back(scalar_json(z));
  return info({{"dim", M.rows()}, {"eigenvalues", out}});
}

}  // namespace scn

struct OpInfo {
  std::string name;
  std::string summary;
  std::string params;
  std::string verdict;
};

inline const std::vector<OpInfo>& operation_catalogue() {
  static const std::vector<OpInfo> ops{
      {"laws", "Brute-force check of associativity, left cancellation, identity and right LCMs on all elements up to the depth; LCMs are compared against explicitly enumerated principal-ideal intersections.",
       "depth", "pass iff no failure"},
      {"segments", "Lists the initial segments C of a finite set F (nonempty C with an LCM σ(C) such that every f in F below σ(C) is in C), with canonical σ(C).",
       "F (list of elements), depth", "informational; also reports whether the sets P_{F,C} partition the truncation"},
      {"partition-check", "Checks that every element s of length ≤ depth lies in exactly one P_{F,C}, the set of s with σ(C) ≤ s and no element of F outside C below s.",
       "F, depth", "pass iff every element lands in exactly one block"},
      {"controlled-map", "Checks that θ is a unit-preserving homomorphism that sends right LCMs to right LCMs (and disjoint ideals to disjoint ideals) and is injective on comparable pairs.",
       "map (abelianization, identity), depth", "pass iff no failure"},
      {"backend", "Checks that fiber dimensions are multiplicative, that the ideal is well aligned, and reports nondegeneracy of tensoring and essentialness.",
       "depth, seed", "pass iff multiplicative and well aligned"},
      {"nt-mul", "Product of two formal sums by the Nica-covariant rule T(a)T(b) = T((a⊗1)(b⊗1)) at the LCM, or 0 when the ideals are disjoint.",
       "a, b (element names)", "informational"},
      {"nt-adjoint", "Adjoint of a formal sum, term by term.", "a", "informational"},
      {"nt-expect", "Keeps the diagonal keys (p,p); defined only for cancellative semigroups.", "a", "informational"},
      {"nt-grade", "Grades of the keys under the default grading, or the projection onto one grade.",
       "a, grade (optional)", "informational"},
      {"nt-norm", "Norm of the image of an element in the transcendental core: exact for diagonal keys via the maximum over initial segments, a flagged lower bound otherwise.",
       "a, search_depth, expect_max/expect_min", "informational unless an expectation is given"},
      {"fock-build", "Assembles the truncated Fock operator of an element.", "a, depth, dense_cap", "informational"},
      {"fock-norm", "Operator norm of the truncated Fock lift; compared with the core norm when that is exact.",
       "a, depth, dense_cap", "pass iff the two norms agree within 1e-6 (informational when no exact core norm exists)"},
      {"fock-expect", "Norm of the transcendental expectation of the lift, the compression keeping blocks whose source lies in the same segment class.",
       "a, depth, expect_max/expect_min", "informational unless an expectation is given"},
      {"fock-project", "Rank and idempotence of Q_p (kind = point) or of the projection onto pP (kind = ideal).",
       "p, kind, depth", "informational"},
      {"fock-reduction", "Compares the Fock norm with the norm of the representation restricted to sources t·x.",
       "a, t (default e), depth", "pass iff the norms agree within 1e-6; informational when the ideal misses a color of t"},
      {"check-toeplitz", "Toeplitz covariance: the image of K(p,p) meets the span of the images of K(q,q), q in qs, only in 0 (rank arithmetic, cutoff 1e-8). No q may dominate p.",
       "p, qs, rep (fock, character)", "pass iff the ranks add"},
      {"check-condition-c", "Condition (C): a ↦ Φ(a) ∏(1 − Q_⟨q⟩) is injective on K(p,p); reports the smallest singular value.",
       "p, qs, rep", "pass iff the smallest singular value exceeds 1e-8"},
      {"check-condition-cprime", "Condition (C'): compression by the complement of the join of the Q_q preserves the norm of Φ̄(a).",
       "p, qs, a (optional), rep, tol (default 1e-6)", "pass iff the norms agree within tol"},
      {"check-aperiodicity", "Searches positive norm-one a in a hereditary subalgebra minimizing ‖(a⊗1_x) b a‖ by random restarts and coordinate descent; the result is an upper bound on the infimum.",
       "unit, b, h, source (backend, bundle), trials, seed, expect_max/expect_min",
       "informational unless an expectation is given; a small value certifies aperiodicity for this b, a large one is inconclusive"},
      {"check-graded", "Checks ‖b_e‖ ≤ ‖Ψ(Σ b_g)‖ for a representation of the bundle.",
       "rep (regular, collapse), element or trials", "pass iff the inequality holds on every sample"},
      {"check-projections", "Checks Q_p = Q_⟨p⟩, the semilattice law Q_pQ_q = Q_lcm (or 0), monotonicity, and the relation Φ̄(a)Q_s = Φ̄(a⊗1) (or 0).",
       "rep, object_depth, expect (equivalent, degenerate)", "pass iff the expected pattern is observed"},
      {"bundle-roundtrip", "Converts the bundle to a precategory and back, comparing products and stars bit for bit; also checks the bundle laws and the isomorphism with the original precategory.",
       "samples, seed", "pass iff bit-exact and lawful"},
      {"bundle-regular", "Image of a bundle element under the regular representation on ⊕ B_g.",
       "element, matrix (bool)", "informational"},
      {"bundle-spectrum", "Eigenvalues of the regular-representation image of a bundle element.", "element",
       "informational"},
  };
  return ops;
}

inline std::string edit_hint(const std::string& name) {
  auto dist = [](const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      std::size_t prev = row[0];
      row[0] = i;
      for (std::size_t j = 1; j <= b.size(); ++j) {
        const std::size_t cur = row[j];
        row[j] = std::min({row[j] + 1, row[j - 1] + 1, prev + (a[i - 1] == b[j - 1] ? 0 : 1)});
        prev = cur;
      }
    }
    return row[b.size()];
  };
  std::vector<std::pair<std::size_t, std::string>> scored;
  for (const auto& op : operation_catalogue()) {
    const bool contains = op.name.find(name) != std::string::npos || name.find(op.name) != std::string::npos;
    const std::string bare = op.name.rfind("check-", 0) == 0 ? op.name.substr(6) : op.name;
    scored.emplace_back(contains ? 0 : std::min(dist(name, op.name), dist(name, bare)), op.name);
  }
  std::sort(scored.begin(), scored.end());
  std::string out;
  for (std::size_t i = 0; i < scored.size() && i < 3; ++i) out += (i ? ", " : "") + scored[i].second;
  return out;
}

/// Explanation text for an operation; throws with suggestions if unknown.
inline std::string explain(const std::string& name) {
  std::string key = name;
  if (key.rfind("check-", 0) != 0) {
    for (const auto& op : operation_catalogue())
      if (op.name == "check-" + key) key = op.name;
  }
  for (const auto& op : operation_catalogue())
    if (op.name == key)
      return op.name + "\n  " + op.summary + "\n  parameters: " + op.params + "\n  verdict: " + op.verdict + "\n";
  std::string all;
  for (const auto& op : operation_catalogue()) all += "  " + op.name + "\n";
  throw std::invalid_argument("unknown check '" + name + "'; did you mean: " + edit_hint(name) + "\navailable:\n" + all);
}

inline ItemResult dispatch_item(const Scenario& sc, const json& item, std::size_t index);

/// Runs one item. With "expect_fail": true a check passes exactly when
/// the underlying verdict is a failure (a known counterexample).
inline ItemResult run_item(const Scenario& sc, const json& item, std::size_t index) {
  auto r = dispatch_item(sc, item, index);
  const std::string path = "items[" + std::to_string(index) + "]";
  if (scn::get_or<bool>(item, "expect_fail", false, path) && r.status != "info") {
    r.values["verdict"] = r.status;
    r.status = r.status == "fail" ? "pass" : "fail";
  }
  return r;
}

inline ItemResult dispatch_item(const Scenario& sc, const json& item, std::size_t index) {
  const std::string path = "items[" + std::to_string(index) + "]";
  const auto op = scn::get_as<std::string>(scn::need(item, "op", path), path + ".op");
  scn::ItemContext c{sc,
                     item,
                     path,
                     scn::get_or<int>(item, "depth", sc.settings.depth, path),
                     scn::get_or<double>(item, "tol", sc.settings.tol, path),
                     scn::get_or<std::uint64_t>(item, "seed", sc.settings.seed + index, path),
                     scn::get_or<int>(item, "trials", sc.settings.trials, path)};
  if (op == "laws") return scn::op_laws(c);
  if (op == "segments") return scn::op_segments(c, false);
  if (op == "partition-check") return scn::op_segments(c, true);
  if (op == "controlled-map") return scn::op_controlled_map(c);
  if (op == "backend") return scn::op_backend(c);
  if (op.rfind("nt-", 0) == 0 && (op == "nt-mul" || op == "nt-adjoint" || op == "nt-expect" || op == "nt-grade" ||
                                  op == "nt-norm"))
    return scn::op_nt(c, op);
  if (op == "fock-build" || op == "fock-norm" || op == "fock-expect" || op == "fock-project" || op == "fock-reduction")
    return scn::op_fock(c, op);
  if (op == "check-toeplitz" || op == "check-condition-c" || op == "check-condition-cprime" ||
      op == "check-aperiodicity" || op == "check-graded" || op == "check-projections")
    return scn::op_check(c, op);
  if (op == "bundle-roundtrip" || op == "bundle-regular" || op == "bundle-spectrum") return scn::op_bundle(c, op);
  throw ScenarioError(path + ".op", "unknown operation '" + op + "'; did you mean: " + edit_hint(op));
}

struct RunOptions {
  std::string scenario_name;
  bool with_timestamp = true;
};

/// Runs every item in order. Item failures (including numerical
/// exceptions) are recorded per item and do not abort the run.
inline json run_scenario(const Scenario& sc, const RunOptions& opts = {}) {
  json report;
  report["tool"] = "ntforge";
  report["version"] = kVersion;
  report["scenario"] = opts.scenario_name;
  report["timestamp"] = opts.with_timestamp ? scn::timestamp_now() : "";
  report["settings"] = {{"depth", sc.settings.depth},
                        {"tol", sc.settings.tol},
                        {"seed", sc.settings.seed},
                        {"trials", sc.settings.trials},
                        {"dense_cap", sc.settings.dense_cap}};
  json items = json::array();
  std::map<std::string, int> counts{{"pass", 0}, {"fail", 0}, {"info", 0}, {"error", 0}};
  for (std::size_t i = 0; i < sc.items.size(); ++i) {
    const auto& item = sc.items[i];
    json entry;
    entry["name"] = item.value("name", "item" + std::to_string(i));
    entry["op"] = item.value("op", "");
    try {
      auto r = run_item(sc, item, i);
      entry["status"] = r.status;
      entry["values"] = std::move(r.values);
    } catch (const std::exception& e) {
      entry["status"] = "error";
      entry["error"] = e.what();
    }
    ++counts[entry["status"].get<std::string>()];
    items.push_back(std::move(entry));
  }
  report["items"] = std::move(items);
  report["summary"] = {{"pass", counts["pass"]}, {"fail", counts["fail"]}, {"info", counts["info"]},
                       {"error", counts["error"]}};
  return report;
}

/// 0 iff every item passed or was informational.
inline int exit_code(const json& report) {
  const auto& s = report.at("summary");
  return s.at("fail").get<int>() == 0 && s.at("error").get<int>() == 0 ? 0 : 1;
}

}  // namespace ntforge
