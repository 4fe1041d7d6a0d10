// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ntforge/analysis.hpp"
#include "ntforge/fellbundle.hpp"
#include "ntforge/fock.hpp"
#include "ntforge/instances.hpp"
#include "ntforge/lcm.hpp"
#include "ntforge/wick.hpp"

using namespace ntforge;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

NTElement random_element(const PrecategoryPtr& L, const ColorIdeal& K, int max_len, int terms, bool diagonal,
                         std::mt19937_64& rng) {
  const auto objs = L->semigroup().enumerate(max_len);
  NTElement x(L, K);
  for (int i = 0; i < terms; ++i) {
    const auto p = objs[rng() % objs.size()];
    const auto q = diagonal ? p : objs[rng() % objs.size()];
    x.add(L->random(p, q, K, rng));
  }
  return x;
}

// ---- 1 ---------------------------------------------------------------------------

Outcome semigroup_laws() {
  Outcome out;
  std::size_t failures = 0, instances = 0;
  double slowest = 0.0;
  for (const auto& inst : shipped_instances()) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& S = *inst.semigroup;
    const auto U = S.enumerate(4);
    const auto mults = S.enumerate(6);
    const std::set<Element> universe(U.begin(), U.end());
    for (const auto& p : U)
      for (const auto& s : U)
        for (const auto& t : U) {
          if (S.mul(S.mul(p, s), t) != S.mul(p, S.mul(s, t))) ++failures;
          if (s != t && S.mul(p, s) == S.mul(p, t)) ++failures;
        }
    // pP ∩ U by brute force over multipliers, using mul only
    auto ideal_in_U = [&](const Element& p) {
      std::set<Element> out;
      for (const auto& u : mults) {
        const auto w = S.mul(p, u);
        if (universe.count(w)) out.insert(w);
      }
      return out;
    };
    std::map<Element, std::set<Element>> ideals;
    for (const auto& p : U) ideals[p] = ideal_in_U(p);
    for (const auto& p : U)
      for (const auto& q : U) {
        std::set<Element> common;
        for (const auto& w : ideals[p])
          if (ideals[q].count(w)) common.insert(w);
        const auto r = S.right_lcm(p, q);
        if (!r) {
          if (!common.empty()) ++failures;
          continue;
        }
        if (S.mul(p, *S.left_divide(p, *r)) != *r || S.mul(q, *S.left_divide(q, *r)) != *r) ++failures;
        auto it = ideals.find(*r);
        if (it == ideals.end()) it = ideals.emplace(*r, ideal_in_U(*r)).first;
        if (it->second != common) ++failures;
      }
    const double dt = seconds_since(t0);
    slowest = std::max(slowest, dt);
    if (dt >= 10.0) ++failures;
    ++instances;
  }
  out.ok = failures == 0;
  out.detail = std::to_string(instances) + " instances to length 4, " + std::to_string(failures) +
               " failures, slowest " + fmt(slowest) + " s (limit 10 s)";
  return out;
}

// ---- 2 ---------------------------------------------------------------------------

Outcome partition_decomposition() {
  Outcome out;
  std::size_t failures = 0, families = 0, points = 0;
  std::mt19937_64 rng(2024);
  for (const char* name : {"free2", "N2"}) {
    const auto S = find_instance(name);
    const auto pool = S->enumerate(3);
    const auto all = S->enumerate(5);
    const auto mults = S->enumerate(5);
    auto below = [&](const Element& f, const Element& s) {
      for (const auto& u : mults)
        if (S->mul(f, u) == s) return true;
      return false;
    };
    for (int trial = 0; trial < 20; ++trial) {
      FiniteSubset F;
      const int k = 1 + static_cast<int>(rng() % 4);
      for (int i = 0; i < k; ++i) F.push_back(pool[rng() % pool.size()]);
      F = normalize_subset(F);
      const auto fam = initial_segments(*S, F);
      ++families;
      for (const auto& s : all) {
        ++points;
        FiniteSubset expected;
        for (const auto& f : F)
          if (below(f, s)) expected.push_back(f);
        int hits = 0;
        for (const auto& seg : fam.segments)
          if (partition_member(*S, s, F, seg.C)) {
            ++hits;
            if (seg.C != expected) ++failures;
          }
        if (hits != 1) ++failures;
      }
    }
  }
  out.ok = failures == 0 && families >= 40;
  out.detail = std::to_string(families) + " families, " + std::to_string(points) + " element checks, " +
               std::to_string(failures) + " failures";
  return out;
}

// ---- 3 ---------------------------------------------------------------------------

Outcome controlled_map() {
  const auto F = Semigroup::free_monoid("abc");
  const auto theta = abelianization_map(F);
  const auto rep = check_controlled_map(theta, 4);
  // independent image check: letter counts of the printed word
  std::size_t bad = 0;
  for (const auto& w : F->enumerate(4)) {
    const std::string s = F->format(w);
    std::vector<long> counts(3, 0);
    for (char ch : s)
      if (ch >= 'a' && ch <= 'c') ++counts[static_cast<std::size_t>(ch - 'a')];
    if (theta(w) != theta.target->make(counts)) ++bad;
  }
  Outcome out;
  out.ok = rep.passed && bad == 0;
  out.detail = "free monoid on 3 letters -> N^3 to depth 4: " + std::to_string(rep.checked) + " checks, " +
               std::to_string(rep.failures.size()) + " failures, " + std::to_string(bad) + " image mismatches";
  return out;
}

// ---- 4 ---------------------------------------------------------------------------

Outcome homomorphism_oracle() {
  struct Backend {
    const char* name;
    std::vector<Dims> dims;
  };
  const std::vector<Backend> backends{{"N", {{3}}}, {"N", {{2, 1}}}, {"free2", {{2, 1}, {1, 3}}}, {"free2", {{3}, {2}}}};
  std::mt19937_64 rng(4);
  double worst = 0.0;
  int pairs = 0;
  for (const auto& b : backends) {
    const auto L = Precategory::colored(find_instance(b.name), b.dims);
    const auto K = L->full_ideal();
    const auto tr = Truncation::make(L, K, 6);
    for (int i = 0; i < 25; ++i) {
      const auto x = random_element(L, K, 2, 3, false, rng), y = random_element(L, K, 2, 3, false, rng);
      const int degree = static_cast<int>(x.max_key_length() + y.max_key_length());
      worst = std::max(worst, interior_difference(lift(nt_mul(x, y), tr), lift(x, tr) * lift(y, tr), degree));
      ++pairs;
    }
  }
  Outcome out;
  out.ok = pairs >= 100 && worst <= 1e-9;
  out.detail = std::to_string(pairs) + " pairs on N and the free monoid, depth 6, worst interior defect " +
               fmt(worst) + " (tol 1e-9)";
  return out;
}

// ---- 5 ---------------------------------------------------------------------------

Outcome norm_formula() {
  const auto N = Semigroup::direct_sum(1);
  const auto L1 = Precategory::colored(N, {{1}});
  const auto K1 = L1->full_ideal();
  auto at = [&](int p, double v) {
    return single_term(L1, K1, L1->make(N->make({p}), N->make({p}), {Matrix::Constant(1, 1, v)}));
  };
  const double worked = core_norm(nt_add(at(0, 1.0), at(1, -1.0))).value;

  struct Backend {
    const char* name;
    std::vector<Dims> dims;
  };
  const std::vector<Backend> backends{{"N", {{3}}}, {"N2", {{1, 2}, {2, 1}}}, {"free2", {{2}, {1}}}, {"NxZ2", {{2}, {1}}}};
  std::mt19937_64 rng(5);
  double worst = 0.0;
  int samples = 0;
  bool all_exact = true;
  for (const auto& b : backends) {
    const auto L = Precategory::colored(find_instance(b.name), b.dims);
    const auto K = L->full_ideal();
    for (int i = 0; i < 15; ++i) {
      const auto x = random_element(L, K, 2, 3, true, rng);
      const auto cn = core_norm(x);
      all_exact = all_exact && cn.exact;
      const auto tr = Truncation::make(L, K, static_cast<int>(x.max_key_length()) + 2);
      worst = std::max(worst, std::abs(cn.value - fock_norm(x, tr).norm));
      ++samples;
    }
  }
  Outcome out;
  out.ok = samples >= 50 && all_exact && worst <= 1e-6 && worked == 1.0;
  out.detail = std::to_string(samples) + " diagonal elements, worst |core - fock| " + fmt(worst) +
               " (tol 1e-6); worked example gives " + fmt(worked) + (worked == 1.0 ? " exactly" : "");
  return out;
}

// ---- 6 ---------------------------------------------------------------------------

Outcome transcendental_expectation_check() {
  const auto A = Semigroup::absorption();
  const auto LA = Precategory::colored(A, {{1}, {1}});
  const auto KA = LA->full_ideal();
  const auto xa = single_term(LA, KA, LA->make(A->parse("(0,1)"), A->parse("(0,2)"), {Matrix::Ones(1, 1)}));
  const auto trA = Truncation::make(LA, KA, 4);
  const double absorbing = transcendental_expectation(xa, trA).norm();

  double worst = 0.0;
  int keys = 0;
  for (const auto& inst : shipped_instances()) {
    const auto& S = inst.semigroup;
    if (!S->is_cancellative()) continue;
    const auto L = Precategory::colored(S, std::vector<Dims>(S->generators().size(), Dims{1}));
    const auto K = L->full_ideal();
    const auto tr = Truncation::make(L, K, 3);
    const auto objs = S->enumerate(1);
    for (const auto& p : objs)
      for (const auto& q : objs) {
        if (p == q) continue;
        const auto x = single_term(L, K, L->make(p, q, {Matrix::Ones(1, 1)}));
        const auto& key = x.terms().begin()->first;
        if (key.first == key.second) continue;
        worst = std::max(worst, transcendental_expectation(x, tr).norm());
        ++keys;
      }
  }
  Outcome out;
  out.ok = absorbing >= 0.99 && worst <= 1e-12 && keys > 0;
  out.detail = "absorption ((0,1),(0,2)): " + fmt(absorbing) + " (need >= 0.99); cancellative: " +
               std::to_string(keys) + " off-diagonal keys, worst " + fmt(worst) + " (tol 1e-12)";
  return out;
}

// ---- 7 ---------------------------------------------------------------------------

Outcome projection_semilattice() {
  double worst = 0.0;
  int products = 0;
  for (const char* name : {"N", "N2", "free2", "NxZ2", "absorption", "N*N2"}) {
    const auto S = find_instance(name);
    const auto L = Precategory::colored(S, std::vector<Dims>(S->generators().size(), Dims{1}));
    const auto tr = Truncation::make(L, L->full_ideal(), 5);
    const auto ps = S->enumerate(2);
    std::map<Element, FockOperator> Q;
    for (const auto& p : ps) Q.emplace(p, projection_QT(p, tr));
    for (const auto& p : ps)
      for (const auto& q : ps) {
        const auto prod = Q.at(p) * Q.at(q);
        const auto r = S->right_lcm(p, q);
        const double d = r ? (prod - projection_QT(*r, tr)).frobenius_bound() : prod.frobenius_bound();
        worst = std::max(worst, d);
        ++products;
      }
  }
  Outcome out;
  out.ok = worst <= 1e-9;
  out.detail = std::to_string(products) + " products at depth 5, worst " + fmt(worst) + " (tol 1e-9)";
  return out;
}

// ---- 8 ---------------------------------------------------------------------------

Outcome degenerate_example() {
  const auto N = Semigroup::direct_sum(1);
  const auto Z = Precategory::zero_tensor(N, {1, 1, 1, 1});
  const auto zphi = fock_representation(std::make_shared<const Truncation>(Truncation::make(Z, Z->full_ideal(), 3)));
  const auto zeq = check_projection_equivalences(zphi, 2);

  const auto C = Precategory::colored(N, {{1}});
  const auto cphi = fock_representation(std::make_shared<const Truncation>(
      Truncation::make(C, C->full_ideal(), 4, std::vector<Element>{N->identity()})));
  const auto ceq = check_projection_equivalences(cphi, 2);
  const bool colored_ok = ceq.equal_projections && ceq.semilattice && ceq.preorder && ceq.special_relation;

  Outcome out;
  out.ok = zeq.max_distance >= 0.99 && !zeq.special_relation && colored_ok;
  out.detail = "zero-tensor: max |Q_p - Q_<p>| " + fmt(zeq.max_distance) + ", special relation " +
               (zeq.special_relation ? "holds" : "fails") + "; colored: equivalences " +
               (colored_ok ? "all hold" : "broken");
  return out;
}

// ---- 9 ---------------------------------------------------------------------------

Outcome condition_c() {
  double smallest = std::numeric_limits<double>::infinity();
  int cases = 0, failed = 0;
  for (const char* name : {"N", "N2", "free2"}) {
    const auto S = find_instance(name);
    const auto L = Precategory::colored(S, std::vector<Dims>(S->generators().size(), Dims{1}));
    const auto phi = fock_representation(std::make_shared<const Truncation>(
        Truncation::make(L, L->full_ideal(), 3, std::vector<Element>{S->identity()})));
    const auto elems = S->enumerate(2);
    for (const auto& p : elems) {
      std::vector<Element> allowed;
      for (const auto& q : elems)
        if (!S->leq(q, p)) allowed.push_back(q);
      const std::size_t n = allowed.size();
      for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
        if (__builtin_popcountll(mask) > 3) continue;
        std::vector<Element> qs;
        for (std::size_t i = 0; i < n; ++i)
          if (mask >> i & 1) qs.push_back(allowed[i]);
        const auto r = check_condition_C(phi, p, qs);
        smallest = std::min(smallest, r.smallest_singular_value);
        if (!r.passed) ++failed;
        ++cases;
      }
    }
  }
  Outcome out;
  out.ok = failed == 0 && smallest >= 1e-6;
  out.detail = std::to_string(cases) + " (p, qs) cases on N, N^2, free monoid, smallest singular value " +
               fmt(smallest) + " (need >= 1e-6), " + std::to_string(failed) + " failures";
  return out;
}

// ---- 10 --------------------------------------------------------------------------

Outcome group_dictionary() {
  const auto Z2 = find_instance("Z2"), S3 = find_instance("S3");
  BlockAutomorphism id = BlockAutomorphism::identity({1, 1}), sw = id;
  sw.perm = {1, 0};
  const std::vector<BundleFiberFamily> bundles{
      semidirect_bundle(Z2, {1}, trivial_action(Z2, {1})),
      semidirect_bundle(Z2, {1, 1}, {id, sw}),
      semidirect_bundle(S3, {2, 1}, trivial_action(S3, {2, 1})),
      bundle_from_precategory(GroupPrecategory::from_colored(Precategory::colored(S3, std::vector<Dims>(5, Dims{1, 1})))),
  };
  bool exact = true;
  for (const auto& B : bundles) exact = exact && check_round_trip(B, 3, 10).bit_exact;

  const auto& B = bundles[0];
  const auto psi = regular_representation(B);
  std::mt19937_64 rng(10);
  std::normal_distribution<double> nd;
  double spec_err = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double a = nd(rng), b = nd(rng);
    const Matrix M = represent_sum(psi, {{Matrix::Constant(1, 1, a)}, {Matrix::Constant(1, 1, b)}});
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    spec_err = std::max({spec_err, std::abs(es.eigenvalues()(0) - std::min(a - b, a + b)),
                         std::abs(es.eigenvalues()(1) - std::max(a - b, a + b))});
  }
  const std::vector<std::vector<FiberElem>> one_minus_u{{{Matrix::Ones(1, 1)}, {-Matrix::Ones(1, 1)}}};
  const bool collapse_fails = !check_graded_bundle(collapsing_representation(B), one_minus_u).passed;

  Outcome out;
  out.ok = exact && spec_err <= 1e-12 && collapse_fails;
  out.detail = std::string("round trip ") + (exact ? "bit-exact" : "differs") + " on 4 bundles; Z/2 spectrum error " +
               fmt(spec_err) + " (tol 1e-12); collapse on 1-u " + (collapse_fails ? "fails as expected" : "passes");
  return out;
}

// ---- 11 --------------------------------------------------------------------------

Outcome aperiodicity() {
  // trivial unit action on the N x Z/2 backend, b = identity block at e
  const auto U = find_instance("NxZ2");
  const auto L = Precategory::colored(U, {{1}, {1}});
  const Element e = U->identity(), x = U->parse("0|1");
  auto tensor_trivial = [&](const Matrix& a) { return L->rtensor(L->make(e, e, {a}), x).blocks[0]; };
  const Matrix one = Matrix::Identity(1, 1);
  const auto periodic = aperiodicity_search(tensor_trivial, one, one, one, 20, 11);

  // Z/2 swapping the summands of C ⊕ C, b = e_11
  const auto Z2 = find_instance("Z2");
  BlockAutomorphism id = BlockAutomorphism::identity({1, 1}), sw = id;
  sw.perm = {1, 0};
  const auto crossed = GroupPrecategory::crossed(Z2, {1, 1}, {id, sw});
  const std::vector<Index> dims{1, 1};
  auto tensor_flip = [&](const Matrix& a) { return block_diag(crossed.rtensor(0, 0, split_blocks(a, dims), 1)); };
  Matrix b = Matrix::Zero(2, 2);
  b(0, 0) = 1.0;
  const auto flip = aperiodicity_search(tensor_flip, b, Matrix::Identity(2, 2), block_mask(dims), 20, 11);
  // closed form over a = diag(s, t), max(s, t) = 1: ‖α(a) e_11 a‖ = s t, infimum 0
  double oracle = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000; ++i) {
    const double t = i / 1000.0;
    oracle = std::min({oracle, 1.0 * t, t * 1.0});
  }
  Outcome out;
  out.ok = std::abs(periodic.best - 1.0) <= 1e-6 && flip.best <= 0.5 + 1e-3 && flip.best >= oracle - 1e-12;
  out.detail = "trivial action best " + fmt(periodic.best) + " (need 1 +- 1e-6); flip best " + fmt(flip.best) +
               " (need <= 0.501), closed-form infimum " + fmt(oracle);
  return out;
}

// ---- 12 --------------------------------------------------------------------------

Outcome fock_reduction() {
  struct Backend {
    const char* name;
    std::vector<Dims> dims;
    int depth;
  };
  const std::vector<Backend> backends{{"Z3", {{1, 1}, {1, 1}}, 3}, {"S3", std::vector<Dims>(5, Dims{1, 1}), 3},
                                      {"N", {{2}}, 5}, {"N", {{1, 3}}, 4}};
  std::mt19937_64 rng(12);
  double worst = 0.0;
  int samples = 0;
  for (const auto& b : backends) {
    const auto L = Precategory::colored(find_instance(b.name), b.dims);
    const auto K = L->full_ideal();
    const auto tr = Truncation::make(L, K, b.depth);
    for (int i = 0; i < 6; ++i) {
      const auto x = random_element(L, K, 1, 3, i % 2 == 0, rng);
      const auto r = fock_source_restricted(x, L->semigroup().identity(), tr);
      worst = std::max(worst, std::abs(r.full_norm - r.restricted_norm));
      ++samples;
    }
  }
  Outcome out;
  out.ok = samples >= 20 && worst <= 1e-6;
  out.detail = std::to_string(samples) + " elements over Z/3, S3 and N, worst |fock - restricted at e| " + fmt(worst) +
               " (tol 1e-6)";
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"semigroup laws", semigroup_laws},
      {"partition decomposition", partition_decomposition},
      {"controlled map", controlled_map},
      {"Wick/Fock homomorphism", homomorphism_oracle},
      {"norm formula", norm_formula},
      {"transcendental expectation", transcendental_expectation_check},
      {"projection semilattice", projection_semilattice},
      {"degenerate example", degenerate_example},
      {"condition (C)", condition_c},
      {"group dictionary", group_dictionary},
      {"aperiodicity search", aperiodicity},
      {"Fock reduction at e", fock_reduction},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.ok) ++failed;
    std::printf("%s %2zu %s: %s [%.2fs]\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
