#pragma once

// Formal sums Σ i(a_{p,q}) with the Nica-covariant product.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ntforge/lcm.hpp"
#include "ntforge/precategory.hpp"

namespace ntforge {

using Key = std::pair<Element, Element>;

class NTElement {
 public:
  NTElement(PrecategoryPtr L, ColorIdeal K) : L_(std::move(L)), K_(std::move(K)) {}

  const Precategory& backend() const { return *L_; }
  const PrecategoryPtr& backend_ptr() const { return L_; }
  const ColorIdeal& ideal() const { return K_; }
  const std::map<Key, Arrow>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  /// Adds `a` (an element of K(range, source)) under the unit-canonical key.
  void add(const Arrow& a) {
    if (!L_->ideal_membership(a, K_))
      throw std::invalid_argument("coefficient at (" + L_->semigroup().format(a.range) + ", " +
                                  L_->semigroup().format(a.source) + ") is not in the ideal");
    Arrow c = canonical(a);
    Key k{c.range, c.source};
    auto it = terms_.find(k);
    if (it == terms_.end()) {
      terms_.emplace(std::move(k), std::move(c));
    } else {
      it->second = L_->add(it->second, c);
    }
  }

  /// Drops coefficients of norm ≤ tol.
  void prune(double tol = kZeroTol) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (it->second.norm() <= tol)
        it = terms_.erase(it);
      else
        ++it;
    }
  }

  /// Keys are representatives of {(px, qx) : x ∈ P*}; the coefficient is
  /// transported by ⊗1_x, which is the identity on blocks since units have
  /// dimension one.
  Arrow canonical(const Arrow& a) const {
    const auto& S = L_->semigroup();
    if (S.has_trivial_units()) return a;
    Key best{a.range, a.source};
    Element best_x = S.identity();
    for (const auto& x : S.units().elements) {
      Key k{S.mul(a.range, x), S.mul(a.source, x)};
      if (k < best) {
        best = k;
        best_x = x;
      }
    }
    if (S.is_identity(best_x)) return a;
    return L_->rtensor(a, best_x);
  }

  std::size_t max_key_length() const {
    std::size_t n = 0;
    const auto& S = L_->semigroup();
    for (const auto& [k, a] : terms_)
      n = std::max<std::size_t>(n, static_cast<std::size_t>(std::max(S.length(k.first), S.length(k.second))));
    return n;
  }

 private:
  PrecategoryPtr L_;
  ColorIdeal K_;
  std::map<Key, Arrow> terms_;
};

inline NTElement single_term(const PrecategoryPtr& L, const ColorIdeal& K, const Arrow& a) {
  NTElement x(L, K);
  x.add(a);
  x.prune();
  return x;
}

inline void require_same_backend(const NTElement& x, const NTElement& y) {
  if (x.backend_ptr() != y.backend_ptr() || x.ideal().colors != y.ideal().colors)
    throw std::invalid_argument("elements live over different backends or ideals");
}

/// (a ⊗ 1_{q^{-1}r})(b ⊗ 1_{s^{-1}r}) with r the canonical lcm of q and s, or
/// nothing when qP ∩ sP = ∅.
inline std::optional<Arrow> nica_product(const Precategory& L, const Arrow& a, const Arrow& b) {
  const auto& S = L.semigroup();
  const auto r = S.right_lcm(a.source, b.range);
  if (!r) return std::nullopt;
  return L.compose(L.rtensor(a, *S.left_divide(a.source, *r)), L.rtensor(b, *S.left_divide(b.range, *r)));
}

inline NTElement nt_mul(const NTElement& x, const NTElement& y) {
  require_same_backend(x, y);
  NTElement out(x.backend_ptr(), x.ideal());
  for (const auto& [k1, a] : x.terms())
    for (const auto& [k2, b] : y.terms())
      if (auto c = nica_product(x.backend(), a, b)) out.add(*c);
  out.prune();
  return out;
}

inline NTElement nt_adjoint(const NTElement& x) {
  NTElement out(x.backend_ptr(), x.ideal());
  for (const auto& [k, a] : x.terms()) out.add(x.backend().adjoint(a));
  return out;
}

inline NTElement nt_add(const NTElement& x, const NTElement& y) {
  require_same_backend(x, y);
  NTElement out = x;
  for (const auto& [k, b] : y.terms()) out.add(b);
  out.prune();
  return out;
}

inline NTElement nt_scale(const NTElement& x, cplx z) {
  NTElement out(x.backend_ptr(), x.ideal());
  for (const auto& [k, a] : x.terms()) out.add(x.backend().scale(a, z));
  out.prune();
  return out;
}

/// Keeps the keys with p = q. Only meaningful for cancellative semigroups.
inline NTElement diagonal_expectation(const NTElement& x) {
  if (!x.backend().semigroup().is_cancellative())
    throw std::invalid_argument("diagonal expectation requires a cancellative semigroup; use the Fock-side expectation");
  NTElement out(x.backend_ptr(), x.ideal());
  for (const auto& [k, a] : x.terms())
    if (k.first == k.second) out.add(a);
  return out;
}

// ---- grading -----------------------------------------------------------------

/// A homomorphism θ : P → G into a finitely generated abelian group
/// Z^a ⊕ ⊕ Z/n_i (modulus 0 stands for Z) or into a finite group given by a
/// table. Group elements are integer vectors (a single index for tables).
struct GradingMap {
  std::string name;
  std::vector<int> moduli;   // abelian target
  SemigroupPtr table_group;  // finite target, if set
  std::function<std::vector<std::int64_t>(const Element&)> theta;

  std::vector<std::int64_t> normalize(std::vector<std::int64_t> g) const {
    if (table_group) return g;
    for (std::size_t i = 0; i < moduli.size(); ++i)
      if (moduli[i] > 0) g[i] = ((g[i] % moduli[i]) + moduli[i]) % moduli[i];
    return g;
  }
  std::vector<std::int64_t> mul(const std::vector<std::int64_t>& g, const std::vector<std::int64_t>& h) const {
    if (table_group) return {table_group->group_mul_index(static_cast<int>(g[0]), static_cast<int>(h[0]))};
    std::vector<std::int64_t> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] + h[i];
    return normalize(out);
  }
  std::vector<std::int64_t> inv(const std::vector<std::int64_t>& g) const {
    if (table_group) return {table_group->group_inverse_index(static_cast<int>(g[0]))};
    std::vector<std::int64_t> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = -g[i];
    return normalize(out);
  }
  std::vector<std::int64_t> identity() const {
    if (table_group) return {0};
    return std::vector<std::int64_t>(moduli.size(), 0);
  }
  std::vector<std::int64_t> operator()(const Element& p) const { return normalize(theta(p)); }
  std::vector<std::int64_t> grade(const Element& p, const Element& q) const { return mul((*this)(p), inv((*this)(q))); }

  std::string format(const std::vector<std::int64_t>& g) const {
    if (table_group) return table_group->group_names().at(static_cast<std::size_t>(g[0]));
    return detail::format_int_tuple(g);
  }
  std::vector<std::int64_t> parse(const std::string& s) const {
    if (table_group) return table_group->parse(s).data;
    auto v = detail::parse_int_tuple(s);
    if (v.size() != moduli.size()) throw std::invalid_argument("grade '" + s + "' has wrong arity");
    return normalize(v);
  }
};

/// The natural grading for each instance kind: inclusion N^k → Z^k,
/// abelianization for free products, identity for finite groups, the
/// (base, unit) pair for unit extensions over N^k, and k for (k,m).
inline GradingMap default_grading(const SemigroupPtr& S) {
  GradingMap g;
  switch (S->kind()) {
    case SemigroupKind::DirectSum:
      g.name = "inclusion";
      g.moduli.assign(static_cast<std::size_t>(S->rank()), 0);
      g.theta = [](const Element& p) { return p.data; };
      break;
    case SemigroupKind::FreeProduct: {
      auto ab = abelianization_map(S);
      g.name = "abelianization";
      g.moduli.assign(static_cast<std::size_t>(ab.target->rank()), 0);
      g.theta = [ab](const Element& p) { return ab(p).data; };
      break;
    }
    case SemigroupKind::UnitExtension: {
      const auto& base = S->base();
      if (base->kind() == SemigroupKind::DirectSum) {
        g.moduli.assign(static_cast<std::size_t>(base->rank()), 0);
      } else if (base->kind() == SemigroupKind::FreeProduct) {
        g.moduli.assign(static_cast<std::size_t>(abelianization_map(base).target->rank()), 0);
      } else {
        throw std::invalid_argument("no default grading for this unit extension");
      }
      for (int m : S->unit_moduli()) g.moduli.push_back(m);
      g.name = "base-and-unit";
      g.theta = [S](const Element& p) {
        const auto [b, u] = S->split_unit(p);
        std::vector<std::int64_t> d;
        if (S->base()->kind() == SemigroupKind::DirectSum)
          d = b.data;
        else
          d = abelianization_map(S->base())(b).data;
        d.insert(d.end(), u.begin(), u.end());
        return d;
      };
      break;
    }
    case SemigroupKind::Absorption:
      g.name = "first-coordinate";
      g.moduli = {0};
      g.theta = [](const Element& p) { return std::vector<std::int64_t>{p.data[0]}; };
      break;
    case SemigroupKind::FiniteGroup:
      g.name = "identity";
      g.table_group = S;
      g.theta = [](const Element& p) { return p.data; };
      break;
  }
  return g;
}

/// Checks θ(e) = 1 and θ(pq) = θ(p)θ(q) to the given depth.
inline CheckReport check_grading(const Semigroup& S, const GradingMap& g, int depth) {
  CheckReport rep;
  if (g(S.identity()) != g.identity()) rep.fail("theta(e) is not the identity");
  const auto elems = S.enumerate(depth);
  for (const auto& p : elems)
    for (const auto& q : elems) {
      ++rep.checked;
      if (g(S.mul(p, q)) != g.mul(g(p), g(q))) rep.fail("theta is not multiplicative at (" + S.format(p) + ", " + S.format(q) + ")");
    }
  return rep;
}

inline NTElement grade_project(const NTElement& x, const GradingMap& g, const std::vector<std::int64_t>& grade) {
  NTElement out(x.backend_ptr(), x.ideal());
  const auto target = g.normalize(grade);
  for (const auto& [k, a] : x.terms())
    if (g.grade(k.first, k.second) == target) out.add(a);
  return out;
}

inline std::set<std::vector<std::int64_t>> grades_of(const NTElement& x, const GradingMap& g) {
  std::set<std::vector<std::int64_t>> out;
  for (const auto& [k, a] : x.terms()) out.insert(g.grade(k.first, k.second));
  return out;
}

// ---- core norm ---------------------------------------------------------------

struct CoreNorm {
  double value = 0.0;
  bool exact = true;
  bool truncated = false;
  int search_depth = 0;
};

/// Norm of the element Z = Σ E^T(T(a_{p,q})) of the transcendental core.
///
/// Diagonal keys: max over C ∈ In(F) of ‖Σ_{p∈C} a_{p,p} ⊗ 1_{p^{-1}σ(C)}‖,
/// which is exact. Mixed keys: the supremum over w ∈ P_{F,C} is taken over
/// w of length ≤ `search_depth`, giving a lower bound.
inline CoreNorm core_norm(const NTElement& x, int search_depth = -1) {
  const auto& L = x.backend();
  const auto& S = L.semigroup();
  CoreNorm out;
  if (x.empty()) return out;

  FiniteSubset F;
  bool diagonal = true;
  for (const auto& [k, a] : x.terms()) {
    F.push_back(k.first);
    F.push_back(k.second);
    if (k.first != k.second) diagonal = false;
  }
  F = normalize_subset(F);
  const auto fam = initial_segments(S, F, std::max(kDefaultSegmentBound, F.size()));

  if (diagonal) {
    for (const auto& seg : fam.segments) {
      Arrow sum = L.zero(seg.sigma, seg.sigma);
      for (const auto& [k, a] : x.terms())
        if (std::binary_search(seg.C.begin(), seg.C.end(), k.first))
          sum = L.add(sum, L.rtensor(a, *S.left_divide(k.first, seg.sigma)));
      out.value = std::max(out.value, L.restrict_to(sum, x.ideal()).norm());
    }
    return out;
  }

  if (search_depth < 0) search_depth = static_cast<int>(x.max_key_length()) + 3;
  out.exact = false;
  out.truncated = true;
  out.search_depth = search_depth;
  const auto candidates = S.enumerate(search_depth);

  // Every key must meet the core: some w with p^{-1}w = q^{-1}w.
  for (const auto& [k, a] : x.terms()) {
    bool meets = false;
    for (const auto& w : candidates) {
      const auto u = S.left_divide(k.first, w), v = S.left_divide(k.second, w);
      if (u && v && *u == *v) {
        meets = true;
        break;
      }
    }
    if (!meets)
      throw std::invalid_argument("key (" + S.format(k.first) + ", " + S.format(k.second) +
                                  ") does not meet the transcendental core within the search depth");
  }

  for (const auto& seg : fam.segments)
    for (const auto& w : candidates) {
      if (!partition_member(S, w, fam.F, seg.C)) continue;
      Arrow sum = L.zero(w, w);
      for (const auto& [k, a] : x.terms()) {
        if (!std::binary_search(seg.C.begin(), seg.C.end(), k.first) ||
            !std::binary_search(seg.C.begin(), seg.C.end(), k.second))
          continue;
        const auto u = S.left_divide(k.first, w), v = S.left_divide(k.second, w);
        if (!u || !v || *u != *v) continue;
        sum = L.add(sum, L.rtensor(a, *v));
      }
      out.value = std::max(out.value, L.restrict_to(sum, x.ideal()).norm());
    }
  return out;
}

}  // namespace ntforge
