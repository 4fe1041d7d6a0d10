#pragma once

// Normal-form arithmetic for right LCM semigroups.
//
// Supported instances:
//   * DirectSum      N^k, elements are natural vectors.
//   * FreeProduct    free product of instances with trivial unit groups;
//                    elements are reduced alternating words. A free product
//                    of copies of N named by letters is the free monoid.
//   * UnitExtension  base × U for a finite abelian group U = ⊕ Z/n_i.
//   * Absorption     pairs (k,m) with (k,m)(l,n) = (k+l,n) if l>0 else
//                    (k,m+n); left but not right cancellative.
//   * FiniteGroup    a multiplication table.
//
// Elements are immutable values; equality is equality of normal forms.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ntforge {

enum class SemigroupKind { DirectSum, FreeProduct, UnitExtension, Absorption, FiniteGroup };

struct Element {
  std::uint64_t instance = 0;
  std::vector<std::int64_t> data;

  friend bool operator==(const Element&, const Element&) = default;
  friend std::strong_ordering operator<=>(const Element& a, const Element& b) {
    if (auto c = a.instance <=> b.instance; c != 0) return c;
    return std::lexicographical_compare_three_way(a.data.begin(), a.data.end(), b.data.begin(),
                                                  b.data.end());
  }
};

class Semigroup;
using SemigroupPtr = std::shared_ptr<const Semigroup>;

struct UnitGroup {
  std::vector<Element> elements;
  std::map<Element, Element> inverse;
};

namespace detail {

inline std::uint64_t next_instance_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::int64_t> parse_int_tuple(const std::string& text) {
  std::string s = trim(text);
  if (!s.empty() && s.front() == '(') {
    if (s.back() != ')') throw std::invalid_argument("unbalanced parentheses in '" + text + "'");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<std::int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("empty component in '" + text + "'");
    std::size_t pos = 0;
    const long long v = std::stoll(item, &pos);
    if (pos != item.size()) throw std::invalid_argument("bad integer '" + item + "'");
    out.push_back(v);
  }
  return out;
}

inline std::string format_int_tuple(const std::vector<std::int64_t>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

}  // namespace detail

class Semigroup {
 public:
  struct Block {
    int factor;
    std::vector<std::int64_t> payload;
  };

  // ---- construction --------------------------------------------------------

  static SemigroupPtr direct_sum(int rank) {
    if (rank < 1) throw std::invalid_argument("direct sum rank must be positive");
    auto s = std::shared_ptr<Semigroup>(new Semigroup(SemigroupKind::DirectSum));
    s->rank_ = rank;
    return s;
  }

  static SemigroupPtr free_product(std::vector<SemigroupPtr> factors, std::vector<std::string> names) {
    if (factors.empty()) throw std::invalid_argument("free product needs at least one factor");
    if (factors.size() != names.size()) throw std::invalid_argument("one name per factor required");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (!factors[i]->has_trivial_units())
        throw std::invalid_argument("free product factors must have trivial unit groups");
      const auto& n = names[i];
      if (n.empty() || n == "e" || !std::isalpha(static_cast<unsigned char>(n[0])))
        throw std::invalid_argument("invalid factor name '" + n + "'");
      for (char c : n)
        if (!std::isalnum(static_cast<unsigned char>(c)))
          throw std::invalid_argument("invalid factor name '" + n + "'");
      if (!seen.insert(n).second) throw std::invalid_argument("duplicate factor name '" + n + "'");
    }
    auto s = std::shared_ptr<Semigroup>(new Semigroup(SemigroupKind::FreeProduct));
    s->factors_ = std::move(factors);
    s->names_ = std::move(names);
    return s;
  }

  /// Free monoid on single-character letters (free product of copies of N).
  static SemigroupPtr free_monoid(const std::string& letters) {
    std::vector<SemigroupPtr> f;
    std::vector<std::string> n;
    for (char c : letters) {
      f.push_back(direct_sum(1));
      n.emplace_back(1, c);
    }
    return free_product(std::move(f), std::move(n));
  }

  static SemigroupPtr unit_extension(SemigroupPtr base, std::vector<int> moduli) {
    if (!base->has_trivial_units())
      throw std::invalid_argument("unit extension base must have trivial units");
    if (moduli.empty()) throw std::invalid_argument("unit extension needs a unit group");
    for (int m : moduli)
      if (m < 1) throw std::invalid_argument("cyclic moduli must be positive");
    auto s = std::shared_ptr<Semigroup>(new Semigroup(SemigroupKind::UnitExtension));
    s->base_ = std::move(base);
    s->moduli_ = std::move(moduli);
    return s;
  }

  static SemigroupPtr absorption() {
    return std::shared_ptr<Semigroup>(new Semigroup(SemigroupKind::Absorption));
  }

  /// `table[i][j]` is the index of names[i]·names[j]; index 0 must be the identity.
  static SemigroupPtr finite_group(std::vector<std::string> names, std::vector<std::vector<int>> table) {
    const int n = static_cast<int>(names.size());
    if (n == 0) throw std::invalid_argument("finite group needs elements");
    if (static_cast<int>(table.size()) != n) throw std::invalid_argument("table size mismatch");
    for (const auto& row : table) {
      if (static_cast<int>(row.size()) != n) throw std::invalid_argument("table size mismatch");
      for (int v : row)
        if (v < 0 || v >= n) throw std::invalid_argument("table entry out of range");
    }
    for (int i = 0; i < n; ++i)
      if (table[0][i] != i || table[i][0] != i)
        throw std::invalid_argument("element 0 must be the identity");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          if (table[table[i][j]][k] != table[i][table[j][k]])
            throw std::invalid_argument("group table is not associative");
    std::vector<int> inv(n, -1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        if (table[i][j] == 0 && table[j][i] == 0) inv[i] = j;
      if (inv[i] < 0) throw std::invalid_argument("element '" + names[i] + "' has no inverse");
    }
    auto s = std::shared_ptr<Semigroup>(new Semigroup(SemigroupKind::FiniteGroup));
    s->names_ = std::move(names);
    s->table_ = std::move(table);
    s->inverse_ = std::move(inv);
    return s;
  }

  /// Z/n_1 × ... × Z/n_k with generators named u, v, w, ... (or the given names).
  static SemigroupPtr cyclic_group_product(const std::vector<int>& moduli,
                                           std::vector<std::string> gen_names = {}) {
    if (gen_names.empty()) {
      const std::string pool = "uvwxyz";
      for (std::size_t i = 0; i < moduli.size(); ++i) gen_names.emplace_back(1, pool.at(i));
    }
    int n = 1;
    for (int m : moduli) {
      if (m < 1) throw std::invalid_argument("cyclic moduli must be positive");
      n *= m;
    }
    auto digits = [&](int idx) {
      std::vector<int> d(moduli.size());
      for (std::size_t i = moduli.size(); i-- > 0;) {
        d[i] = idx % moduli[i];
        idx /= moduli[i];
      }
      return d;
    };
    auto index_of = [&](const std::vector<int>& d) {
      int idx = 0;
      for (std::size_t i = 0; i < moduli.size(); ++i) idx = idx * moduli[i] + d[i];
      return idx;
    };
    std::vector<std::string> names(n);
    std::vector<std::vector<int>> table(n, std::vector<int>(n));
    for (int i = 0; i < n; ++i) {
      const auto d = digits(i);
      std::string name;
      for (std::size_t k = 0; k < d.size(); ++k) {
        if (d[k] == 0) continue;
        name += gen_names[k];
        if (d[k] > 1) name += "^" + std::to_string(d[k]);
      }
      names[i] = name.empty() ? "e" : name;
      for (int j = 0; j < n; ++j) {
        auto dj = digits(j);
        for (std::size_t k = 0; k < d.size(); ++k) dj[k] = (dj[k] + d[k]) % moduli[k];
        table[i][j] = index_of(dj);
      }
    }
    return finite_group(std::move(names), std::move(table));
  }

  // ---- introspection ------------------------------------------------------

  SemigroupKind kind() const { return kind_; }
  std::uint64_t instance() const { return id_; }
  int rank() const { return rank_; }
  const std::vector<SemigroupPtr>& factors() const { return factors_; }
  const std::vector<std::string>& factor_names() const { return names_; }
  const SemigroupPtr& base() const { return base_; }
  const std::vector<int>& unit_moduli() const { return moduli_; }
  const std::vector<std::string>& group_names() const { return names_; }
  int group_order() const { return static_cast<int>(table_.size()); }
  int group_mul_index(int a, int b) const { return table_.at(a).at(b); }
  int group_inverse_index(int a) const { return inverse_.at(a); }

  std::string describe() const {
    switch (kind_) {
      case SemigroupKind::DirectSum:
        return rank_ == 1 ? "N" : "N^" + std::to_string(rank_);
      case SemigroupKind::FreeProduct: {
        std::string s = "FreeProduct(";
        for (std::size_t i = 0; i < factors_.size(); ++i) {
          if (i) s += ",";
          s += names_[i] + ":" + factors_[i]->describe();
        }
        return s + ")";
      }
      case SemigroupKind::UnitExtension: {
        std::string s = "UnitExtension(" + base_->describe() + ",";
        for (std::size_t i = 0; i < moduli_.size(); ++i) {
          if (i) s += "x";
          s += "Z/" + std::to_string(moduli_[i]);
        }
        return s + ")";
      }
      case SemigroupKind::Absorption:
        return "AbsorptionMonoid";
      case SemigroupKind::FiniteGroup:
        return "FiniteGroup(order " + std::to_string(table_.size()) + ")";
    }
    return "?";
  }

  bool has_trivial_units() const {
    switch (kind_) {
      case SemigroupKind::UnitExtension:
        return std::all_of(moduli_.begin(), moduli_.end(), [](int m) { return m == 1; });
      case SemigroupKind::FiniteGroup:
        return table_.size() == 1;
      default:
        return true;
    }
  }

  /// Right cancellativity (left cancellation holds for every instance).
  bool is_cancellative() const {
    switch (kind_) {
      case SemigroupKind::Absorption:
        return false;
      case SemigroupKind::FreeProduct:
        return std::all_of(factors_.begin(), factors_.end(),
                           [](const SemigroupPtr& f) { return f->is_cancellative(); });
      case SemigroupKind::UnitExtension:
        return base_->is_cancellative();
      default:
        return true;
    }
  }

  // ---- elements -----------------------------------------------------------

  Element make(std::vector<std::int64_t> data) const { return Element{id_, std::move(data)}; }

  Element identity() const {
    switch (kind_) {
      case SemigroupKind::DirectSum:
        return make(std::vector<std::int64_t>(rank_, 0));
      case SemigroupKind::FreeProduct:
        return make({});
      case SemigroupKind::UnitExtension: {
        auto d = base_->identity().data;
        d.insert(d.end(), moduli_.size(), 0);
        return make(std::move(d));
      }
      case SemigroupKind::Absorption:
        return make({0, 0});
      case SemigroupKind::FiniteGroup:
        return make({0});
    }
    return make({});
  }

  bool is_identity(const Element& p) const { return p == identity(); }

  Element mul(const Element& p, const Element& q) const {
    check_owner(p);
    check_owner(q);
    switch (kind_) {
      case SemigroupKind::DirectSum: {
        auto d = p.data;
        for (int i = 0; i < rank_; ++i) d[i] += q.data[i];
        return make(std::move(d));
      }
      case SemigroupKind::FreeProduct: {
        auto a = decode_word(p);
        const auto b = decode_word(q);
        for (const auto& blk : b) {
          if (!a.empty() && a.back().factor == blk.factor) {
            const auto& f = *factors_[blk.factor];
            a.back().payload = f.mul(f.make(a.back().payload), f.make(blk.payload)).data;
          } else {
            a.push_back(blk);
          }
        }
        return encode_word(a);
      }
      case SemigroupKind::UnitExtension: {
        const auto [pb, pu] = split_unit(p);
        const auto [qb, qu] = split_unit(q);
        auto d = base_->mul(pb, qb).data;
        for (std::size_t i = 0; i < moduli_.size(); ++i) d.push_back((pu[i] + qu[i]) % moduli_[i]);
        return make(std::move(d));
      }
      case SemigroupKind::Absorption: {
        const auto k = p.data[0], m = p.data[1], l = q.data[0], n = q.data[1];
        return l > 0 ? make({k + l, n}) : make({k, m + n});
      }
      case SemigroupKind::FiniteGroup:
        return make({table_[p.data[0]][q.data[0]]});
    }
    return identity();
  }

  /// The unique r with p·r = w, if any.
  std::optional<Element> left_divide(const Element& p, const Element& w) const {
    check_owner(p);
    check_owner(w);
    switch (kind_) {
      case SemigroupKind::DirectSum: {
        auto d = w.data;
        for (int i = 0; i < rank_; ++i) {
          d[i] -= p.data[i];
          if (d[i] < 0) return std::nullopt;
        }
        return make(std::move(d));
      }
      case SemigroupKind::FreeProduct: {
        const auto a = decode_word(p);
        const auto b = decode_word(w);
        if (a.empty()) return w;
        if (a.size() > b.size()) return std::nullopt;
        for (std::size_t i = 0; i + 1 < a.size(); ++i)
          if (a[i].factor != b[i].factor || a[i].payload != b[i].payload) return std::nullopt;
        const std::size_t last = a.size() - 1;
        if (a[last].factor != b[last].factor) return std::nullopt;
        const auto& f = *factors_[a[last].factor];
        const auto rest = f.left_divide(f.make(a[last].payload), f.make(b[last].payload));
        if (!rest) return std::nullopt;
        std::vector<Block> out;
        if (!f.is_identity(*rest)) out.push_back({a[last].factor, rest->data});
        out.insert(out.end(), b.begin() + static_cast<std::ptrdiff_t>(last) + 1, b.end());
        return encode_word(out);
      }
      case SemigroupKind::UnitExtension: {
        const auto [pb, pu] = split_unit(p);
        const auto [wb, wu] = split_unit(w);
        auto r = base_->left_divide(pb, wb);
        if (!r) return std::nullopt;
        auto d = r->data;
        for (std::size_t i = 0; i < moduli_.size(); ++i)
          d.push_back(((wu[i] - pu[i]) % moduli_[i] + moduli_[i]) % moduli_[i]);
        return make(std::move(d));
      }
      case SemigroupKind::Absorption: {
        const auto k = p.data[0], m = p.data[1], k2 = w.data[0], n2 = w.data[1];
        if (k2 == k) {
          if (n2 < m) return std::nullopt;
          return make({0, n2 - m});
        }
        if (k2 > k) return make({k2 - k, n2});
        return std::nullopt;
      }
      case SemigroupKind::FiniteGroup:
        return make({table_[inverse_[p.data[0]]][w.data[0]]});
    }
    return std::nullopt;
  }

  bool leq(const Element& p, const Element& q) const { return left_divide(p, q).has_value(); }

  /// Canonical right LCM: the lexicographically least generator of pP ∩ qP.
  std::optional<Element> right_lcm(const Element& p, const Element& q) const {
    auto r = raw_lcm(p, q);
    if (!r) return std::nullopt;
    return canonical_in_unit_orbit(*r);
  }

  /// Lexicographically least element of {p·x : x ∈ P*}.
  Element canonical_in_unit_orbit(const Element& p) const {
    if (has_trivial_units()) return p;
    Element best = p;
    for (const auto& x : units().elements) best = std::min(best, mul(p, x));
    return best;
  }

  UnitGroup units() const {
    UnitGroup g;
    switch (kind_) {
      case SemigroupKind::UnitExtension: {
        const Element e = base_->identity();
        for (const auto& u : all_unit_residues()) {
          auto d = e.data;
          d.insert(d.end(), u.begin(), u.end());
          std::vector<std::int64_t> inv_d = e.data;
          for (std::size_t i = 0; i < u.size(); ++i) inv_d.push_back((moduli_[i] - u[i]) % moduli_[i]);
          g.elements.push_back(make(d));
          g.inverse.emplace(make(d), make(inv_d));
        }
        break;
      }
      case SemigroupKind::FiniteGroup:
        for (int i = 0; i < group_order(); ++i) {
          g.elements.push_back(make({i}));
          g.inverse.emplace(make({i}), make({inverse_[i]}));
        }
        break;
      default:
        g.elements.push_back(identity());
        g.inverse.emplace(identity(), identity());
    }
    return g;
  }

  bool is_unit(const Element& x) const {
    const auto u = units();
    return u.inverse.count(x) > 0;
  }

  std::optional<Element> inverse(const Element& x) const {
    const auto u = units();
    const auto it = u.inverse.find(x);
    if (it == u.inverse.end()) return std::nullopt;
    return it->second;
  }

  /// Word length over the generators; units have length zero.
  int length(const Element& p) const {
    check_owner(p);
    switch (kind_) {
      case SemigroupKind::DirectSum:
        return static_cast<int>(std::accumulate(p.data.begin(), p.data.end(), std::int64_t{0}));
      case SemigroupKind::FreeProduct: {
        int len = 0;
        for (const auto& b : decode_word(p)) len += factors_[b.factor]->length(factors_[b.factor]->make(b.payload));
        return len;
      }
      case SemigroupKind::UnitExtension:
        return base_->length(split_unit(p).first);
      case SemigroupKind::Absorption:
        return static_cast<int>(p.data[0] + p.data[1]);
      case SemigroupKind::FiniteGroup:
        return p.data[0] == 0 ? 0 : 1;
    }
    return 0;
  }

  /// All elements of word length ≤ depth, sorted by normal form.
  std::vector<Element> enumerate(int depth) const {
    std::vector<Element> out;
    switch (kind_) {
      case SemigroupKind::DirectSum: {
        std::vector<std::int64_t> v(rank_, 0);
        std::function<void(int, int)> rec = [&](int i, int budget) {
          if (i == rank_) {
            out.push_back(make(v));
            return;
          }
          for (int x = 0; x <= budget; ++x) {
            v[i] = x;
            rec(i + 1, budget - x);
          }
          v[i] = 0;
        };
        rec(0, depth);
        break;
      }
      case SemigroupKind::FreeProduct: {
        std::vector<std::vector<std::pair<Element, int>>> per_factor;
        for (const auto& f : factors_) {
          std::vector<std::pair<Element, int>> items;
          for (const auto& x : f->enumerate(depth))
            if (!f->is_identity(x)) items.emplace_back(x, f->length(x));
          per_factor.push_back(std::move(items));
        }
        std::vector<Block> word;
        std::function<void(int)> rec = [&](int budget) {
          out.push_back(encode_word(word));
          for (std::size_t fi = 0; fi < factors_.size(); ++fi) {
            if (!word.empty() && word.back().factor == static_cast<int>(fi)) continue;
            for (const auto& [x, len] : per_factor[fi]) {
              if (len > budget) continue;
              word.push_back({static_cast<int>(fi), x.data});
              rec(budget - len);
              word.pop_back();
            }
          }
        };
        rec(depth);
        break;
      }
      case SemigroupKind::UnitExtension:
        for (const auto& b : base_->enumerate(depth))
          for (const auto& u : all_unit_residues()) {
            auto d = b.data;
            d.insert(d.end(), u.begin(), u.end());
            out.push_back(make(std::move(d)));
          }
        break;
      case SemigroupKind::Absorption:
        for (int k = 0; k <= depth; ++k)
          for (int m = 0; k + m <= depth; ++m) out.push_back(make({k, m}));
        break;
      case SemigroupKind::FiniteGroup:
        for (int i = 0; i < group_order(); ++i) out.push_back(make({i}));
        break;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Generating set; the dimension function of a product system is specified on it.
  std::vector<Element> generators() const {
    std::vector<Element> g;
    switch (kind_) {
      case SemigroupKind::DirectSum:
        for (int i = 0; i < rank_; ++i) {
          std::vector<std::int64_t> d(rank_, 0);
          d[i] = 1;
          g.push_back(make(d));
        }
        break;
      case SemigroupKind::FreeProduct:
        for (std::size_t fi = 0; fi < factors_.size(); ++fi)
          for (const auto& x : factors_[fi]->generators())
            g.push_back(encode_word({{static_cast<int>(fi), x.data}}));
        break;
      case SemigroupKind::UnitExtension: {
        for (const auto& b : base_->generators()) {
          auto d = b.data;
          d.insert(d.end(), moduli_.size(), 0);
          g.push_back(make(d));
        }
        for (std::size_t i = 0; i < moduli_.size(); ++i) {
          auto d = base_->identity().data;
          for (std::size_t j = 0; j < moduli_.size(); ++j) d.push_back(i == j ? 1 % moduli_[j] : 0);
          g.push_back(make(d));
        }
        break;
      }
      case SemigroupKind::Absorption:
        g.push_back(make({0, 1}));
        g.push_back(make({1, 0}));
        break;
      case SemigroupKind::FiniteGroup:
        for (int i = 1; i < group_order(); ++i) g.push_back(make({i}));
        break;
    }
    return g;
  }

  /// A factorization of p as a product of generators (indices into generators()).
  std::vector<int> generator_word(const Element& p) const {
    check_owner(p);
    std::vector<int> w;
    switch (kind_) {
      case SemigroupKind::DirectSum:
        for (int i = 0; i < rank_; ++i) w.insert(w.end(), static_cast<std::size_t>(p.data[i]), i);
        break;
      case SemigroupKind::FreeProduct: {
        std::vector<int> offset(factors_.size() + 1, 0);
        for (std::size_t i = 0; i < factors_.size(); ++i)
          offset[i + 1] = offset[i] + static_cast<int>(factors_[i]->generators().size());
        for (const auto& b : decode_word(p))
          for (int g : factors_[b.factor]->generator_word(factors_[b.factor]->make(b.payload)))
            w.push_back(offset[b.factor] + g);
        break;
      }
      case SemigroupKind::UnitExtension: {
        const auto [pb, pu] = split_unit(p);
        w = base_->generator_word(pb);
        const int nb = static_cast<int>(base_->generators().size());
        for (std::size_t i = 0; i < pu.size(); ++i) w.insert(w.end(), static_cast<std::size_t>(pu[i]), nb + static_cast<int>(i));
        break;
      }
      case SemigroupKind::Absorption:
        w.insert(w.end(), static_cast<std::size_t>(p.data[0]), 1);
        w.insert(w.end(), static_cast<std::size_t>(p.data[1]), 0);
        break;
      case SemigroupKind::FiniteGroup:
        if (p.data[0] != 0) w.push_back(static_cast<int>(p.data[0]) - 1);
        break;
    }
    return w;
  }

  // ---- text form ------------------------------------------------------------

  std::string format(const Element& p) const {
    check_owner(p);
    switch (kind_) {
      case SemigroupKind::DirectSum:
        if (rank_ == 1) return std::to_string(p.data[0]);
        return detail::format_int_tuple(p.data);
      case SemigroupKind::FreeProduct: {
        const auto word = decode_word(p);
        if (word.empty()) return "e";
        std::string s;
        bool all_letters = true;
        for (std::size_t i = 0; i < factors_.size(); ++i)
          all_letters = all_letters && names_[i].size() == 1 &&
                        factors_[i]->kind() == SemigroupKind::DirectSum && factors_[i]->rank() == 1;
        for (const auto& b : word) {
          const auto& f = *factors_[b.factor];
          const auto& name = names_[b.factor];
          if (f.kind() == SemigroupKind::DirectSum && f.rank() == 1) {
            if (all_letters) {
              for (std::int64_t i = 0; i < b.payload[0]; ++i) s += name;
            } else {
              if (!s.empty()) s += " ";
              s += name;
              if (b.payload[0] > 1) s += "^" + std::to_string(b.payload[0]);
            }
          } else {
            if (!s.empty()) s += " ";
            std::string inner = f.format(f.make(b.payload));
            if (inner.empty() || inner.front() != '(') inner = "(" + inner + ")";
            s += name + inner;
          }
        }
        return s;
      }
      case SemigroupKind::UnitExtension: {
        const auto [b, u] = split_unit(p);
        std::string s = base_->format(b) + "|";
        for (std::size_t i = 0; i < u.size(); ++i) {
          if (i) s += ",";
          s += std::to_string(u[i]);
        }
        return s;
      }
      case SemigroupKind::Absorption:
        return detail::format_int_tuple(p.data);
      case SemigroupKind::FiniteGroup:
        return names_[p.data[0]];
    }
    return "?";
  }

  Element parse(const std::string& text) const {
    const std::string s = detail::trim(text);
    switch (kind_) {
      case SemigroupKind::DirectSum: {
        auto v = detail::parse_int_tuple(s);
        if (static_cast<int>(v.size()) != rank_)
          throw std::invalid_argument("expected " + std::to_string(rank_) + " components in '" + text + "'");
        for (auto x : v)
          if (x < 0) throw std::invalid_argument("negative component in '" + text + "'");
        return make(std::move(v));
      }
      case SemigroupKind::FreeProduct:
        return parse_word(s);
      case SemigroupKind::UnitExtension: {
        const auto bar = s.find('|');
        const Element b = base_->parse(bar == std::string::npos ? s : s.substr(0, bar));
        std::vector<std::int64_t> u(moduli_.size(), 0);
        if (bar != std::string::npos) {
          u = detail::parse_int_tuple(s.substr(bar + 1));
          if (u.size() != moduli_.size()) throw std::invalid_argument("unit arity mismatch in '" + text + "'");
        }
        auto d = b.data;
        for (std::size_t i = 0; i < u.size(); ++i) d.push_back(((u[i] % moduli_[i]) + moduli_[i]) % moduli_[i]);
        return make(std::move(d));
      }
      case SemigroupKind::Absorption: {
        auto v = detail::parse_int_tuple(s);
        if (v.size() != 2 || v[0] < 0 || v[1] < 0)
          throw std::invalid_argument("expected (k,m) with naturals, got '" + text + "'");
        return make(std::move(v));
      }
      case SemigroupKind::FiniteGroup: {
        for (int i = 0; i < group_order(); ++i)
          if (names_[i] == s) return make({i});
        if (s == "e") return identity();
        throw std::invalid_argument("unknown group element '" + text + "'");
      }
    }
    throw std::invalid_argument("cannot parse '" + text + "'");
  }

  // ---- free product helpers -------------------------------------------------

  std::vector<Block> decode_word(const Element& p) const {
    std::vector<Block> out;
    std::size_t i = 0;
    while (i < p.data.size()) {
      const int f = static_cast<int>(p.data[i]);
      const auto n = static_cast<std::size_t>(p.data[i + 1]);
      out.push_back({f, std::vector<std::int64_t>(p.data.begin() + static_cast<std::ptrdiff_t>(i + 2),
                                                   p.data.begin() + static_cast<std::ptrdiff_t>(i + 2 + n))});
      i += 2 + n;
    }
    return out;
  }

  Element encode_word(const std::vector<Block>& word) const {
    std::vector<std::int64_t> d;
    for (const auto& b : word) {
      d.push_back(b.factor);
      d.push_back(static_cast<std::int64_t>(b.payload.size()));
      d.insert(d.end(), b.payload.begin(), b.payload.end());
    }
    return make(std::move(d));
  }

  /// Factor element of a single-block word, in the factor's own instance.
  Element embed(int factor, const Element& x) const {
    factors_.at(factor)->check_owner(x);
    if (factors_[factor]->is_identity(x)) return identity();
    return encode_word({{factor, x.data}});
  }

  std::pair<Element, std::vector<std::int64_t>> split_unit(const Element& p) const {
    const auto nb = p.data.size() - moduli_.size();
    Element b = base_->make(std::vector<std::int64_t>(p.data.begin(), p.data.begin() + static_cast<std::ptrdiff_t>(nb)));
    return {b, std::vector<std::int64_t>(p.data.begin() + static_cast<std::ptrdiff_t>(nb), p.data.end())};
  }

  void check_owner(const Element& p) const {
    if (p.instance != id_)
      throw std::invalid_argument("element does not belong to semigroup " + describe());
  }

 private:
  explicit Semigroup(SemigroupKind k) : kind_(k), id_(detail::next_instance_id()) {}

  std::vector<std::vector<std::int64_t>> all_unit_residues() const {
    std::vector<std::vector<std::int64_t>> out{{}};
    for (int m : moduli_) {
      std::vector<std::vector<std::int64_t>> next;
      for (const auto& prefix : out)
        for (int r = 0; r < m; ++r) {
          auto v = prefix;
          v.push_back(r);
          next.push_back(std::move(v));
        }
      out = std::move(next);
    }
    return out;
  }

  std::optional<Element> raw_lcm(const Element& p, const Element& q) const {
    check_owner(p);
    check_owner(q);
    switch (kind_) {
      case SemigroupKind::DirectSum: {
        auto d = p.data;
        for (int i = 0; i < rank_; ++i) d[i] = std::max(d[i], q.data[i]);
        return make(std::move(d));
      }
      case SemigroupKind::FreeProduct: {
        const auto s = decode_word(p);
        const auto t = decode_word(q);
        std::size_t k = 0;
        while (k < s.size() && k < t.size() && s[k].factor == t[k].factor && s[k].payload == t[k].payload) ++k;
        if (k == s.size()) return q;
        if (k == t.size()) return p;
        if (s[k].factor != t[k].factor) return std::nullopt;
        const auto& f = *factors_[s[k].factor];
        const Element sk = f.make(s[k].payload), tk = f.make(t[k].payload);
        const bool s_last = k + 1 == s.size(), t_last = k + 1 == t.size();
        if (s_last && t_last) {
          const auto r = f.right_lcm(sk, tk);
          if (!r) return std::nullopt;
          auto word = s;
          word[k].payload = r->data;
          return encode_word(word);
        }
        if (s_last && f.leq(sk, tk)) return q;
        if (t_last && f.leq(tk, sk)) return p;
        return std::nullopt;
      }
      case SemigroupKind::UnitExtension: {
        const auto r = base_->right_lcm(split_unit(p).first, split_unit(q).first);
        if (!r) return std::nullopt;
        auto d = r->data;
        d.insert(d.end(), moduli_.size(), 0);
        return make(std::move(d));
      }
      case SemigroupKind::Absorption: {
        if (p.data[0] == q.data[0]) return make({p.data[0], std::max(p.data[1], q.data[1])});
        return p.data[0] > q.data[0] ? p : q;
      }
      case SemigroupKind::FiniteGroup:
        return identity();
    }
    return std::nullopt;
  }

  Element parse_word(const std::string& s) const {
    if (s.empty() || s == "e") return identity();
    std::vector<Block> word;
    auto push = [&](int f, const Element& x) {
      if (factors_[f]->is_identity(x)) return;
      if (!word.empty() && word.back().factor == f) {
        const auto& fac = *factors_[f];
        word.back().payload = fac.mul(fac.make(word.back().payload), x).data;
      } else {
        word.push_back({f, x.data});
      }
    };
    std::size_t i = 0;
    while (i < s.size()) {
      if (std::isspace(static_cast<unsigned char>(s[i])) || s[i] == '*' || s[i] == '.') {
        ++i;
        continue;
      }
      // Longest factor name matching at position i.
      int best = -1;
      std::size_t best_len = 0;
      for (std::size_t f = 0; f < names_.size(); ++f)
        if (s.compare(i, names_[f].size(), names_[f]) == 0 && names_[f].size() > best_len) {
          best = static_cast<int>(f);
          best_len = names_[f].size();
        }
      if (best < 0) throw std::invalid_argument("unknown letter at position " + std::to_string(i) + " in '" + s + "'");
      i += best_len;
      const auto& fac = *factors_[best];
      if (i < s.size() && s[i] == '(') {
        const auto close = s.find(')', i);
        if (close == std::string::npos) throw std::invalid_argument("unbalanced parentheses in '" + s + "'");
        push(best, fac.parse(s.substr(i, close - i + 1)));
        i = close + 1;
        continue;
      }
      std::int64_t power = 1;
      if (i < s.size() && s[i] == '^') {
        ++i;
        std::size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (j == i) throw std::invalid_argument("missing exponent in '" + s + "'");
        power = std::stoll(s.substr(i, j - i));
        i = j;
      }
      if (fac.kind() != SemigroupKind::DirectSum || fac.rank() != 1)
        throw std::invalid_argument("factor '" + names_[best] + "' needs an explicit (payload)");
      push(best, fac.make({power}));
    }
    return encode_word(word);
  }

  SemigroupKind kind_;
  std::uint64_t id_;
  int rank_ = 0;
  std::vector<SemigroupPtr> factors_;
  std::vector<std::string> names_;
  SemigroupPtr base_;
  std::vector<int> moduli_;
  std::vector<std::vector<int>> table_;
  std::vector<int> inverse_;
};

// ---- homomorphisms and controlled maps ---------------------------------------

struct SemigroupMap {
  std::string name;
  SemigroupPtr source;
  SemigroupPtr target;
  std::function<Element(const Element&)> apply;

  Element operator()(const Element& p) const { return apply(p); }
};

inline SemigroupMap identity_map(const SemigroupPtr& s) {
  return {"identity", s, s, [](const Element& p) { return p; }};
}

inline SemigroupMap constant_identity_map(const SemigroupPtr& s, const SemigroupPtr& t) {
  return {"constant", s, t, [t](const Element&) { return t->identity(); }};
}

/// Sum of per-factor contributions of a reduced word: the homomorphism from a
/// free product of N^{k_i} factors onto N^{Σk_i} that is the identity on each factor.
inline Element controlled_abelianization(const Semigroup& fp, const Semigroup& target, const Element& w) {
  if (fp.kind() != SemigroupKind::FreeProduct)
    throw std::invalid_argument("abelianization needs a free product source");
  std::vector<int> offset{0};
  for (const auto& f : fp.factors()) {
    if (f->kind() != SemigroupKind::DirectSum)
      throw std::invalid_argument("abelianization needs direct-sum factors");
    offset.push_back(offset.back() + f->rank());
  }
  if (target.kind() != SemigroupKind::DirectSum || target.rank() != offset.back())
    throw std::invalid_argument("abelianization target has wrong rank");
  std::vector<std::int64_t> d(static_cast<std::size_t>(offset.back()), 0);
  for (const auto& b : fp.decode_word(w))
    for (std::size_t i = 0; i < b.payload.size(); ++i) d[static_cast<std::size_t>(offset[b.factor]) + i] += b.payload[i];
  return target.make(std::move(d));
}

inline SemigroupMap abelianization_map(const SemigroupPtr& fp) {
  int total = 0;
  for (const auto& f : fp->factors()) {
    if (f->kind() != SemigroupKind::DirectSum)
      throw std::invalid_argument("abelianization needs direct-sum factors");
    total += f->rank();
  }
  auto target = Semigroup::direct_sum(total);
  return {"abelianization", fp, target,
          [fp, target](const Element& w) { return controlled_abelianization(*fp, *target, w); }};
}

/// The x ∈ P* with p = q·x, if one exists.
inline std::optional<Element> find_unit_between(const Semigroup& s, const Element& p, const Element& q) {
  for (const auto& x : s.units().elements)
    if (s.mul(q, x) == p) return x;
  return std::nullopt;
}

struct CheckReport {
  bool passed = true;
  std::size_t checked = 0;
  std::vector<std::string> failures;

  void fail(std::string msg, std::size_t cap = 20) {
    passed = false;
    if (failures.size() < cap) failures.push_back(std::move(msg));
  }
};

/// Verifies the controlled-map conditions on every pair of length ≤ depth.
inline CheckReport check_controlled_map(const SemigroupMap& theta, int depth) {
  CheckReport rep;
  const auto& P = *theta.source;
  const auto& Q = *theta.target;
  const auto elems = P.enumerate(depth);
  if (theta(P.identity()) != Q.identity()) rep.fail("theta(e) != e");
  for (const auto& s : elems)
    for (const auto& t : elems) {
      ++rep.checked;
      if (theta(P.mul(s, t)) != Q.mul(theta(s), theta(t)))
        rep.fail("not a homomorphism at (" + P.format(s) + ", " + P.format(t) + ")");
      const auto r = P.right_lcm(s, t);
      if (!r) continue;
      const auto r2 = Q.right_lcm(theta(s), theta(t));
      if (!r2 || !find_unit_between(Q, theta(*r), *r2))
        rep.fail("lcm not preserved at (" + P.format(s) + ", " + P.format(t) + ")");
      if (theta(s) == theta(t) && s != t)
        rep.fail("theta identifies comparable " + P.format(s) + " and " + P.format(t));
    }
  std::set<Element> image, target_units;
  for (const auto& x : P.units().elements) image.insert(theta(x));
  for (const auto& x : Q.units().elements) target_units.insert(x);
  if (image != target_units) rep.fail("theta(P*) != P'*");
  return rep;
}

/// Brute-force verification of associativity, left cancellation and right-LCM
/// correctness over all elements of length ≤ depth. Principal ideals are
/// computed by multiplication only, independently of left_divide/right_lcm.
inline CheckReport check_semigroup_laws(const Semigroup& S, int depth) {
  CheckReport rep;
  const auto elems = S.enumerate(depth);
  const std::set<Element> universe(elems.begin(), elems.end());
  for (const auto& a : elems)
    for (const auto& b : elems) {
      const Element ab = S.mul(a, b);
      for (const auto& c : elems) {
        ++rep.checked;
        if (S.mul(ab, c) != S.mul(a, S.mul(b, c)))
          rep.fail("associativity fails at " + S.format(a) + "," + S.format(b) + "," + S.format(c));
      }
    }
  std::map<Element, std::set<Element>> ideal;
  for (const auto& p : elems) {
    std::map<Element, Element> seen;
    auto& I = ideal[p];
    for (const auto& s : elems) {
      const Element w = S.mul(p, s);
      auto [it, fresh] = seen.emplace(w, s);
      if (!fresh && it->second != s)
        rep.fail("left cancellation fails: " + S.format(p) + "·" + S.format(s) + " = " + S.format(p) + "·" +
                 S.format(it->second));
      if (universe.count(w)) I.insert(w);
    }
  }
  auto ideal_of = [&](const Element& r) {
    if (auto it = ideal.find(r); it != ideal.end()) return it->second;
    std::set<Element> I;
    for (const auto& s : elems)
      if (auto w = S.mul(r, s); universe.count(w)) I.insert(w);
    return I;
  };
  for (const auto& p : elems)
    for (const auto& q : elems) {
      std::set<Element> common;
      std::set_intersection(ideal[p].begin(), ideal[p].end(), ideal[q].begin(), ideal[q].end(),
                            std::inserter(common, common.begin()));
      const auto r = S.right_lcm(p, q);
      if (!r) {
        if (!common.empty())
          rep.fail("lcm(" + S.format(p) + "," + S.format(q) + ") absent but common multiple " +
                   S.format(*common.begin()) + " exists");
        continue;
      }
      if (ideal_of(*r) != common)
        rep.fail("lcm(" + S.format(p) + "," + S.format(q) + ") = " + S.format(*r) + " does not generate pP∩qP");
    }
  return rep;
}

}  // namespace ntforge
