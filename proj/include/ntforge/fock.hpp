#pragma once

// Truncated Fock module and the Fock representation as block operators.
//
// The Hilbert space is ⊕_{s ∈ S, t ∈ T, c ∈ C_K} K(s,t)_c with entries
// vectorized row-major and the Hilbert-Schmidt inner product. Every operator
// built here acts by left multiplication, so on the (t,c) component it is
// M_{s',s} ⊗ I_{dim(t)[c]}. Blocks are therefore stored once, without t, as
// left multipliers M_{s',s} = m ⊗ I_k with the amplification k kept
// symbolic.

#include <Eigen/Sparse>

#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "ntforge/linalg.hpp"
#include "ntforge/precategory.hpp"
#include "ntforge/wick.hpp"

namespace ntforge {

/// m ⊗ I_amp.
struct AmpBlock {
  Matrix m;
  Index amp = 1;

  Index rows() const { return m.rows() * amp; }
  Index cols() const { return m.cols() * amp; }
  Matrix expand() const { return kron_identity(m, amp); }
  double frobenius_sq() const { return m.squaredNorm() * static_cast<double>(amp); }
};

/// Rewrites b as (b.m ⊗ I_{b.amp/g}) ⊗ I_g.
inline Matrix reamplify(const AmpBlock& b, Index g) {
  if (b.amp % g != 0) throw std::logic_error("amplification does not divide");
  return kron_identity(b.m, b.amp / g);
}

inline AmpBlock add_blocks(const AmpBlock& a, const AmpBlock& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::logic_error("block shape mismatch");
  if (a.amp == b.amp) return {a.m + b.m, a.amp};
  const Index g = std::gcd(a.amp, b.amp);
  return {reamplify(a, g) + reamplify(b, g), g};
}

inline AmpBlock mul_blocks(const AmpBlock& a, const AmpBlock& b) {
  if (a.cols() != b.rows()) throw std::logic_error("block shape mismatch");
  const Index g = std::gcd(a.amp, b.amp);
  return {reamplify(a, g) * reamplify(b, g), g};
}

struct Truncation {
  PrecategoryPtr L;
  ColorIdeal K;
  int depth = 0;
  std::vector<Element> objects;  // S: all elements of length ≤ depth
  std::vector<Element> sources;  // T ⊆ S
  std::size_t dense_cap = 4096;

  static Truncation make(PrecategoryPtr L, ColorIdeal K, int depth, std::optional<std::vector<Element>> sources = {}) {
    Truncation tr;
    tr.L = std::move(L);
    tr.K = std::move(K);
    tr.depth = depth;
    tr.objects = tr.L->semigroup().enumerate(depth);
    tr.sources = sources ? *sources : tr.objects;
    for (const auto& t : tr.sources)
      if (!tr.contains(t)) throw std::invalid_argument("source object outside the truncation");
    return tr;
  }

  const Semigroup& semigroup() const { return L->semigroup(); }
  bool contains(const Element& s) const { return std::binary_search(objects.begin(), objects.end(), s); }

  /// Whether K(s,t) has a nonzero color-c block.
  bool exists(const Element& s, const Element& t, int c) const {
    if (!K.contains(c)) return false;
    const auto [r, q] = L->block_shape(s, t, c);
    return r * q > 0;
  }

  /// Objects s with len(s) + degree ≤ depth.
  std::vector<Element> interior(int degree) const {
    std::vector<Element> out;
    for (const auto& s : objects)
      if (semigroup().length(s) + degree <= depth) out.push_back(s);
    return out;
  }

  /// Every left divisor of every object is an object (within the given
  /// enumeration bound for the divisor search).
  bool closed_under_left_divisors(int search_depth) const {
    const auto cand = semigroup().enumerate(search_depth);
    for (const auto& s : objects)
      for (const auto& u : cand)
        if (semigroup().leq(u, s) && !contains(u)) return false;
    return true;
  }
};

using BlockKey = std::tuple<Element, Element, int>;  // (range s', source s, color)

class FockOperator {
 public:
  FockOperator() = default;
  explicit FockOperator(const Truncation* tr) : tr_(tr) {}

  const Truncation& truncation() const { return *tr_; }
  const std::map<BlockKey, AmpBlock>& blocks() const { return blocks_; }

  /// Restricts the source index t (default: the truncation's sources).
  std::optional<std::vector<Element>> t_filter;

  void accumulate(const Element& range, const Element& source, int c, const AmpBlock& b) {
    BlockKey k{range, source, c};
    auto it = blocks_.find(k);
    if (it == blocks_.end())
      blocks_.emplace(std::move(k), b);
    else
      it->second = add_blocks(it->second, b);
  }

  FockOperator adjoint() const {
    FockOperator out(tr_);
    out.t_filter = t_filter;
    for (const auto& [k, b] : blocks_)
      out.blocks_.emplace(BlockKey{std::get<1>(k), std::get<0>(k), std::get<2>(k)}, AmpBlock{b.m.adjoint(), b.amp});
    return out;
  }

  FockOperator operator*(const FockOperator& o) const {
    FockOperator out(tr_);
    std::map<std::pair<Element, int>, std::vector<std::pair<Element, const AmpBlock*>>> by_range;
    for (const auto& [k, b] : o.blocks_) by_range[{std::get<0>(k), std::get<2>(k)}].emplace_back(std::get<1>(k), &b);
    for (const auto& [k, a] : blocks_) {
      auto it = by_range.find({std::get<1>(k), std::get<2>(k)});
      if (it == by_range.end()) continue;
      for (const auto& [src, b] : it->second) out.accumulate(std::get<0>(k), src, std::get<2>(k), mul_blocks(a, *b));
    }
    return out;
  }

  FockOperator operator+(const FockOperator& o) const {
    FockOperator out = *this;
    for (const auto& [k, b] : o.blocks_) out.accumulate(std::get<0>(k), std::get<1>(k), std::get<2>(k), b);
    return out;
  }

  FockOperator scaled(cplx z) const {
    FockOperator out = *this;
    for (auto& [k, b] : out.blocks_) b.m *= z;
    return out;
  }

  FockOperator operator-(const FockOperator& o) const { return *this + o.scaled(-1.0); }

  /// Keeps the blocks whose source object satisfies `keep`.
  template <class Pred>
  FockOperator restrict_source_objects(Pred keep) const {
    FockOperator out(tr_);
    out.t_filter = t_filter;
    for (const auto& [k, b] : blocks_)
      if (keep(std::get<1>(k))) out.blocks_.emplace(k, b);
    return out;
  }

  const std::vector<Element>& active_sources() const { return t_filter ? *t_filter : tr_->sources; }

  /// Objects s present in the (t,c) component, in order.
  std::vector<Element> component_objects(const Element& t, int c) const {
    std::vector<Element> out;
    for (const auto& s : tr_->objects)
      if (tr_->exists(s, t, c)) out.push_back(s);
    return out;
  }

  /// The left-multiplier matrix of the (t,c) component, without the
  /// ampliation by I_{dim t}, as a sparse matrix over the listed objects.
  Eigen::SparseMatrix<cplx> component_sparse(const std::vector<Element>& objs, int c) const {
    std::map<Element, Index> offset;
    Index n = 0;
    for (const auto& s : objs) {
      offset[s] = n;
      n += static_cast<Index>(tr_->L->dim(s)[c]);
    }
    std::vector<Eigen::Triplet<cplx>> trip;
    for (const auto& [k, b] : blocks_) {
      if (std::get<2>(k) != c) continue;
      const auto ri = offset.find(std::get<0>(k)), ci = offset.find(std::get<1>(k));
      if (ri == offset.end() || ci == offset.end()) continue;
      const Matrix e = b.expand();
      for (Index i = 0; i < e.rows(); ++i)
        for (Index j = 0; j < e.cols(); ++j)
          if (e(i, j) != cplx(0.0)) trip.emplace_back(ri->second + i, ci->second + j, e(i, j));
    }
    Eigen::SparseMatrix<cplx> m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
  }

  Matrix component_dense(const std::vector<Element>& objs, int c) const { return Matrix(component_sparse(objs, c)); }

  /// Operator norm: the maximum over (t,c) components of the norm of the
  /// reduced matrix. Components with the same object pattern share a value.
  double norm() const {
    double best = 0.0;
    std::set<std::pair<std::vector<Element>, int>> seen;
    for (const auto& t : active_sources())
      for (int c = 0; c < tr_->L->colors(); ++c) {
        if (!tr_->K.contains(c) || tr_->L->dim(t)[c] == 0) continue;
        auto objs = component_objects(t, c);
        if (!seen.emplace(objs, c).second) continue;
        const auto sp = component_sparse(objs, c);
        const double v = static_cast<std::size_t>(sp.rows()) <= tr_->dense_cap
                             ? spectral_norm(Matrix(sp))
                             : power_iteration_norm(sp, 1e-8);
        best = std::max(best, v);
      }
    return best;
  }

  /// Frobenius norm of the reduced (t,c) component, maximized over components;
  /// an upper bound on norm().
  double frobenius_bound() const {
    std::map<int, double> per_color;
    for (const auto& [k, b] : blocks_) per_color[std::get<2>(k)] += b.frobenius_sq();
    double best = 0.0;
    for (const auto& [c, v] : per_color) best = std::max(best, std::sqrt(v));
    return best;
  }

  struct LayoutEntry {
    Element s, t;
    int c;
    Index offset, size;
  };

  /// Position of every (s,t,c) block in to_dense(): t, then c, then s, then
  /// row-major entries of K(s,t)_c.
  std::vector<LayoutEntry> layout() const {
    std::vector<LayoutEntry> out;
    Index n = 0;
    for (const auto& t : active_sources())
      for (int c = 0; c < tr_->L->colors(); ++c)
        for (const auto& s : component_objects(t, c)) {
          const auto sz = static_cast<Index>(tr_->L->dim(s)[c] * tr_->L->dim(t)[c]);
          out.push_back({s, t, c, n, sz});
          n += sz;
        }
    return out;
  }

  /// Full dense matrix over all (s,t,c) blocks, t in the active sources, in
  /// the order given by layout().
  Matrix to_dense() const {
    std::vector<std::tuple<Element, int, Index, Index>> comps;  // t, c, offset, size
    Index n = 0;
    for (const auto& t : active_sources())
      for (int c = 0; c < tr_->L->colors(); ++c) {
        Index sz = 0;
        for (const auto& s : component_objects(t, c)) sz += static_cast<Index>(tr_->L->dim(s)[c] * tr_->L->dim(t)[c]);
        if (sz == 0) continue;
        comps.emplace_back(t, c, n, sz);
        n += sz;
      }
    Matrix out = Matrix::Zero(n, n);
    for (const auto& [t, c, off, sz] : comps) {
      const auto objs = component_objects(t, c);
      const Matrix red = component_dense(objs, c);
      out.block(off, off, sz, sz) = kron_identity(red, static_cast<Index>(tr_->L->dim(t)[c]));
    }
    return out;
  }

  Index hilbert_dim() const {
    Index n = 0;
    for (const auto& t : active_sources())
      for (int c = 0; c < tr_->L->colors(); ++c)
        for (const auto& s : component_objects(t, c)) n += static_cast<Index>(tr_->L->dim(s)[c] * tr_->L->dim(t)[c]);
    return n;
  }

 private:
  const Truncation* tr_ = nullptr;
  std::map<BlockKey, AmpBlock> blocks_;
};

/// Left multiplier of a ⊗ 1_v on the color-c block, or nothing if it is zero.
inline std::optional<AmpBlock> tensored_multiplier(const Precategory& L, const Arrow& a, const Element& v, int c) {
  if (L.kind() == BackendKind::ZeroTensor) {
    if (!L.semigroup().is_identity(v)) return std::nullopt;
    return AmpBlock{a.blocks[c], 1};
  }
  return AmpBlock{a.blocks[c], static_cast<Index>(L.dim(v)[c])};
}

/// The Fock representation: an arrow a ∈ L(p,q) sends the block at source
/// s ∈ qP to the block at p·(q^{-1}s) by left multiplication with
/// a ⊗ 1_{q^{-1}s}. Arrows outside K are allowed (this is the extension to L).
inline FockOperator lift_arrows(const std::vector<const Arrow*>& arrows, const Truncation& tr) {
  FockOperator op(&tr);
  const auto& L = *tr.L;
  const auto& S = L.semigroup();
  for (const Arrow* a : arrows)
    for (const auto& s : tr.objects) {
      const auto v = S.left_divide(a->source, s);
      if (!v) continue;
      const Element target = S.mul(a->range, *v);
      if (!tr.contains(target)) continue;
      for (int c = 0; c < L.colors(); ++c) {
        if (!tr.K.contains(c)) continue;
        if (L.dim(s)[c] == 0 || L.dim(target)[c] == 0) continue;
        if (auto b = tensored_multiplier(L, *a, *v, c)) op.accumulate(target, s, c, *b);
      }
    }
  return op;
}

inline FockOperator lift_arrow(const Arrow& a, const Truncation& tr) { return lift_arrows({&a}, tr); }

inline FockOperator lift(const NTElement& x, const Truncation& tr) {
  std::vector<const Arrow*> arrows;
  for (const auto& [k, a] : x.terms()) arrows.push_back(&a);
  return lift_arrows(arrows, tr);
}

struct FockNorm {
  double norm = 0.0;
  bool exact = false;
  int depth = 0;
};

/// Norm of the truncated Fock image. Exact for diagonal elements whose
/// segment lcms lie in the truncation; otherwise a lower bound.
inline FockNorm fock_norm(const NTElement& x, const Truncation& tr) {
  FockNorm out;
  out.norm = lift(x, tr).norm();
  out.depth = tr.depth;
  bool diagonal = true;
  for (const auto& [k, a] : x.terms()) diagonal = diagonal && k.first == k.second;
  out.exact = diagonal;
  return out;
}

/// Keeps exactly the contributions at sources w ∈ pP ∩ qP with p^{-1}w = q^{-1}w.
inline FockOperator transcendental_expectation(const NTElement& x, const Truncation& tr) {
  FockOperator op(&tr);
  const auto& L = *tr.L;
  const auto& S = L.semigroup();
  for (const auto& [k, a] : x.terms())
    for (const auto& w : tr.objects) {
      const auto u = S.left_divide(k.first, w), v = S.left_divide(k.second, w);
      if (!u || !v || *u != *v) continue;
      for (int c = 0; c < L.colors(); ++c) {
        if (!tr.K.contains(c) || L.dim(w)[c] == 0) continue;
        if (auto b = tensored_multiplier(L, a, *v, c)) op.accumulate(w, w, c, *b);
      }
    }
  return op;
}

/// Σ_w Q_w T Q_w: the block-diagonal part of an operator.
inline FockOperator block_diagonal_compression(const FockOperator& T) {
  FockOperator out(&T.truncation());
  out.t_filter = T.t_filter;
  for (const auto& [k, b] : T.blocks())
    if (std::get<0>(k) == std::get<1>(k)) out.accumulate(std::get<0>(k), std::get<1>(k), std::get<2>(k), b);
  return out;
}

/// Projection onto the blocks with source object in pP.
inline FockOperator projection_QT(const Element& p, const Truncation& tr) {
  FockOperator op(&tr);
  const auto& L = *tr.L;
  for (const auto& s : tr.objects) {
    if (!tr.semigroup().leq(p, s)) continue;
    for (int c = 0; c < L.colors(); ++c) {
      if (!tr.K.contains(c)) continue;
      const auto d = static_cast<Index>(L.dim(s)[c]);
      if (d == 0) continue;
      op.accumulate(s, s, c, AmpBlock{Matrix::Identity(1, 1), d});
    }
  }
  return op;
}

/// Projection onto the single object block w.
inline FockOperator projection_Qw(const Element& w, const Truncation& tr) {
  FockOperator op(&tr);
  for (int c = 0; c < tr.L->colors(); ++c) {
    const auto d = static_cast<Index>(tr.L->dim(w)[c]);
    if (tr.K.contains(c) && d > 0) op.accumulate(w, w, c, AmpBlock{Matrix::Identity(1, 1), d});
  }
  return op;
}

/// The identity operator on the truncated module.
inline FockOperator identity_operator(const Truncation& tr) { return projection_QT(tr.semigroup().identity(), tr); }

struct SourceRestricted {
  FockOperator op;
  double restricted_norm = 0.0;
  double full_norm = 0.0;
  bool hypothesis_ok = true;
  std::string note;
};

/// Restriction of the Fock image to the summand with source t. When K(t,t)
/// fails to be essential in the algebra of its colors the isometry claim is
/// not expected; this is reported in `hypothesis_ok`.
inline SourceRestricted fock_source_restricted(const NTElement& x, const Element& t, const Truncation& tr) {
  SourceRestricted out;
  out.op = lift(x, tr);
  out.full_norm = out.op.norm();
  out.op.t_filter = std::vector<Element>{t};
  out.restricted_norm = out.op.norm();
  const auto& L = *tr.L;
  for (int c = 0; c < L.colors(); ++c)
    if (!tr.K.contains(c) && L.dim(t)[c] > 0) {
      out.hypothesis_ok = false;
      out.note = "K(t,t) misses a color with positive dimension";
    }
  if (L.kind() == BackendKind::ZeroTensor) {
    out.hypothesis_ok = false;
    out.note = "zero-tensor backend: the source summands are not faithful";
  }
  return out;
}

/// Upper bound on the norm of (A − B) restricted to source objects of the
/// given interior degree.
inline double interior_difference(const FockOperator& A, const FockOperator& B, int degree) {
  const auto& tr = A.truncation();
  const auto inner = tr.interior(degree);
  const std::set<Element> keep(inner.begin(), inner.end());
  return (A - B).restrict_source_objects([&](const Element& s) { return keep.count(s) > 0; }).frobenius_bound();
}

}  // namespace ntforge
