#pragma once

// Finite-dimensional right-tensor C*-precategories over a semigroup.
//
// Colored: L(p,q) = ⊕_c M_{dim(p)[c] × dim(q)[c]}, the dimension function is
// multiplicative and a ⊗ 1_r = a ⊗ I_{dim(r)} per color.
// ZeroTensor (P = N only): L(n,m) = 0 for n ≠ m, L(n,n) = M_{d_n}, and
// a ⊗ 1_r = 0 for r ≠ e.

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ntforge/lcm.hpp"
#include "ntforge/linalg.hpp"
#include "ntforge/semigroup.hpp"

namespace ntforge {

enum class BackendKind { Colored, ZeroTensor };

struct Arrow {
  Element range;
  Element source;
  std::vector<Matrix> blocks;  // one per color

  double norm() const {
    double n = 0.0;
    for (const auto& b : blocks) n = std::max(n, spectral_norm(b));
    return n;
  }
  bool is_zero(double tol = kZeroTol) const {
    for (const auto& b : blocks)
      if (b.size() && b.cwiseAbs().maxCoeff() > tol) return false;
    return true;
  }
};

struct ColorIdeal {
  std::set<int> colors;
  bool contains(int c) const { return colors.count(c) > 0; }
};

using Dims = std::vector<std::int64_t>;

class Precategory;
using PrecategoryPtr = std::shared_ptr<const Precategory>;

class Precategory {
 public:
  /// `generator_dims[g][c]` is the color-c dimension of generator g of S.
  static PrecategoryPtr colored(SemigroupPtr S, std::vector<Dims> generator_dims, bool allow_zero = false) {
    const auto gens = S->generators();
    if (generator_dims.size() != gens.size())
      throw std::invalid_argument("expected dims for " + std::to_string(gens.size()) + " generators, got " +
                                  std::to_string(generator_dims.size()));
    if (generator_dims.empty()) throw std::invalid_argument("semigroup has no generators");
    const std::size_t m = generator_dims.front().size();
    if (m == 0) throw std::invalid_argument("at least one color is required");
    for (const auto& d : generator_dims) {
      if (d.size() != m) throw std::invalid_argument("every generator needs one dim per color");
      for (auto x : d) {
        if (x < 0) throw std::invalid_argument("negative dimension");
        if (x == 0 && !allow_zero) throw std::invalid_argument("zero dimension without the degeneracy flag");
      }
    }
    auto p = std::shared_ptr<Precategory>(new Precategory(BackendKind::Colored, std::move(S)));
    p->gen_dims_ = std::move(generator_dims);
    p->colors_ = static_cast<int>(m);
    return p;
  }

  /// Per-object dims d_0, d_1, ...; the last entry repeats.
  static PrecategoryPtr zero_tensor(SemigroupPtr S, Dims object_dims) {
    if (S->kind() != SemigroupKind::DirectSum || S->rank() != 1)
      throw std::invalid_argument("the zero-tensor backend is defined over N");
    if (object_dims.empty()) throw std::invalid_argument("object dims required");
    for (auto d : object_dims)
      if (d < 1) throw std::invalid_argument("zero-tensor object dims must be positive");
    auto p = std::shared_ptr<Precategory>(new Precategory(BackendKind::ZeroTensor, std::move(S)));
    p->object_dims_ = std::move(object_dims);
    p->colors_ = 1;
    return p;
  }

  BackendKind kind() const { return kind_; }
  const Semigroup& semigroup() const { return *S_; }
  const SemigroupPtr& semigroup_ptr() const { return S_; }
  int colors() const { return colors_; }
  const std::vector<Dims>& generator_dims() const { return gen_dims_; }
  ColorIdeal full_ideal() const {
    ColorIdeal K;
    for (int c = 0; c < colors_; ++c) K.colors.insert(c);
    return K;
  }

  /// Per-color fiber dimension of the object p.
  Dims dim(const Element& p) const {
    if (kind_ == BackendKind::ZeroTensor) {
      const auto n = static_cast<std::size_t>(p.data.at(0));
      return {object_dims_[std::min(n, object_dims_.size() - 1)]};
    }
    Dims d(static_cast<std::size_t>(colors_), 1);
    for (int g : S_->generator_word(p))
      for (int c = 0; c < colors_; ++c) d[c] *= gen_dims_[g][c];
    return d;
  }

  std::pair<Index, Index> block_shape(const Element& range, const Element& source, int c) const {
    if (kind_ == BackendKind::ZeroTensor && range != source) return {0, 0};
    return {static_cast<Index>(dim(range)[c]), static_cast<Index>(dim(source)[c])};
  }

  /// Linear dimension of K(range, source).
  Index space_dim(const Element& range, const Element& source, const ColorIdeal& K) const {
    Index n = 0;
    for (int c = 0; c < colors_; ++c) {
      if (!K.contains(c)) continue;
      const auto [r, s] = block_shape(range, source, c);
      n += r * s;
    }
    return n;
  }

  // ---- arrows ---------------------------------------------------------------

  Arrow zero(const Element& range, const Element& source) const {
    Arrow a{range, source, {}};
    for (int c = 0; c < colors_; ++c) {
      const auto [r, s] = block_shape(range, source, c);
      a.blocks.push_back(Matrix::Zero(r, s));
    }
    return a;
  }

  /// Unit of L(p,p) restricted to the colors of K.
  Arrow unit(const Element& p, const ColorIdeal& K) const {
    Arrow a = zero(p, p);
    for (int c = 0; c < colors_; ++c)
      if (K.contains(c)) a.blocks[c].setIdentity();
    return a;
  }
  Arrow unit(const Element& p) const { return unit(p, full_ideal()); }

  Arrow make(const Element& range, const Element& source, std::vector<Matrix> blocks) const {
    S_->check_owner(range);
    S_->check_owner(source);
    if (static_cast<int>(blocks.size()) != colors_)
      throw std::invalid_argument("expected " + std::to_string(colors_) + " color blocks");
    for (int c = 0; c < colors_; ++c) {
      const auto [r, s] = block_shape(range, source, c);
      if (blocks[c].rows() != r || blocks[c].cols() != s)
        throw std::invalid_argument("color " + std::to_string(c) + " block has shape " +
                                    std::to_string(blocks[c].rows()) + "x" + std::to_string(blocks[c].cols()) +
                                    ", expected " + std::to_string(r) + "x" + std::to_string(s));
    }
    return Arrow{range, source, std::move(blocks)};
  }

  /// Single-color arrow; other colors are zero.
  Arrow make_color(const Element& range, const Element& source, int c, const Matrix& m) const {
    Arrow a = zero(range, source);
    if (a.blocks.at(c).rows() != m.rows() || a.blocks[c].cols() != m.cols())
      throw std::invalid_argument("block shape mismatch");
    a.blocks[c] = m;
    return a;
  }

  template <class Rng>
  Arrow random(const Element& range, const Element& source, const ColorIdeal& K, Rng& rng) const {
    Arrow a = zero(range, source);
    for (int c = 0; c < colors_; ++c)
      if (K.contains(c)) a.blocks[c] = random_matrix(a.blocks[c].rows(), a.blocks[c].cols(), rng);
    return a;
  }

  /// Matrix-unit basis of K(range, source).
  std::vector<Arrow> basis(const Element& range, const Element& source, const ColorIdeal& K) const {
    std::vector<Arrow> out;
    for (int c = 0; c < colors_; ++c) {
      if (!K.contains(c)) continue;
      const auto [r, s] = block_shape(range, source, c);
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < s; ++j) {
          Arrow a = zero(range, source);
          a.blocks[c](i, j) = 1.0;
          out.push_back(std::move(a));
        }
    }
    return out;
  }

  Arrow compose(const Arrow& a, const Arrow& b) const {
    if (a.source != b.range)
      throw std::invalid_argument("compose: source " + S_->format(a.source) + " != range " + S_->format(b.range));
    Arrow out{a.range, b.source, {}};
    for (int c = 0; c < colors_; ++c) {
      const auto [r, s] = block_shape(a.range, b.source, c);
      if (a.blocks[c].cols() == 0 || b.blocks[c].rows() == 0 || r * s == 0)
        out.blocks.push_back(Matrix::Zero(r, s));
      else
        out.blocks.push_back(a.blocks[c] * b.blocks[c]);
    }
    return out;
  }

  Arrow adjoint(const Arrow& a) const {
    Arrow out{a.source, a.range, {}};
    for (const auto& b : a.blocks) out.blocks.push_back(b.adjoint());
    return out;
  }

  Arrow add(const Arrow& a, const Arrow& b) const {
    if (a.range != b.range || a.source != b.source) throw std::invalid_argument("add: object mismatch");
    Arrow out = a;
    for (int c = 0; c < colors_; ++c) out.blocks[c] += b.blocks[c];
    return out;
  }

  Arrow scale(const Arrow& a, cplx z) const {
    Arrow out = a;
    for (auto& b : out.blocks) b *= z;
    return out;
  }

  /// a ⊗ 1_r ∈ L(pr, qr).
  Arrow rtensor(const Arrow& a, const Element& r) const {
    const Element pr = S_->mul(a.range, r), qr = S_->mul(a.source, r);
    if (kind_ == BackendKind::ZeroTensor) {
      if (S_->is_identity(r)) return a;
      return zero(pr, qr);
    }
    const Dims dr = dim(r);
    Arrow out{pr, qr, {}};
    for (int c = 0; c < colors_; ++c) out.blocks.push_back(kron_identity(a.blocks[c], static_cast<Index>(dr[c])));
    return out;
  }

  bool ideal_membership(const Arrow& a, const ColorIdeal& K, double tol = kZeroTol) const {
    for (int c = 0; c < colors_; ++c)
      if (!K.contains(c) && a.blocks[c].size() && a.blocks[c].cwiseAbs().maxCoeff() > tol) return false;
    return true;
  }

  /// Zeroes the blocks outside K (multiplication by the unit of K).
  Arrow restrict_to(const Arrow& a, const ColorIdeal& K) const {
    Arrow out = a;
    for (int c = 0; c < colors_; ++c)
      if (!K.contains(c)) out.blocks[c].setZero();
    return out;
  }

  /// Flattened coefficient vector (colors in order, row-major within a block).
  Vector flatten(const Arrow& a) const {
    Index n = 0;
    for (const auto& b : a.blocks) n += b.size();
    Vector v(n);
    Index k = 0;
    for (const auto& b : a.blocks)
      for (Index i = 0; i < b.rows(); ++i)
        for (Index j = 0; j < b.cols(); ++j) v(k++) = b(i, j);
    return v;
  }

  /// Checks dim(pq) = dim(p)·dim(q) on all pairs of length ≤ depth. Failures
  /// name the offending pair.
  CheckReport validate(int depth) const {
    CheckReport rep;
    if (kind_ == BackendKind::ZeroTensor) return rep;
    const auto elems = S_->enumerate(depth);
    for (const auto& p : elems)
      for (const auto& q : elems) {
        ++rep.checked;
        const Dims a = dim(p), b = dim(q), ab = dim(S_->mul(p, q));
        for (int c = 0; c < colors_; ++c)
          if (ab[c] != a[c] * b[c]) {
            rep.fail("dim is not multiplicative at (" + S_->format(p) + ", " + S_->format(q) + ") in color " +
                     std::to_string(c) + ": " + std::to_string(ab[c]) + " != " + std::to_string(a[c]) + "*" +
                     std::to_string(b[c]));
            break;
          }
      }
    return rep;
  }

 private:
  Precategory(BackendKind k, SemigroupPtr S) : kind_(k), S_(std::move(S)) {}

  BackendKind kind_;
  SemigroupPtr S_;
  int colors_ = 1;
  std::vector<Dims> gen_dims_;
  Dims object_dims_;
};

// ---- structural checks -------------------------------------------------------

/// (a ⊗ 1_{p^{-1}r})(b ⊗ 1_{q^{-1}r}) ∈ K(r,r) for sampled a ∈ K(p,p),
/// b ∈ K(q,q), and K ⊗ 1 ⊆ K.
inline CheckReport check_well_aligned(const Precategory& L, const ColorIdeal& K, int depth,
                                      std::uint64_t seed = 1) {
  CheckReport rep;
  const auto& S = L.semigroup();
  std::mt19937_64 rng(seed);
  const auto elems = S.enumerate(depth);
  for (const auto& p : elems)
    for (const auto& q : elems) {
      const auto r = S.right_lcm(p, q);
      if (!r) continue;
      ++rep.checked;
      const Arrow a = L.random(p, p, K, rng), b = L.random(q, q, K, rng);
      const Arrow prod = L.compose(L.rtensor(a, *S.left_divide(p, *r)), L.rtensor(b, *S.left_divide(q, *r)));
      if (!L.ideal_membership(prod, K))
        rep.fail("aligned product leaves K at (" + S.format(p) + ", " + S.format(q) + ")");
      for (const auto& s : elems)
        if (!L.ideal_membership(L.rtensor(a, s), K))
          rep.fail("K(" + S.format(p) + "," + S.format(p) + ") tensored by " + S.format(s) + " leaves K");
    }
  return rep;
}

/// (K(p,p) ⊗ 1_r) K(pr,pr) = K(pr,pr) for non-units p and all r. Since
/// span{A_i B : B ∈ M_n} is the set of matrices with range inside
/// Σ range(A_i), it suffices that the images A_i = a_i ⊗ 1_r of a spanning
/// set have full joint row rank in every color of K.
inline CheckReport check_nondegenerate(const Precategory& L, const ColorIdeal& K, int depth) {
  CheckReport rep;
  const auto& S = L.semigroup();
  const auto elems = S.enumerate(depth);
  for (const auto& p : elems) {
    if (S.is_unit(p)) continue;  // vacuous for groups
    const auto basis = L.basis(p, p, K);
    for (const auto& r : elems) {
      const Element pr = S.mul(p, r);
      ++rep.checked;
      for (int c = 0; c < L.colors(); ++c) {
        if (!K.contains(c)) continue;
        const Index rows = L.block_shape(pr, pr, c).first;
        if (rows == 0) continue;
        std::vector<Matrix> imgs;
        Index cols = 0;
        for (const auto& a : basis) {
          if (a.blocks[static_cast<std::size_t>(c)].size() == 0 || a.blocks[static_cast<std::size_t>(c)].isZero(0.0))
            continue;
          imgs.push_back(L.rtensor(a, r).blocks[static_cast<std::size_t>(c)]);
          cols += imgs.back().cols();
        }
        Matrix M = Matrix::Zero(rows, std::max<Index>(cols, 1));
        Index k = 0;
        for (const auto& m : imgs) {
          M.middleCols(k, m.cols()) = m;
          k += m.cols();
        }
        const Index rank = numerical_rank(M);
        if (rank != rows) {
          rep.fail("(K(" + S.format(p) + ")x1_" + S.format(r) + ")K(" + S.format(pr) + ") misses part of color " +
                   std::to_string(c) + ": rank " + std::to_string(rank) + " < " + std::to_string(rows));
          break;
        }
      }
    }
  }
  return rep;
}

struct EssentialReport {
  bool essential = true;
  std::vector<std::pair<Element, bool>> per_object;
};

/// K(p,p) is essential in L(p,p) iff no color outside K has positive dimension.
inline EssentialReport check_essential(const Precategory& L, const ColorIdeal& K, int depth) {
  EssentialReport rep;
  for (const auto& p : L.semigroup().enumerate(depth)) {
    bool ok = true;
    for (int c = 0; c < L.colors(); ++c) {
      const auto [r, s] = L.block_shape(p, p, c);
      if (!K.contains(c) && r * s > 0) ok = false;
    }
    rep.per_object.emplace_back(p, ok);
    rep.essential = rep.essential && ok;
  }
  return rep;
}

}  // namespace ntforge
