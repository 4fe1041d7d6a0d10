#pragma once

// Fell bundles over finite groups and their right-tensor precategories.
//
// Fiber elements are lists of matrices (one per block). An action of G on
// A = ⊕_i M_{n_i} is a right action: α_{gh} = α_h ∘ α_g, matching
// a ⊗ 1_r := α_r(a) and ((a ⊗ 1_r) ⊗ 1_s) = a ⊗ 1_{rs}.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ntforge/analysis.hpp"
#include "ntforge/linalg.hpp"
#include "ntforge/precategory.hpp"
#include "ntforge/semigroup.hpp"

namespace ntforge {

using FiberElem = std::vector<Matrix>;
using Shape = std::vector<std::pair<Index, Index>>;

inline Shape shape_of(const FiberElem& x) {
  Shape s;
  for (const auto& m : x) s.emplace_back(m.rows(), m.cols());
  return s;
}

inline FiberElem zero_fiber(const Shape& s) {
  FiberElem x;
  for (const auto& [r, c] : s) x.push_back(Matrix::Zero(r, c));
  return x;
}

template <class Rng>
FiberElem random_fiber(const Shape& s, Rng& rng) {
  FiberElem x;
  for (const auto& [r, c] : s) x.push_back(random_matrix(r, c, rng));
  return x;
}

inline std::vector<FiberElem> fiber_basis(const Shape& s) {
  std::vector<FiberElem> out;
  for (std::size_t b = 0; b < s.size(); ++b)
    for (Index i = 0; i < s[b].first; ++i)
      for (Index j = 0; j < s[b].second; ++j) {
        FiberElem x = zero_fiber(s);
        x[b](i, j) = 1.0;
        out.push_back(std::move(x));
      }
  return out;
}

inline Index fiber_size(const Shape& s) {
  Index n = 0;
  for (const auto& [r, c] : s) n += r * c;
  return n;
}

inline Vector flatten_fiber(const FiberElem& x) {
  Index n = 0;
  for (const auto& m : x) n += m.size();
  Vector v(n);
  Index k = 0;
  for (const auto& m : x) {
    v.segment(k, m.size()) = vec(m);
    k += m.size();
  }
  return v;
}

inline FiberElem fiber_mul(const FiberElem& a, const FiberElem& b) {
  if (a.size() != b.size()) throw std::invalid_argument("fiber block count mismatch");
  FiberElem out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a[i] * b[i]);
  return out;
}

inline FiberElem fiber_adjoint(const FiberElem& a) {
  FiberElem out;
  for (const auto& m : a) out.push_back(m.adjoint());
  return out;
}

inline FiberElem fiber_add(const FiberElem& a, const FiberElem& b) {
  FiberElem out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += b[i];
  return out;
}

inline double fiber_max_abs_diff(const FiberElem& a, const FiberElem& b) {
  if (shape_of(a) != shape_of(b)) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].size()) d = std::max(d, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return d;
}

inline bool fiber_equal(const FiberElem& a, const FiberElem& b) {
  if (shape_of(a) != shape_of(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

/// C*-norm of an element of A = ⊕ M_{n_i}.
inline double algebra_norm(const FiberElem& a) {
  double n = 0.0;
  for (const auto& m : a) n = std::max(n, spectral_norm(m));
  return n;
}

inline Matrix block_diag(const FiberElem& a) {
  Index r = 0, c = 0;
  for (const auto& m : a) {
    r += m.rows();
    c += m.cols();
  }
  Matrix out = Matrix::Zero(r, c);
  Index i = 0, j = 0;
  for (const auto& m : a) {
    out.block(i, j, m.rows(), m.cols()) = m;
    i += m.rows();
    j += m.cols();
  }
  return out;
}

inline FiberElem split_blocks(const Matrix& m, const std::vector<Index>& dims) {
  FiberElem out;
  Index k = 0;
  for (Index d : dims) {
    out.push_back(m.block(k, k, d, d));
    k += d;
  }
  return out;
}

inline Matrix block_mask(const std::vector<Index>& dims) {
  std::vector<Matrix> ones;
  for (Index d : dims) ones.push_back(Matrix::Ones(d, d));
  return block_diag(ones);
}

// ---- automorphisms ------------------------------------------------------------

/// α(a)_{perm[i]} = U_i a_i U_i^*.
struct BlockAutomorphism {
  std::vector<int> perm;
  std::vector<Matrix> unitaries;

  static BlockAutomorphism identity(const std::vector<Index>& dims) {
    BlockAutomorphism a;
    for (std::size_t i = 0; i < dims.size(); ++i) {
      a.perm.push_back(static_cast<int>(i));
      a.unitaries.push_back(Matrix::Identity(dims[i], dims[i]));
    }
    return a;
  }

  FiberElem apply(const FiberElem& x) const {
    FiberElem out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      out[static_cast<std::size_t>(perm[i])] = unitaries[i] * x[i] * unitaries[i].adjoint();
    return out;
  }

  /// Throws unless this is a *-automorphism of ⊕ M_{dims[i]}.
  void validate(const std::vector<Index>& dims) const {
    if (perm.size() != dims.size() || unitaries.size() != dims.size())
      throw std::invalid_argument("automorphism needs one permutation entry and one unitary per block");
    std::vector<int> seen(dims.size(), 0);
    for (std::size_t i = 0; i < dims.size(); ++i) {
      const int j = perm[i];
      if (j < 0 || j >= static_cast<int>(dims.size()) || seen[static_cast<std::size_t>(j)]++)
        throw std::invalid_argument("block map is not a permutation");
      if (dims[static_cast<std::size_t>(j)] != dims[i])
        throw std::invalid_argument("permutation must preserve block sizes");
      const Matrix& U = unitaries[i];
      if (U.rows() != dims[i] || U.cols() != dims[i] ||
          (U.adjoint() * U - Matrix::Identity(dims[i], dims[i])).cwiseAbs().maxCoeff() > kNormTol)
        throw std::invalid_argument("block " + std::to_string(i) + " conjugation is not unitary");
    }
  }
};

/// Largest entrywise difference of two automorphisms on the matrix units.
inline double automorphism_distance(const std::vector<Index>& dims, const std::function<FiberElem(const FiberElem&)>& f,
                                    const std::function<FiberElem(const FiberElem&)>& g) {
  Shape s;
  for (Index d : dims) s.emplace_back(d, d);
  double worst = 0.0;
  for (const auto& e : fiber_basis(s)) worst = std::max(worst, fiber_max_abs_diff(f(e), g(e)));
  return worst;
}

// ---- bundles --------------------------------------------------------------------

/// A Fell bundle over a finite group with finite-dimensional fibers.
struct BundleFiberFamily {
  SemigroupPtr group;
  std::vector<Shape> shapes;  // per group index
  std::function<FiberElem(int, int, const FiberElem&, const FiberElem&)> mul;  // B_g × B_h → B_gh
  std::function<FiberElem(int, const FiberElem&)> star;                       // B_g → B_{g^{-1}}

  int order() const { return group->group_order(); }
  int gmul(int g, int h) const { return group->group_mul_index(g, h); }
  int ginv(int g) const { return group->group_inverse_index(g); }
  FiberElem zero(int g) const { return zero_fiber(shapes.at(static_cast<std::size_t>(g))); }
  template <class Rng>
  FiberElem random(int g, Rng& rng) const {
    return random_fiber(shapes.at(static_cast<std::size_t>(g)), rng);
  }
};

inline void require_group(const Semigroup& S) {
  if (S.kind() != SemigroupKind::FiniteGroup) throw std::invalid_argument("a finite group instance is required");
}

/// Associativity, involutivity, anti-multiplicativity of the star and the
/// C*-identity on B_e, on random samples.
inline CheckReport check_bundle_laws(const BundleFiberFamily& B, int samples, std::uint64_t seed, double tol = kNormTol) {
  CheckReport rep;
  std::mt19937_64 rng(seed);
  const int n = B.order();
  for (int g = 0; g < n; ++g)
    for (int h = 0; h < n; ++h)
      for (int k = 0; k < n; ++k)
        for (int s = 0; s < samples; ++s) {
          ++rep.checked;
          const FiberElem x = B.random(g, rng), y = B.random(h, rng), z = B.random(k, rng);
          const auto lhs = B.mul(B.gmul(g, h), k, B.mul(g, h, x, y), z);
          const auto rhs = B.mul(g, B.gmul(h, k), x, B.mul(h, k, y, z));
          if (fiber_max_abs_diff(lhs, rhs) > tol * (1.0 + algebra_norm(lhs)))
            rep.fail("associativity fails on fibers (" + std::to_string(g) + "," + std::to_string(h) + "," +
                     std::to_string(k) + ")");
          if (fiber_max_abs_diff(B.star(B.ginv(g), B.star(g, x)), x) > 1e-12)
            rep.fail("star is not involutive on fiber " + std::to_string(g));
          const auto st = B.star(B.gmul(g, h), B.mul(g, h, x, y));
          const auto ts = B.mul(B.ginv(h), B.ginv(g), B.star(h, y), B.star(g, x));
          if (fiber_max_abs_diff(st, ts) > tol * (1.0 + algebra_norm(st)))
            rep.fail("star is not anti-multiplicative on fibers (" + std::to_string(g) + "," + std::to_string(h) + ")");
        }
  for (int s = 0; s < samples; ++s) {
    const FiberElem x = B.random(0, rng);
    const double lhs = algebra_norm(B.mul(0, 0, B.star(0, x), x));
    const double nx = algebra_norm(x);
    if (std::abs(lhs - nx * nx) > tol * (1.0 + nx * nx)) rep.fail("C*-identity fails on B_e");
  }
  return rep;
}

// ---- group precategories ----------------------------------------------------------

/// A right-tensor C*-precategory over a finite group in one of three forms:
///   crossed: L(g,h) = A, a ⊗ 1_r = α_r(a), composition is the product of A;
///   bundle:  L(g,h) = B_{gh^{-1}}, tensoring is the identity, composition is
///            the bundle product;
///   colored: a colored product-system backend over the group.
class GroupPrecategory {
 public:
  enum class Mode { Crossed, Bundle, Colored };

  static GroupPrecategory crossed(SemigroupPtr G, std::vector<Index> dims, std::vector<BlockAutomorphism> alpha) {
    require_group(*G);
    if (static_cast<int>(alpha.size()) != G->group_order())
      throw std::invalid_argument("one automorphism per group element is required");
    for (const auto& a : alpha) a.validate(dims);
    GroupPrecategory L(Mode::Crossed, G);
    L.dims_ = std::move(dims);
    L.alpha_ = std::move(alpha);
    const int n = G->group_order();
    auto ap = [&L](int g) { return [&L, g](const FiberElem& x) { return L.alpha_[static_cast<std::size_t>(g)].apply(x); }; };
    if (automorphism_distance(L.dims_, ap(0), [](const FiberElem& x) { return x; }) > kNormTol)
      throw std::invalid_argument("action is not a homomorphism: the identity does not act trivially");
    for (int g = 0; g < n; ++g)
      for (int h = 0; h < n; ++h) {
        const int gh = G->group_mul_index(g, h);
        auto composite = [&L, g, h](const FiberElem& x) {
          return L.alpha_[static_cast<std::size_t>(h)].apply(L.alpha_[static_cast<std::size_t>(g)].apply(x));
        };
        if (automorphism_distance(L.dims_, ap(gh), composite) > kNormTol)
          throw std::invalid_argument("action is not a homomorphism at (" + G->group_names()[static_cast<std::size_t>(g)] +
                                      ", " + G->group_names()[static_cast<std::size_t>(h)] + ")");
      }
    return L;
  }

  static GroupPrecategory from_bundle(BundleFiberFamily B) {
    GroupPrecategory L(Mode::Bundle, B.group);
    L.bundle_ = std::make_shared<BundleFiberFamily>(std::move(B));
    return L;
  }

  static GroupPrecategory from_colored(PrecategoryPtr P) {
    require_group(P->semigroup());
    if (P->kind() != BackendKind::Colored) throw std::invalid_argument("colored backend required");
    GroupPrecategory L(Mode::Colored, P->semigroup_ptr());
    L.colored_ = std::move(P);
    return L;
  }

  Mode mode() const { return mode_; }
  const SemigroupPtr& group() const { return G_; }
  int order() const { return G_->group_order(); }
  const std::vector<Index>& algebra_dims() const { return dims_; }
  const std::vector<BlockAutomorphism>& action() const { return alpha_; }

  Shape shape(int g, int h) const {
    switch (mode_) {
      case Mode::Crossed: {
        Shape s;
        for (Index d : dims_) s.emplace_back(d, d);
        return s;
      }
      case Mode::Bundle:
        return bundle_->shapes.at(static_cast<std::size_t>(G_->group_mul_index(g, G_->group_inverse_index(h))));
      case Mode::Colored: {
        Shape s;
        for (int c = 0; c < colored_->colors(); ++c) s.push_back(colored_->block_shape(el(g), el(h), c));
        return s;
      }
    }
    return {};
  }

  /// a ∈ L(g,h), b ∈ L(h,k) ↦ ab ∈ L(g,k).
  FiberElem compose(int g, int h, int k, const FiberElem& a, const FiberElem& b) const {
    switch (mode_) {
      case Mode::Crossed:
        return fiber_mul(a, b);
      case Mode::Bundle: {
        const int x = G_->group_mul_index(g, G_->group_inverse_index(h));
        const int y = G_->group_mul_index(h, G_->group_inverse_index(k));
        return bundle_->mul(x, y, a, b);
      }
      case Mode::Colored:
        return colored_->compose(arrow(g, h, a), arrow(h, k, b)).blocks;
    }
    return {};
  }

  /// a ∈ L(g,h) ↦ a* ∈ L(h,g).
  FiberElem adjoint(int g, int h, const FiberElem& a) const {
    switch (mode_) {
      case Mode::Crossed:
        return fiber_adjoint(a);
      case Mode::Bundle:
        return bundle_->star(G_->group_mul_index(g, G_->group_inverse_index(h)), a);
      case Mode::Colored:
        return colored_->adjoint(arrow(g, h, a)).blocks;
    }
    return {};
  }

  /// a ∈ L(g,h) ↦ a ⊗ 1_r ∈ L(gr,hr).
  FiberElem rtensor(int g, int h, const FiberElem& a, int r) const {
    switch (mode_) {
      case Mode::Crossed:
        return alpha_[static_cast<std::size_t>(r)].apply(a);
      case Mode::Bundle:
        return a;
      case Mode::Colored:
        return colored_->rtensor(arrow(g, h, a), el(r)).blocks;
    }
    return {};
  }

 private:
  GroupPrecategory(Mode m, SemigroupPtr G) : mode_(m), G_(std::move(G)) {}

  Element el(int g) const { return G_->make({g}); }
  Arrow arrow(int g, int h, const FiberElem& a) const { return colored_->make(el(g), el(h), a); }

  Mode mode_;
  SemigroupPtr G_;
  std::vector<Index> dims_;
  std::vector<BlockAutomorphism> alpha_;
  std::shared_ptr<const BundleFiberFamily> bundle_;
  PrecategoryPtr colored_;
};

/// B_g := L(g,e), b_g ∘ b_h := (b_g ⊗ 1_h) b_h, b_g^⋆ := b_g^* ⊗ 1_{g^{-1}}.
inline BundleFiberFamily bundle_from_precategory(const GroupPrecategory& L) {
  BundleFiberFamily B;
  B.group = L.group();
  for (int g = 0; g < L.order(); ++g) B.shapes.push_back(L.shape(g, 0));
  const auto G = L.group();
  B.mul = [L, G](int g, int h, const FiberElem& x, const FiberElem& y) {
    const int gh = G->group_mul_index(g, h);
    return L.compose(gh, h, 0, L.rtensor(g, 0, x, h), y);
  };
  B.star = [L, G](int g, const FiberElem& x) { return L.rtensor(0, g, L.adjoint(g, 0, x), G->group_inverse_index(g)); };
  return B;
}

inline GroupPrecategory precategory_from_bundle(const BundleFiberFamily& B) { return GroupPrecategory::from_bundle(B); }

/// The semidirect-product bundle of a right action: B_g = A,
/// a ∘ b = α_h(a) b for a ∈ B_g, b ∈ B_h, and a^⋆ = α_{g^{-1}}(a^*).
inline BundleFiberFamily semidirect_bundle(const SemigroupPtr& G, const std::vector<Index>& dims,
                                           const std::vector<BlockAutomorphism>& alpha) {
  return bundle_from_precategory(GroupPrecategory::crossed(G, dims, alpha));
}

/// Trivial action on A.
inline std::vector<BlockAutomorphism> trivial_action(const SemigroupPtr& G, const std::vector<Index>& dims) {
  return std::vector<BlockAutomorphism>(static_cast<std::size_t>(G->group_order()), BlockAutomorphism::identity(dims));
}

struct RoundTripReport {
  bool bit_exact = true;
  std::size_t checked = 0;
  std::vector<std::string> failures;
};

/// bundle_from_precategory(precategory_from_bundle(B)) agrees with B on
/// shapes and, bit for bit, on sampled products and stars.
inline RoundTripReport check_round_trip(const BundleFiberFamily& B, int samples, std::uint64_t seed) {
  RoundTripReport rep;
  const auto B2 = bundle_from_precategory(precategory_from_bundle(B));
  std::mt19937_64 rng(seed);
  for (int g = 0; g < B.order(); ++g) {
    if (B2.shapes[static_cast<std::size_t>(g)] != B.shapes[static_cast<std::size_t>(g)]) {
      rep.bit_exact = false;
      rep.failures.push_back("fiber shape differs at " + std::to_string(g));
    }
    for (int h = 0; h < B.order(); ++h)
      for (int s = 0; s < samples; ++s) {
        ++rep.checked;
        const auto x = B.random(g, rng), y = B.random(h, rng);
        if (!fiber_equal(B.mul(g, h, x, y), B2.mul(g, h, x, y))) {
          rep.bit_exact = false;
          rep.failures.push_back("product differs at (" + std::to_string(g) + "," + std::to_string(h) + ")");
        }
        if (!fiber_equal(B.star(g, x), B2.star(g, x))) {
          rep.bit_exact = false;
          rep.failures.push_back("star differs at " + std::to_string(g));
        }
      }
  }
  return rep;
}

/// Largest defect of the maps φ_{g,h}(b) = b ⊗ 1_h from L_{B^L}(g,h) to
/// L(g,h) in intertwining composition, adjoints and tensoring.
inline double isomorphism_defect(const GroupPrecategory& L, int samples, std::uint64_t seed) {
  const auto B = bundle_from_precategory(L);
  const auto LB = precategory_from_bundle(B);
  const auto& G = *L.group();
  const int n = L.order();
  auto phi = [&](int g, int h, const FiberElem& b) { return L.rtensor(G.group_mul_index(g, G.group_inverse_index(h)), 0, b, h); };
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int g = 0; g < n; ++g)
    for (int h = 0; h < n; ++h)
      for (int k = 0; k < n; ++k)
        for (int s = 0; s < samples; ++s) {
          const auto b = random_fiber(LB.shape(g, h), rng);
          const auto c = random_fiber(LB.shape(h, k), rng);
          worst = std::max(worst, fiber_max_abs_diff(phi(g, k, LB.compose(g, h, k, b, c)),
                                                     L.compose(g, h, k, phi(g, h, b), phi(h, k, c))));
          worst = std::max(worst, fiber_max_abs_diff(phi(h, g, LB.adjoint(g, h, b)), L.adjoint(g, h, phi(g, h, b))));
          const int gk = G.group_mul_index(g, k), hk = G.group_mul_index(h, k);
          worst = std::max(worst, fiber_max_abs_diff(phi(gk, hk, LB.rtensor(g, h, b, k)), L.rtensor(g, h, phi(g, h, b), k)));
        }
  return worst;
}

// ---- representations -------------------------------------------------------------

/// Left convolution on ⊕_g B_g with the Hilbert-Schmidt inner product.
inline GradedRep regular_representation(const BundleFiberFamily& B) {
  GradedRep rep;
  rep.name = "regular";
  rep.order = B.order();
  std::vector<Index> offset;
  Index n = 0;
  for (const auto& s : B.shapes) {
    offset.push_back(n);
    n += fiber_size(s);
  }
  rep.dim = n;
  rep.eval = [B, offset, n](int g, const FiberElem& b) {
    Matrix M = Matrix::Zero(n, n);
    for (int h = 0; h < B.order(); ++h) {
      const auto basis = fiber_basis(B.shapes[static_cast<std::size_t>(h)]);
      const int gh = B.gmul(g, h);
      for (std::size_t k = 0; k < basis.size(); ++k) {
        const Vector col = flatten_fiber(B.mul(g, h, b, basis[k]));
        M.block(offset[static_cast<std::size_t>(gh)], offset[static_cast<std::size_t>(h)] + static_cast<Index>(k), col.size(), 1) = col;
      }
    }
    return M;
  };
  return rep;
}

/// Ψ(Σ b_g) = Σ b_g on a bundle whose fibers are all C (every element of
/// the group goes to 1).
inline GradedRep collapsing_representation(const BundleFiberFamily& B) {
  for (const auto& s : B.shapes)
    if (s.size() != 1 || s[0] != std::pair<Index, Index>{1, 1})
      throw std::invalid_argument("collapsing representation needs scalar fibers");
  GradedRep rep;
  rep.name = "collapse";
  rep.order = B.order();
  rep.dim = 1;
  rep.eval = [](int, const FiberElem& b) { return b[0]; };
  return rep;
}

inline Matrix represent_sum(const GradedRep& psi, const std::vector<FiberElem>& parts) {
  Matrix sum = Matrix::Zero(psi.dim, psi.dim);
  for (int g = 0; g < psi.order; ++g) sum += psi.eval(g, parts[static_cast<std::size_t>(g)]);
  return sum;
}

inline GradedReport check_graded_bundle(const GradedRep& psi, const std::vector<std::vector<FiberElem>>& samples,
                                        double tol = 1e-9) {
  return check_graded(psi, samples, algebra_norm, tol);
}

/// Compression of Ψ(x) to the B_e summand of the regular representation.
inline Matrix e_compression(const BundleFiberFamily& B, const Matrix& M) {
  const Index n = fiber_size(B.shapes[0]);
  return M.topLeftCorner(n, n);
}

}  // namespace ntforge
