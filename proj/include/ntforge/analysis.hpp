#pragma once

// Verifiers for concrete (matrix-valued) representations: projection
// families, Toeplitz covariance, conditions (C) and (C′), aperiodicity search
// and topological grading.

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntforge/fock.hpp"
#include "ntforge/linalg.hpp"
#include "ntforge/precategory.hpp"

namespace ntforge {

/// A representation Φ of K on C^dim. `eval` is linear and accepts arrows of
/// K(p,q) for p,q among `objects`; representations produced by
/// extend_representation accept all of L.
struct ConcreteRep {
  std::string name;
  PrecategoryPtr L;
  ColorIdeal K;
  Index dim = 0;
  std::vector<Element> objects;
  std::function<Matrix(const Arrow&)> eval;
  /// Projection onto vectors far enough from the truncation edge that
  /// products of total key length ≤ degree are exact. Identity if unset.
  std::function<Matrix(int degree)> interior;

  Matrix interior_projection(int degree) const {
    if (interior) return interior(degree);
    return Matrix::Identity(dim, dim);
  }
};

/// The truncated Fock representation, Φ(a) = lift(a) as a dense matrix.
/// The truncation must outlive the representation.
inline ConcreteRep fock_representation(const std::shared_ptr<const Truncation>& tr) {
  ConcreteRep rep;
  rep.name = "fock";
  rep.L = tr->L;
  rep.K = tr->K;
  rep.objects = tr->objects;
  const FockOperator probe(tr.get());
  rep.dim = probe.hilbert_dim();
  rep.eval = [tr](const Arrow& a) { return lift_arrow(a, *tr).to_dense(); };
  rep.interior = [tr](int degree) {
    const FockOperator probe(tr.get());
    Matrix P = Matrix::Zero(probe.hilbert_dim(), probe.hilbert_dim());
    for (const auto& e : probe.layout())
      if (tr->semigroup().length(e.s) + degree <= tr->depth)
        P.block(e.offset, e.offset, e.size, e.size).setIdentity();
    return P;
  };
  return rep;
}

/// Φ(a) = a on a one-color backend with all fibers one-dimensional; over N
/// this sends the generating isometry to the unitary 1.
inline ConcreteRep scalar_character_rep(const PrecategoryPtr& L, int depth) {
  if (L->kind() != BackendKind::Colored || L->colors() != 1)
    throw std::invalid_argument("scalar character needs a one-color backend");
  for (const auto& d : L->generator_dims())
    if (d[0] != 1) throw std::invalid_argument("scalar character needs one-dimensional fibers");
  ConcreteRep rep;
  rep.name = "scalar-character";
  rep.L = L;
  rep.K = L->full_ideal();
  rep.dim = 1;
  rep.objects = L->semigroup().enumerate(depth);
  rep.eval = [](const Arrow& a) { return a.blocks[0]; };
  return rep;
}

// ---- extension ----------------------------------------------------------------

/// Φ̄(a) := Φ(a·1_K) for a ∈ L(σ,ρ), where 1_K is the unit of K(ρ,ρ).
inline ConcreteRep extend_representation(const ConcreteRep& phi, const ColorIdeal& K) {
  ConcreteRep out = phi;
  out.name = phi.name + "-extended";
  auto L = phi.L;
  auto inner = phi.eval;
  out.eval = [L, K, inner](const Arrow& a) { return inner(L->compose(a, L->unit(a.source, K))); };
  return out;
}

/// Linear map K(p,q) → B(H) as a matrix whose columns are vectorized images
/// of the matrix-unit basis.
inline Matrix linearize(const ConcreteRep& phi, const Element& p, const Element& q, const ColorIdeal& K) {
  const auto basis = phi.L->basis(p, q, K);
  Matrix M(phi.dim * phi.dim, static_cast<Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) M.col(static_cast<Index>(i)) = vec(phi.eval(basis[i]));
  return M;
}

/// Smallest singular value of Φ restricted to K(p,q); > kRankTol means injective.
inline double fiber_injectivity(const ConcreteRep& phi, const Element& p, const Element& q, const ColorIdeal& K) {
  return smallest_singular_value(linearize(phi, p, q, K));
}

struct KernelCheck {
  bool consistent = true;
  double image_norm = 0.0;      // ‖Φ̄(a)‖
  double annihilated_norm = 0.0;  // max over basis b of K(ρ,ρ) of ‖Φ(ab)‖
};

/// Φ̄(a) = 0 iff aK(ρ,ρ) ⊆ ker Φ, evaluated on one arrow.
inline KernelCheck check_extension_kernel(const ConcreteRep& phi, const ColorIdeal& K, const Arrow& a,
                                          double tol = kRankTol) {
  KernelCheck out;
  const auto ext = extend_representation(phi, K);
  out.image_norm = spectral_norm(ext.eval(a));
  for (const auto& b : phi.L->basis(a.source, a.source, K))
    out.annihilated_norm = std::max(out.annihilated_norm, spectral_norm(phi.eval(phi.L->compose(a, b))));
  out.consistent = (out.image_norm <= tol) == (out.annihilated_norm <= tol);
  return out;
}

// ---- projections ----------------------------------------------------------------

inline Matrix hstack(const std::vector<Matrix>& parts, Index rows) {
  Index n = 0;
  for (const auto& m : parts) n += m.cols();
  Matrix out(rows, n);
  Index k = 0;
  for (const auto& m : parts) {
    out.middleCols(k, m.cols()) = m;
    k += m.cols();
  }
  return out;
}

struct ProjectionPair {
  Matrix Q;        // Q^Φ_p
  Matrix Q_ideal;  // Q^Φ_⟨p⟩
};

/// G_w = Σ_b Φ(b)Φ(b)^* over the matrix units b of K(w,w). Its range is
/// Φ(K(w,w))H, and ranges add under sums of such matrices.
inline Matrix image_gram(const ConcreteRep& phi, const Element& w) {
  Matrix G = Matrix::Zero(phi.dim, phi.dim);
  for (const auto& b : phi.L->basis(w, w, phi.K)) {
    const Matrix m = phi.eval(b);
    G.noalias() += m * m.adjoint();
  }
  return G;
}

/// Range projection of a positive semidefinite G; eigenvalues count when
/// they exceed kRankTol relative to max(1, ‖G‖).
inline Matrix gram_range_projection(const Matrix& G) {
  const Index n = G.rows();
  if (n == 0) return G;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  const auto& ev = es.eigenvalues();
  const double cut = kRankTol * std::max(1.0, ev(n - 1));
  Matrix P = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    if (ev(i) > cut) P.noalias() += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  return P;
}

using GramCache = std::map<Element, Matrix>;

/// Q^Φ_p projects onto Φ(K(p,p))H, or onto the essential space of the whole
/// image when p is a unit; Q^Φ_⟨p⟩ projects onto the joint span of
/// Φ(K(w,w))H over the objects w ∈ pP.
inline ProjectionPair compute_projections(const ConcreteRep& phi, const Element& p, GramCache* cache = nullptr) {
  const auto& S = phi.L->semigroup();
  GramCache local;
  GramCache& grams = cache ? *cache : local;
  auto gram = [&](const Element& w) -> const Matrix& {
    auto it = grams.find(w);
    if (it == grams.end()) it = grams.emplace(w, image_gram(phi, w)).first;
    return it->second;
  };
  ProjectionPair out;
  Matrix all = Matrix::Zero(phi.dim, phi.dim), above = Matrix::Zero(phi.dim, phi.dim);
  for (const auto& w : phi.objects) {
    const bool in_ideal = S.leq(p, w);
    if (!in_ideal && !S.is_unit(p)) continue;
    const Matrix& g = gram(w);
    if (in_ideal) above += g;
    if (S.is_unit(p)) all += g;
  }
  out.Q_ideal = gram_range_projection(above);
  out.Q = gram_range_projection(S.is_unit(p) ? all : gram(p));
  return out;
}

/// Range projection of the sum of the ranges of the given projections.
inline Matrix join_projections(const std::vector<Matrix>& Ps, Index n) {
  if (Ps.empty()) return Matrix::Zero(n, n);
  return range_projection(hstack(Ps, n), n);
}

struct ProjectionEquivalences {
  bool equal_projections = true;  // Q_p = Q_⟨p⟩ for all p
  bool semilattice = true;        // p ↦ Q_p is a semilattice homomorphism
  bool preorder = true;           // pP ⊆ qP ⟹ Q_p ≤ Q_q
  bool special_relation = true;   // Φ̄(a)Q_s = Φ̄(a ⊗ 1_{q^{-1}r}) or 0
  double max_distance = 0.0;      // max ‖Q_p − Q_⟨p⟩‖
  std::vector<std::string> witnesses;
};

/// Φ̄(a)Q_s − Φ̄(a ⊗ 1_{q^{-1}r}), or Φ̄(a)Q_s when sP ∩ qP = ∅.
inline Matrix special_relation_residual(const ConcreteRep& phi_bar, const Arrow& a, const Matrix& image,
                                        const Matrix& Q_s, const Element& s) {
  const auto& S = phi_bar.L->semigroup();
  Matrix lhs = image * Q_s;
  const auto r = S.right_lcm(s, a.source);
  if (!r) return lhs;
  return lhs - phi_bar.eval(phi_bar.L->rtensor(a, *S.left_divide(a.source, *r)));
}

/// Norm of the residual above.
inline double special_relation_defect(const ConcreteRep& phi_bar, const Arrow& a, const Matrix& Q_s,
                                      const Element& s) {
  return spectral_norm(special_relation_residual(phi_bar, a, phi_bar.eval(a), Q_s, s));
}

/// Evaluates the four equivalent conditions on projection families for
/// objects of length ≤ depth. `phi_bar` is the extension of Φ to L.
inline ProjectionEquivalences check_projection_equivalences(const ConcreteRep& phi, int depth, double tol = 1e-9) {
  ProjectionEquivalences out;
  const auto& S = phi.L->semigroup();
  const auto ps = S.enumerate(depth);
  std::map<Element, ProjectionPair> proj;
  GramCache grams;
  for (const auto& p : ps) proj.emplace(p, compute_projections(phi, p, &grams));
  for (const auto& p : ps) {
    const double d = spectral_norm(proj[p].Q - proj[p].Q_ideal);
    out.max_distance = std::max(out.max_distance, d);
    if (d > tol) {
      out.equal_projections = false;
      out.witnesses.push_back("Q_" + S.format(p) + " != Q_<" + S.format(p) + ">");
    }
  }
  for (const auto& p : ps)
    for (const auto& q : ps) {
      const Matrix prod = proj[p].Q * proj[q].Q;
      const auto r = S.right_lcm(p, q);
      Matrix expect = Matrix::Zero(phi.dim, phi.dim);
      if (r) {
        auto it = proj.find(*r);
        expect = it != proj.end() ? it->second.Q : compute_projections(phi, *r, &grams).Q;
      }
      if (spectral_norm(prod - expect) > tol) {
        out.semilattice = false;
        out.witnesses.push_back("Q_" + S.format(p) + " Q_" + S.format(q) + " is not Q_lcm");
      }
      if (S.leq(q, p) && spectral_norm(proj[p].Q * proj[q].Q - proj[p].Q) > tol) {
        out.preorder = false;
        out.witnesses.push_back("Q_" + S.format(p) + " is not below Q_" + S.format(q));
      }
    }
  const auto phi_bar = extend_representation(phi, phi.K);
  const auto K_all = phi.L->full_ideal();
  for (const auto& p : ps)
    for (const auto& q : ps)
      for (const auto& a : phi.L->basis(p, q, K_all)) {
        const Matrix image = phi_bar.eval(a);
        for (const auto& s : ps) {
          if (!out.special_relation) return out;
          const Matrix res = special_relation_residual(phi_bar, a, image, proj[s].Q, s);
          if (res.norm() > tol && spectral_norm(res) > tol) {  // Frobenius bounds the operator norm
            out.special_relation = false;
            out.witnesses.push_back("special relation fails for a in L(" + S.format(p) + "," + S.format(q) +
                                    ") and s = " + S.format(s));
          }
        }
      }
  return out;
}

// ---- covariance checks ------------------------------------------------------------

inline void require_not_dominating(const Semigroup& S, const Element& p, const std::vector<Element>& qs) {
  for (const auto& q : qs)
    if (S.leq(q, p))
      throw std::invalid_argument("precondition violated: " + S.format(p) + " dominates " + S.format(q));
}

struct SpanReport {
  bool passed = true;
  Index rank_a = 0, rank_b = 0, rank_joint = 0;
};

/// Φ(K(p,p)) ∩ span_i Φ(K(q_i,q_i)) = 0, by rank([A B]) = rank A + rank B.
inline SpanReport check_toeplitz_covariance(const ConcreteRep& phi, const Element& p, const std::vector<Element>& qs,
                                            double cutoff = kRankTol) {
  const auto& S = phi.L->semigroup();
  require_not_dominating(S, p, qs);
  SpanReport out;
  if (qs.empty()) return out;
  const Matrix A = linearize(phi, p, p, phi.K);
  std::vector<Matrix> bs;
  for (const auto& q : qs) bs.push_back(linearize(phi, q, q, phi.K));
  const Matrix B = hstack(bs, phi.dim * phi.dim);
  out.rank_a = numerical_rank(A, cutoff);
  out.rank_b = numerical_rank(B, cutoff);
  out.rank_joint = numerical_rank(hstack({A, B}, phi.dim * phi.dim), cutoff);
  out.passed = out.rank_joint == out.rank_a + out.rank_b;
  return out;
}

struct ConditionCReport {
  bool passed = true;
  double smallest_singular_value = 0.0;
  double commutator = 0.0;  // max ‖[Φ(a), 1 − Q_⟨q_i⟩]‖ over basis a
};

/// a ↦ Φ(a) ∏_i (1 − Q^Φ_⟨q_i⟩) is injective on K(p,p).
inline ConditionCReport check_condition_C(const ConcreteRep& phi, const Element& p, const std::vector<Element>& qs,
                                          double cutoff = kRankTol) {
  const auto& S = phi.L->semigroup();
  require_not_dominating(S, p, qs);
  ConditionCReport out;
  Matrix compress = Matrix::Identity(phi.dim, phi.dim);
  std::vector<Matrix> comps;
  GramCache grams;
  for (const auto& q : qs) {
    comps.push_back(Matrix::Identity(phi.dim, phi.dim) - compute_projections(phi, q, &grams).Q_ideal);
    compress = compress * comps.back();
  }
  const auto basis = phi.L->basis(p, p, phi.K);
  Matrix M(phi.dim * phi.dim, static_cast<Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Matrix img = phi.eval(basis[i]);
    M.col(static_cast<Index>(i)) = vec(img * compress);
    for (const auto& c : comps) out.commutator = std::max(out.commutator, spectral_norm(img * c - c * img));
  }
  out.smallest_singular_value = smallest_singular_value(M);
  out.passed = out.smallest_singular_value > cutoff;
  return out;
}

struct ConditionCprimeReport {
  bool passed = true;
  double compressed_norm = 0.0;
  double norm = 0.0;
};

/// ‖(1 − ∨Q^Φ_{q_i}) Φ̄(a) (1 − ∨Q^Φ_{q_i})‖ = ‖Φ̄(a)‖ within tol.
inline ConditionCprimeReport check_condition_Cprime(const ConcreteRep& phi_bar, const Element& p,
                                                    const std::vector<Element>& qs, const Arrow& a,
                                                    double tol = 1e-6) {
  const auto& S = phi_bar.L->semigroup();
  require_not_dominating(S, p, qs);
  std::vector<Matrix> Qs;
  GramCache grams;
  for (const auto& q : qs) Qs.push_back(compute_projections(phi_bar, q, &grams).Q);
  const Matrix C = Matrix::Identity(phi_bar.dim, phi_bar.dim) - join_projections(Qs, phi_bar.dim);
  const Matrix img = phi_bar.eval(a);
  ConditionCprimeReport out;
  out.norm = spectral_norm(img);
  out.compressed_norm = spectral_norm(C * img * C);
  out.passed = std::abs(out.norm - out.compressed_norm) <= tol;
  return out;
}

// ---- aperiodicity ------------------------------------------------------------------

struct AperiodicityResult {
  double best = 0.0;
  Matrix certificate;  // the positive norm-one a attaining `best`
  int evaluations = 0;
};

/// Minimizes ‖(a ⊗ 1_x) b a‖ over positive norm-one a in the hereditary
/// subalgebra h A h, where A consists of the matrices with the given
/// block-diagonal `mask` (1 where entries are allowed). Candidates are
/// a = d*d / ‖d*d‖ with d = h X h; random restarts are followed by
/// coordinate descent on the entries of X. The result is an upper bound on
/// the infimum.
inline AperiodicityResult aperiodicity_search(const std::function<Matrix(const Matrix&)>& tensor_x, const Matrix& b,
                                              const Matrix& h, const Matrix& mask, int trials, std::uint64_t seed,
                                              int sweeps = 60) {
  AperiodicityResult out;
  out.best = std::numeric_limits<double>::infinity();
  const Index n = h.rows();
  if (b.cwiseAbs().maxCoeff() == 0.0 || n == 0) {
    out.best = 0.0;
    out.certificate = Matrix::Zero(n, n);
    return out;
  }
  std::mt19937_64 rng(seed);
  auto objective = [&](const Matrix& X, Matrix* a_out) {
    const Matrix d = h * X.cwiseProduct(mask) * h;
    Matrix a = d.adjoint() * d;
    const double na = spectral_norm(a);
    ++out.evaluations;
    if (na < 1e-14) return std::numeric_limits<double>::infinity();
    a /= na;
    if (a_out) *a_out = a;
    return spectral_norm(tensor_x(a) * b * a);
  };
  for (int trial = 0; trial < std::max(trials, 1); ++trial) {
    Matrix X = random_matrix(n, n, rng);
    double val = objective(X, nullptr);
    double step = 0.5;
    for (int sweep = 0; sweep < sweeps && step > 1e-6; ++sweep) {
      bool improved = false;
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          if (mask(i, j) == cplx(0.0)) continue;
          // Four axis moves of the current step size plus zeroing the entry.
          for (int move = 0; move < 5; ++move) {
            Matrix Y = X;
            if (move == 4)
              Y(i, j) = 0.0;
            else
              Y(i, j) += step * std::pow(cplx(0, 1), move);
            const double v = objective(Y, nullptr);
            if (v < val) {
              val = v;
              X = std::move(Y);
              improved = true;
            }
          }
        }
      if (!improved) step *= 0.5;
    }
    Matrix a;
    const double v = objective(X, &a);
    if (v <= out.best) {
      out.best = v;
      out.certificate = a;
    }
  }
  return out;
}

// ---- grading ----------------------------------------------------------------------

/// A representation of a Fell bundle over a finite group: eval(g, b_g) is
/// the image of b_g ∈ B_g, a fiber element given as a list of blocks.
struct GradedRep {
  std::string name;
  int order = 0;
  Index dim = 0;
  std::function<Matrix(int, const std::vector<Matrix>&)> eval;
};

struct GradedReport {
  bool passed = true;
  std::size_t checked = 0;
  double worst_gap = 0.0;  // max of ‖b_e‖ − ‖Ψ(Σ b_g)‖
  std::vector<std::string> failures;
};

/// ‖b_e‖ ≤ ‖Ψ(Σ_g b_g)‖ + tol on each sample; a sample is one fiber element
/// per group index, and `fiber_e_norm` is the C*-norm on B_e.
inline GradedReport check_graded(const GradedRep& psi, const std::vector<std::vector<std::vector<Matrix>>>& samples,
                                 const std::function<double(const std::vector<Matrix>&)>& fiber_e_norm,
                                 double tol = 1e-9) {
  GradedReport out;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    if (static_cast<int>(s.size()) != psi.order) throw std::invalid_argument("sample needs one element per group index");
    Matrix sum = Matrix::Zero(psi.dim, psi.dim);
    for (int g = 0; g < psi.order; ++g) sum += psi.eval(g, s[static_cast<std::size_t>(g)]);
    const double be = fiber_e_norm(s[0]);
    const double img = spectral_norm(sum);
    ++out.checked;
    out.worst_gap = std::max(out.worst_gap, be - img);
    if (be > img + tol) {
      out.passed = false;
      out.failures.push_back("sample " + std::to_string(k) + ": |b_e| = " + std::to_string(be) +
                             " exceeds |Psi(b)| = " + std::to_string(img));
    }
  }
  return out;
}

}  // namespace ntforge
