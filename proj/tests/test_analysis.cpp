#include <gtest/gtest.h>

#include <random>

#include "ntforge/analysis.hpp"
#include "ntforge/fellbundle.hpp"
#include "ntforge/instances.hpp"

using namespace ntforge;

namespace {

std::shared_ptr<const Truncation> vacuum_truncation(const PrecategoryPtr& L, const ColorIdeal& K, int depth) {
  return std::make_shared<const Truncation>(Truncation::make(L, K, depth, std::vector<Element>{L->semigroup().identity()}));
}

// Every (p, qs) with |qs| ≤ max_q, elements of length ≤ len, and no q ≤ p.
template <class F>
void for_each_nondominated(const Semigroup& S, int len, std::size_t max_q, F f) {
  const auto elems = S.enumerate(len);
  for (const auto& p : elems) {
    std::vector<Element> allowed;
    for (const auto& q : elems)
      if (!S.leq(q, p)) allowed.push_back(q);
    const std::size_t n = allowed.size();
    for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcountll(mask)) > max_q) continue;
      std::vector<Element> qs;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1) qs.push_back(allowed[i]);
      f(p, qs);
    }
  }
}

}  // namespace

TEST(Analysis, ToeplitzCovarianceSeparatesFockFromCharacter) {
  const auto N = Semigroup::direct_sum(1);
  const auto L = Precategory::colored(N, {{1}});
  const auto phi = fock_representation(vacuum_truncation(L, L->full_ideal(), 4));
  const auto chi = scalar_character_rep(L, 4);
  const auto one = N->parse("1");
  const std::vector<Element> qs{N->parse("2"), N->parse("3")};
  const auto f = check_toeplitz_covariance(phi, one, qs);
  EXPECT_TRUE(f.passed);
  EXPECT_EQ(f.rank_joint, 3);
  const auto c = check_toeplitz_covariance(chi, one, qs);
  EXPECT_FALSE(c.passed);
  EXPECT_EQ(c.rank_joint, 1);
  EXPECT_THROW(check_toeplitz_covariance(phi, N->parse("2"), {one}), std::invalid_argument);
}

TEST(Analysis, ScalarCharacterNeedsScalarFibers) {
  const auto L = Precategory::colored(Semigroup::direct_sum(1), {{2}});
  EXPECT_THROW(scalar_character_rep(L, 2), std::invalid_argument);
}

TEST(Analysis, ConditionCFailsForTheCharacter) {
  const auto N = Semigroup::direct_sum(1);
  const auto L = Precategory::colored(N, {{1}});
  const auto chi = scalar_character_rep(L, 3);
  const auto r = check_condition_C(chi, N->parse("1"), {N->parse("2")});
  EXPECT_FALSE(r.passed);
  EXPECT_LT(r.smallest_singular_value, 1e-12);
}

TEST(Analysis, ConditionCprimeOnFock) {
  const auto F = Semigroup::free_monoid("ab");
  const auto L = Precategory::colored(F, {{1}, {2}});
  const auto phi = fock_representation(vacuum_truncation(L, L->full_ideal(), 3));
  const auto phi_bar = extend_representation(phi, phi.K);
  std::mt19937_64 rng(4);
  const auto p = F->parse("a");
  const auto a = L->random(p, p, L->full_ideal(), rng);
  const auto r = check_condition_Cprime(phi_bar, p, {F->parse("b"), F->parse("aa")}, a);
  EXPECT_TRUE(r.passed) << r.norm << " vs " << r.compressed_norm;
  EXPECT_GT(r.norm, 0.0);
}

TEST(Analysis, ProjectionEquivalencesColored) {
  for (const char* name : {"N", "free2", "N2"}) {
    const auto S = find_instance(name);
    const auto L = Precategory::colored(S, std::vector<Dims>(S->generators().size(), Dims{1}));
    const auto phi = fock_representation(vacuum_truncation(L, L->full_ideal(), 4));
    const auto eq = check_projection_equivalences(phi, 2);
    EXPECT_TRUE(eq.equal_projections) << name;
    EXPECT_TRUE(eq.semilattice) << name;
    EXPECT_TRUE(eq.preorder) << name;
    EXPECT_TRUE(eq.special_relation) << name;
    EXPECT_LE(eq.max_distance, 1e-9);
  }
}

TEST(Analysis, ProjectionEquivalencesDegenerateOnZeroBackend) {
  const auto N = Semigroup::direct_sum(1);
  const auto L = Precategory::zero_tensor(N, {1, 1, 1, 1});
  const auto phi = fock_representation(std::make_shared<const Truncation>(Truncation::make(L, L->full_ideal(), 3)));
  const auto eq = check_projection_equivalences(phi, 2);
  EXPECT_FALSE(eq.equal_projections);
  EXPECT_GE(eq.max_distance, 0.99);
  EXPECT_FALSE(eq.special_relation);
  EXPECT_FALSE(eq.witnesses.empty());
}

TEST(Analysis, ExtensionKernel) {
  const auto F = Semigroup::free_monoid("ab");
  const auto L = Precategory::colored(F, {{2, 1}, {1, 2}});
  const ColorIdeal K{{1}};
  const auto phi = fock_representation(vacuum_truncation(L, K, 3));
  std::mt19937_64 rng(8);
  // arrow supported only in the color outside K: its extension vanishes
  const auto p = F->parse("a");
  const auto outside = L->make_color(p, p, 0, Matrix::Identity(2, 2));
  const auto k0 = check_extension_kernel(phi, K, outside);
  EXPECT_TRUE(k0.consistent);
  EXPECT_LE(k0.image_norm, 1e-12);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = L->random(p, F->parse("ab"), L->full_ideal(), rng);
    const auto k = check_extension_kernel(phi, K, a);
    EXPECT_TRUE(k.consistent);
    EXPECT_GT(k.image_norm, 1e-9);
  }
}

TEST(Analysis, AperiodicityTrivialAction) {
  const std::vector<Index> dims{1, 1};
  const Matrix mask = block_mask(dims);
  const auto res = aperiodicity_search([](const Matrix& a) { return a; }, Matrix::Identity(2, 2),
                                       Matrix::Identity(2, 2), mask, 10, 3);
  // ‖a·1·a‖ = ‖a‖² = 1 for every positive norm-one a
  EXPECT_NEAR(res.best, 1.0, 1e-6);
}

TEST(Analysis, AperiodicityFlipAction) {
  const std::vector<Index> dims{1, 1};
  const Matrix mask = block_mask(dims);
  Matrix P(2, 2);
  P << 0, 1, 1, 0;
  const auto res = aperiodicity_search([&](const Matrix& a) { return P * a * P; }, Matrix::Identity(2, 2),
                                       Matrix::Identity(2, 2), mask, 10, 3);
  // closed form: a = diag(s, t) with max(s, t) = 1 gives ‖α(a) a‖ = st, whose infimum is 0
  EXPECT_LE(res.best, 1e-6);
  EXPECT_GE(res.best, 0.0);
  const Matrix& a = res.certificate;
  EXPECT_NEAR(spectral_norm(a), 1.0, 1e-12);
  EXPECT_NEAR((P * a * P * a).norm(), res.best, 1e-12);
}

TEST(Analysis, AperiodicityRespectsTheHereditaryCorner) {
  // b lives on the first coordinate; restricting to h = e_2 e_2^* forces a ⊥ b
  const std::vector<Index> dims{2};
  Matrix b = Matrix::Zero(2, 2), h = Matrix::Zero(2, 2);
  b(0, 0) = 1.0;
  h(1, 1) = 1.0;
  const auto res = aperiodicity_search([](const Matrix& a) { return a; }, b, h, block_mask(dims), 4, 1);
  EXPECT_LE(res.best, 1e-12);
}

// Property: Fock-induced representations satisfy (C) on N, N², and the free
// monoid with a uniform singular-value margin.
TEST(AnalysisProperty, ConditionCOnFockRepresentations) {
  for (const char* name : {"N", "N2", "free2"}) {
    const auto S = find_instance(name);
    const auto L = Precategory::colored(S, std::vector<Dims>(S->generators().size(), Dims{1}));
    const auto phi = fock_representation(vacuum_truncation(L, L->full_ideal(), 3));
    int count = 0;
    for_each_nondominated(*S, 2, 3, [&](const Element& p, const std::vector<Element>& qs) {
      const auto r = check_condition_C(phi, p, qs);
      EXPECT_TRUE(r.passed) << name << " p=" << S->format(p);
      EXPECT_GE(r.smallest_singular_value, 1e-6);
      ++count;
    });
    EXPECT_GT(count, 0);
  }
}

// Property: Toeplitz covariance of the Fock representation for every
// non-dominated family.
TEST(AnalysisProperty, ToeplitzCovarianceOnFock) {
  const auto S = Semigroup::free_monoid("ab");
  const auto L = Precategory::colored(S, {{1}, {1}});
  const auto phi = fock_representation(vacuum_truncation(L, L->full_ideal(), 3));
  for_each_nondominated(*S, 2, 2, [&](const Element& p, const std::vector<Element>& qs) {
    EXPECT_TRUE(check_toeplitz_covariance(phi, p, qs).passed) << S->format(p);
  });
}

// Property: the Fock image of K(p,q) is injective on every fiber.
TEST(AnalysisProperty, FockIsFiberwiseInjective) {
  const auto S = Semigroup::direct_sum(2);
  const auto L = Precategory::colored(S, {{2}, {1}});
  const auto phi = fock_representation(vacuum_truncation(L, L->full_ideal(), 3));
  for (const auto& p : S->enumerate(1))
    for (const auto& q : S->enumerate(1)) EXPECT_GT(fiber_injectivity(phi, p, q, L->full_ideal()), 1e-6);
}
