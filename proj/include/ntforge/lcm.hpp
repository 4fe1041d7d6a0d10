#pragma once

// Initial segments, σ and the partition cells P_{F,C}.

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntforge/semigroup.hpp"

namespace ntforge {

using FiniteSubset = std::vector<Element>;

/// Sorted, de-duplicated copy.
inline FiniteSubset normalize_subset(FiniteSubset f) {
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
  return f;
}

inline bool leq(const Semigroup& S, const Element& p, const Element& q) { return S.leq(p, q); }

/// e for the empty set, otherwise the canonical iterated right LCM.
inline std::optional<Element> sigma(const Semigroup& S, const FiniteSubset& C) {
  Element acc = S.identity();
  for (const auto& c : C) {
    auto r = S.right_lcm(acc, c);
    if (!r) return std::nullopt;
    acc = *r;
  }
  return S.canonical_in_unit_orbit(acc);
}

struct Segment {
  FiniteSubset C;
  Element sigma;
};

struct InitialSegmentFamily {
  FiniteSubset F;
  std::vector<Segment> segments;
};

inline constexpr std::size_t kDefaultSegmentBound = 10;

inline bool is_initial_segment(const Semigroup& S, const FiniteSubset& F, const FiniteSubset& C) {
  const auto s = sigma(S, C);
  if (!s) return false;
  FiniteSubset below;
  for (const auto& t : F)
    if (S.leq(t, *s)) below.push_back(t);
  return normalize_subset(below) == normalize_subset(C);
}

inline InitialSegmentFamily initial_segments(const Semigroup& S, const FiniteSubset& F_in,
                                             std::size_t bound = kDefaultSegmentBound) {
  const FiniteSubset F = normalize_subset(F_in);
  if (F.size() > bound)
    throw std::invalid_argument("|F| = " + std::to_string(F.size()) + " exceeds the segment bound " +
                                std::to_string(bound));
  InitialSegmentFamily fam{F, {}};
  const std::size_t n = F.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    FiniteSubset C;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) C.push_back(F[i]);
    if (is_initial_segment(S, F, C)) fam.segments.push_back({C, *sigma(S, C)});
  }
  return fam;
}

inline bool partition_member(const Semigroup& S, const Element& s, const FiniteSubset& F_in,
                             const FiniteSubset& C_in) {
  const FiniteSubset F = normalize_subset(F_in);
  const FiniteSubset C = normalize_subset(C_in);
  if (!std::includes(F.begin(), F.end(), C.begin(), C.end()) || !is_initial_segment(S, F, C))
    throw std::invalid_argument("C is not an initial segment of F");
  if (!S.leq(*sigma(S, C), s)) return false;
  for (const auto& f : F)
    if (!std::binary_search(C.begin(), C.end(), f) && S.leq(f, s)) return false;
  return true;
}

/// Every element of length ≤ depth lies in exactly one cell, namely the one
/// indexed by C = {t ∈ F : t ≤ s}.
inline CheckReport check_partition(const Semigroup& S, const FiniteSubset& F_in, int depth) {
  CheckReport rep;
  const auto fam = initial_segments(S, F_in);
  for (const auto& s : S.enumerate(depth)) {
    ++rep.checked;
    int hits = 0;
    const Segment* hit = nullptr;
    for (const auto& seg : fam.segments)
      if (partition_member(S, s, fam.F, seg.C)) {
        ++hits;
        hit = &seg;
      }
    if (hits != 1) {
      rep.fail(S.format(s) + " lies in " + std::to_string(hits) + " cells");
      continue;
    }
    FiniteSubset below;
    for (const auto& t : fam.F)
      if (S.leq(t, s)) below.push_back(t);
    if (below != hit->C) rep.fail(S.format(s) + " is not in the cell of {t in F : t <= s}");
  }
  return rep;
}

/// x ∈ P* with p = q·x, if any.
inline std::optional<Element> unit_equivalent(const Semigroup& S, const Element& p, const Element& q) {
  return find_unit_between(S, p, q);
}

inline std::string format_subset(const Semigroup& S, const FiniteSubset& C) {
  std::string s = "{";
  for (std::size_t i = 0; i < C.size(); ++i) {
    if (i) s += ", ";
    s += S.format(C[i]);
  }
  return s + "}";
}

}  // namespace ntforge
