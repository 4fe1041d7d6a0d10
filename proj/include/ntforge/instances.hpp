#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ntforge/semigroup.hpp"

namespace ntforge {

struct InstanceInfo {
  std::string name;
  std::string description;
  SemigroupPtr semigroup;
};

inline SemigroupPtr symmetric_group_3() {
  // permutations of {0,1,2} in the order e, (01), (12), (02), (012), (021)
  const std::vector<std::vector<int>> perms{{0, 1, 2}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}, {1, 2, 0}, {2, 0, 1}};
  std::vector<std::vector<int>> table(6, std::vector<int>(6));
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      std::vector<int> c(3);
      for (int i = 0; i < 3; ++i) c[i] = perms[a][perms[b][i]];
      for (int k = 0; k < 6; ++k)
        if (perms[k] == c) table[a][b] = k;
    }
  return Semigroup::finite_group({"e", "s", "t", "r", "c", "d"}, table);
}

inline std::vector<InstanceInfo> shipped_instances() {
  const auto N = Semigroup::direct_sum(1);
  return {
      {"N", "natural numbers under addition", N},
      {"N2", "N^2, coordinatewise addition", Semigroup::direct_sum(2)},
      {"N3", "N^3, coordinatewise addition", Semigroup::direct_sum(3)},
      {"free2", "free monoid on a, b", Semigroup::free_monoid("ab")},
      {"free3", "free monoid on a, b, c", Semigroup::free_monoid("abc")},
      {"N*N2", "free product of N (x) and N^2 (y)",
       Semigroup::free_product({N, Semigroup::direct_sum(2)}, {"x", "y"})},
      {"NxZ2", "N with a unit group Z/2 adjoined", Semigroup::unit_extension(N, {2})},
      {"absorption", "pairs (k,m), (k,m)(l,n) = (k+l,n) if l>0 else (k,m+n)", Semigroup::absorption()},
      {"Z2", "cyclic group of order 2 generated by u", Semigroup::cyclic_group_product({2}, {"u"})},
      {"Z3", "cyclic group of order 3 generated by u", Semigroup::cyclic_group_product({3}, {"u"})},
      {"S3", "symmetric group on three letters", symmetric_group_3()},
  };
}

inline SemigroupPtr find_instance(const std::string& name) {
  std::string names;
  for (const auto& i : shipped_instances()) {
    if (i.name == name) return i.semigroup;
    names += (names.empty() ? "" : ", ") + i.name;
  }
  throw std::invalid_argument("unknown instance '" + name + "' (available: " + names + ")");
}

}  // namespace ntforge
