#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <tuple>

#include "stencilwa/kernel.hpp"

namespace stencilwa::oracle {

struct RandomKernelOptions {
  int max_arrays = 6;
  int max_accesses = 10;
  int radius = 2;
  // written arrays are read only at their write offset, if at all
  bool reads_only_at_write_point = false;
  int min_writes = 0;
};

/// Valid random kernel; offsets lie within `radius`.
inline KernelSpec random_kernel(std::mt19937_64& rng, const RandomKernelOptions& o = {}) {
  std::uniform_int_distribution<int> n_arrays(1, o.max_arrays);
  std::uniform_int_distribution<int> off(-o.radius, o.radius);
  std::uniform_int_distribution<int> coin(0, 1);

  KernelSpec k;
  k.name = "rand";
  k.flops_per_it = std::uniform_int_distribution<int>(0, 20)(rng);
  const int na = n_arrays(rng);
  for (int a = 0; a < na; ++a) k.arrays.push_back({"a" + std::to_string(a), "default", 64});

  std::set<std::tuple<std::string, int, int, AccessMode>> seen;
  std::set<std::string> written;
  auto add = [&](const Access& acc) {
    if (seen.insert({acc.array, acc.dj, acc.dk, acc.mode}).second) k.accesses.push_back(acc);
  };

  const int writes = std::uniform_int_distribution<int>(o.min_writes, na)(rng);
  for (int w = 0; w < writes; ++w) {
    const auto& name = k.arrays[static_cast<std::size_t>(w)].name;
    const int dj = o.reads_only_at_write_point ? 0 : off(rng);
    const int dk = o.reads_only_at_write_point ? 0 : off(rng);
    written.insert(name);
    if (coin(rng)) add({name, dj, dk, AccessMode::read});
    add({name, dj, dk, AccessMode::write});
  }
  std::uniform_int_distribution<int> pick(0, na - 1);
  const int reads = std::uniform_int_distribution<int>(writes == 0 ? 1 : 0, o.max_accesses)(rng);
  for (int r = 0; r < reads; ++r) {
    const auto& name = k.arrays[static_cast<std::size_t>(pick(rng))].name;
    if (o.reads_only_at_write_point && written.count(name)) continue;
    add({name, off(rng), off(rng), AccessMode::read});
  }
  // drop arrays nobody touches so n_arrays stays meaningful
  std::vector<ArrayDecl> used;
  for (const auto& a : k.arrays)
    for (const auto& acc : k.accesses)
      if (acc.array == a.name) {
        used.push_back(a);
        break;
      }
  k.arrays = used;
  return k;
}

}  // namespace stencilwa::oracle
