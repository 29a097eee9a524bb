#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "rfs/errors.hpp"

namespace rfs {

// Per-atom level encoding. Each atom occupies one base-4 digit of the basis
// index (two bits), atom 0 in the least significant digit.
enum Level : int { kG = 0, kS = 1, kE = 2, kR = 3 };

inline constexpr int kNumLevels = 4;
inline constexpr int kMaxAtoms = 10;  // exact treatment bound

inline char level_char(int level) {
  constexpr char names[kNumLevels + 1] = "gser";
  if (level < 0 || level >= kNumLevels) throw std::domain_error("bad level");
  return names[level];
}

inline int level_from_char(char c) {
  switch (c) {
    case 'g': return kG;
    case 's': return kS;
    case 'e': return kE;
    case 'r': return kR;
    default: throw std::domain_error(std::string("bad level char '") + c + "'");
  }
}

// 4^n, guarded by the capacity bound.
inline std::size_t state_dim(int n_atoms) {
  if (n_atoms < 0) throw std::domain_error("negative atom count");
  if (n_atoms > kMaxAtoms)
    throw capacity_error("state space 4^" + std::to_string(n_atoms) +
                         " exceeds the supported exact bound of 4^" +
                         std::to_string(kMaxAtoms));
  return std::size_t{1} << (2 * n_atoms);
}

inline int digit(std::size_t index, int atom) {
  return static_cast<int>((index >> (2 * atom)) & 3u);
}

inline std::size_t with_digit(std::size_t index, int atom, int level) {
  std::size_t mask = std::size_t{3} << (2 * atom);
  return (index & ~mask) | (static_cast<std::size_t>(level) << (2 * atom));
}

// Number of atoms in `level` for this basis index.
inline int count_level(std::size_t index, int n_atoms, int level) {
  int c = 0;
  for (int j = 0; j < n_atoms; ++j) c += (digit(index, j) == level);
  return c;
}

// Level-string <-> index. String position j is atom j, e.g. "ge" means atom 0
// in |g> and atom 1 in |e>.
inline std::size_t index_of(const std::string& levels) {
  std::size_t idx = 0;
  for (std::size_t j = 0; j < levels.size(); ++j)
    idx |= static_cast<std::size_t>(level_from_char(levels[j])) << (2 * j);
  return idx;
}

inline std::string levels_of(std::size_t index, int n_atoms) {
  std::string out(static_cast<std::size_t>(n_atoms), 'g');
  for (int j = 0; j < n_atoms; ++j) out[j] = level_char(digit(index, j));
  return out;
}

}  // namespace rfs
