#pragma once

#include <cstdint>
#include <random>

namespace jetleg::rngutil {

// splitmix64; used to derive independent per-stream seeds from a master seed.
inline uint64_t splitmix(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  uint64_t s = master ^ (0x6a09e667f3bcc909ull + stream * 0x9e3779b97f4a7c15ull);
  return splitmix(s);
}

inline std::mt19937_64 make_engine(uint64_t master, uint64_t stream) {
  return std::mt19937_64(derive_seed(master, stream));
}

}  // namespace jetleg::rngutil
