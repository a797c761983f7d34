#include "fracslice/rng.hpp"

#include <cmath>

namespace fracslice {

namespace {

uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

uint64_t substream_seed(uint64_t master_seed, std::string_view purpose, uint64_t index) {
  uint64_t h = splitmix64(master_seed ^ fnv1a(purpose));
  return splitmix64(h ^ (0x5851f42d4c957f2dull * (index + 1)));
}

std::mt19937_64 make_stream(uint64_t master_seed, std::string_view purpose, uint64_t index) {
  return std::mt19937_64(substream_seed(master_seed, purpose, index));
}

double uniform_unit(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

double uniform_range(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(g);
}

uint64_t uniform_index(std::mt19937_64& g, uint64_t n) {
  // rejection from the top of the range keeps the draw exactly uniform
  uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
  uint64_t v = g();
  while (v >= limit) v = g();
  return v % n;
}

double standard_normal(std::mt19937_64& g) {
  double u1 = uniform_unit(g);
  double u2 = uniform_unit(g);
  while (u1 <= 0) {
    u1 = uniform_unit(g);
    u2 = uniform_unit(g);
  }
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace fracslice
