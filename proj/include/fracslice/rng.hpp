#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fracslice {

/// Every random draw in the toolkit flows from one master seed through a
/// named substream, so independent pipeline stages stay decoupled: adding
/// draws to one purpose never shifts another purpose's sequence.
uint64_t substream_seed(uint64_t master_seed, std::string_view purpose, uint64_t index = 0);

std::mt19937_64 make_stream(uint64_t master_seed, std::string_view purpose, uint64_t index = 0);

/// Uniform double in [0,1) with 53 random bits.
double uniform_unit(std::mt19937_64& g);

double uniform_range(std::mt19937_64& g, double lo, double hi);

/// Unbiased integer in [0, n), n >= 1.
uint64_t uniform_index(std::mt19937_64& g, uint64_t n);

/// Standard normal via Box-Muller; consumes engine values in pairs.
double standard_normal(std::mt19937_64& g);

}  // namespace fracslice
