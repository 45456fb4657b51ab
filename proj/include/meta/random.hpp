#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace meta {

using Rng = std::mt19937_64;

// The standard distributions are implementation-defined; these two helpers
// keep draws identical across standard libraries.

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Independent generator for a named sub-stream of a master seed.
inline Rng derive_stream(std::uint64_t master, std::string_view name,
                         std::initializer_list<std::uint64_t> path = {}) {
  std::vector<std::uint32_t> words;
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master);
  push(stream_tag(name));
  for (std::uint64_t p : path) push(p);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace meta
