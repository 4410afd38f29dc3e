#ifndef SPCONF_RNG_HPP
#define SPCONF_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace spconf {

/// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a over bytes.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t key) noexcept {
  return mix64(seed ^ mix64(key + 0x632be59bd9b4e019ULL));
}

/// Seed of replication `rep` under `master_seed`.
constexpr std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t rep) noexcept {
  return combine_seed(master_seed, rep);
}

/// Seed of the named field within one dataset. Depends only on its inputs,
/// never on draw order, so fields can be generated in any order.
constexpr std::uint64_t field_seed(std::uint64_t dataset_seed, std::string_view name) noexcept {
  return combine_seed(dataset_seed, fnv1a64(name));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Engine(seq);
}

} // namespace spconf

#endif // SPCONF_RNG_HPP
