#include "ssridge/rng.hpp"

#include <ostream>

#include "ssridge/extended.hpp"

namespace ssridge {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

std::ostream& operator<<(std::ostream& os, const ExtReal& x) {
  if (x.is_inf()) return os << "inf";
  return os << x.value();
}

}  // namespace ssridge
