#include "dpc/random.hpp"

namespace dpc {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) : key_(mix64(seed)), engine_(key_) {}

RandomStream RandomStream::substream(std::uint64_t key) const {
  RandomStream child(0);
  child.key_ = mix64(key_ ^ mix64(key + 0x632be59bd9b4e019ULL));
  child.engine_.seed(child.key_);
  return child;
}

double RandomStream::normal() { return normal_(engine_); }

double RandomStream::uniform() {
  // 53 random bits, shifted half a step off zero
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace dpc
