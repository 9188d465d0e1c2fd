#include "taxoseq/rng.hpp"

namespace taxoseq {

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  return splitmix(base ^ fnv1a(tag, 14695981039346656037ull));
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index) {
  return splitmix(derive_seed(base, tag) + 0x9e3779b97f4a7c15ull * (index + 1));
}

}  // namespace taxoseq
