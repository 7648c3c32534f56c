/*
 * hash.hpp
 *
 * FNV-1a 64.
 */

#ifndef CERTABS_HASH_HPP_
#define CERTABS_HASH_HPP_

#include <cstdint>
#include <cstring>
#include <string_view>

namespace certabs {

class Fnv1a {
public:
  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  template <class T>
  void update_value(const T& v) {
    update(&v, sizeof(T));
  }
  std::uint64_t digest() const noexcept { return h_; }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view s) {
  Fnv1a h;
  h.update(s);
  return h.digest();
}

}  // namespace certabs

#endif
