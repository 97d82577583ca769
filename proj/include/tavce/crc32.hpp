#ifndef TAVCE_CRC32_HPP
#define TAVCE_CRC32_HPP

#include <array>
#include <cstddef>
#include <cstdint>

namespace tavce {

// CRC32, IEEE 802.3 polynomial (the zlib/PNG variant).
class Crc32 {
 public:
  Crc32() : crc_(0xFFFFFFFFu) {}

  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      crc_ = table()[(crc_ ^ p[i]) & 0xFFu] ^ (crc_ >> 8);
    }
  }

  std::uint32_t value() const { return crc_ ^ 0xFFFFFFFFu; }

  static std::uint32_t of(const void* data, std::size_t len) {
    Crc32 c;
    c.update(data, len);
    return c.value();
  }

 private:
  static const std::array<std::uint32_t, 256>& table() {
    static const std::array<std::uint32_t, 256> t = [] {
      std::array<std::uint32_t, 256> out{};
      for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) {
          c = (c & 1u) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
        }
        out[i] = c;
      }
      return out;
    }();
    return t;
  }

  std::uint32_t crc_;
};

}  // namespace tavce

#endif  // TAVCE_CRC32_HPP
