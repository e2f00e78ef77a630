#pragma once

#include <cstddef>
#include <cstdint>

namespace kin {

// Incremental CRC-32 (IEEE 802.3 polynomial, same convention as zlib).
class Crc32 {
public:
  void update(const void* data, std::size_t len);
  std::uint32_t value() const { return state_ ^ 0xffffffffu; }

private:
  std::uint32_t state_ = 0xffffffffu;
};

std::uint32_t crc32(const void* data, std::size_t len);

} // namespace kin
