#ifndef HEXMAP_HASH_HPP
#define HEXMAP_HASH_HPP

#include <array>
#include <cstdint>
#include <span>

#include "hexmap/bits.hpp"

namespace hexmap {

// SipHash-2-4 with a 128-bit key. Keyed MAC for validation tokens, scan
// secrets and cycle start points; not meant to resist offline key recovery.
uint64_t siphash24(std::span<const uint8_t, 16> key, std::span<const uint8_t> msg);

// 128-bit-output variant (SipHash-2-4-128).
u128 siphash24_128(std::span<const uint8_t, 16> key, std::span<const uint8_t> msg);

// Uniform draw in [0,1) keyed by (key, msg). Used for simulated loss/latency.
double keyed_unit_draw(std::span<const uint8_t, 16> key, std::span<const uint8_t> msg);

} // namespace hexmap

#endif
