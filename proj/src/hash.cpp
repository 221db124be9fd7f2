#include "hexmap/hash.hpp"

#include <bit>
#include <cstring>

namespace hexmap {

namespace {

inline uint64_t rotl(uint64_t x, int b) { return std::rotl(x, b); }

inline uint64_t load_le64(const uint8_t* p) {
    uint64_t v;
    std::memcpy(&v, p, 8);
    return v; // little-endian hosts only; asserted in tests against libsodium
}

struct SipState {
    uint64_t v0, v1, v2, v3;

    void init(std::span<const uint8_t, 16> key, bool wide) {
        uint64_t k0 = load_le64(key.data());
        uint64_t k1 = load_le64(key.data() + 8);
        v0 = k0 ^ 0x736f6d6570736575ULL;
        v1 = k1 ^ 0x646f72616e646f6dULL;
        v2 = k0 ^ 0x6c7967656e657261ULL;
        v3 = k1 ^ 0x7465646279746573ULL;
        if (wide) v1 ^= 0xee;
    }

    void round() {
        v0 += v1; v1 = rotl(v1, 13); v1 ^= v0; v0 = rotl(v0, 32);
        v2 += v3; v3 = rotl(v3, 16); v3 ^= v2;
        v0 += v3; v3 = rotl(v3, 21); v3 ^= v0;
        v2 += v1; v1 = rotl(v1, 17); v1 ^= v2; v2 = rotl(v2, 32);
    }

    void absorb(std::span<const uint8_t> msg) {
        size_t n = msg.size();
        const uint8_t* p = msg.data();
        const uint8_t* end = p + (n & ~size_t{7});
        for (; p != end; p += 8) {
            uint64_t m = load_le64(p);
            v3 ^= m;
            round();
            round();
            v0 ^= m;
        }
        uint64_t last = static_cast<uint64_t>(n & 0xff) << 56;
        for (size_t i = 0; i < (n & 7); i++)
            last |= static_cast<uint64_t>(end[i]) << (8 * i);
        v3 ^= last;
        round();
        round();
        v0 ^= last;
    }

    uint64_t digest() { return v0 ^ v1 ^ v2 ^ v3; }
};

} // namespace

uint64_t siphash24(std::span<const uint8_t, 16> key, std::span<const uint8_t> msg) {
    SipState s;
    s.init(key, false);
    s.absorb(msg);
    s.v2 ^= 0xff;
    for (int i = 0; i < 4; i++) s.round();
    return s.digest();
}

u128 siphash24_128(std::span<const uint8_t, 16> key, std::span<const uint8_t> msg) {
    SipState s;
    s.init(key, true);
    s.absorb(msg);
    s.v2 ^= 0xee;
    for (int i = 0; i < 4; i++) s.round();
    uint64_t h1 = s.digest();
    s.v1 ^= 0xdd;
    for (int i = 0; i < 4; i++) s.round();
    uint64_t h2 = s.digest();
    return u128_from(h2, h1);
}

double keyed_unit_draw(std::span<const uint8_t, 16> key, std::span<const uint8_t> msg) {
    // 53 uniform bits, same construction as the usual double-from-u64 trick
    uint64_t h = siphash24(key, msg);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

} // namespace hexmap
