#include "doctest.h"

#include <array>
#include <random>

#include "hexmap/hash.hpp"

#ifdef HEXMAP_HAVE_SODIUM
#include <sodium.h>
#endif

using namespace hexmap;

namespace {

std::array<uint8_t, 16> seq_key() {
    std::array<uint8_t, 16> k{};
    for (uint8_t i = 0; i < 16; i++) k[i] = i;
    return k;
}

} // namespace

TEST_CASE("siphash24 matches the published reference vector") {
    // key 000102..0f, empty message: the canonical first row of the
    // reference implementation's output table.
    auto key = seq_key();
    CHECK(siphash24(key, {}) == 0x726fdb47dd0e0e31ULL);
}

TEST_CASE("siphash24 is deterministic and key-sensitive") {
    auto key = seq_key();
    std::array<uint8_t, 5> msg = {1, 2, 3, 4, 5};
    CHECK(siphash24(key, msg) == siphash24(key, msg));
    auto key2 = key;
    key2[0] ^= 1;
    CHECK(siphash24(key, msg) != siphash24(key2, msg));
    std::array<uint8_t, 5> msg2 = msg;
    msg2[4] ^= 0x80;
    CHECK(siphash24(key, msg) != siphash24(key, msg2));
}

#ifdef HEXMAP_HAVE_SODIUM
TEST_CASE("siphash24 agrees with libsodium across random inputs") {
    REQUIRE(sodium_init() >= 0);
    std::mt19937_64 rng(0xc0ffee);
    for (int trial = 0; trial < 2000; trial++) {
        std::array<uint8_t, 16> key;
        for (auto& b : key) b = static_cast<uint8_t>(rng());
        std::vector<uint8_t> msg(rng() % 129);
        for (auto& b : msg) b = static_cast<uint8_t>(rng());

        uint8_t out[8];
        crypto_shorthash(out, msg.data(), msg.size(), key.data());
        uint64_t expect = 0;
        for (int i = 0; i < 8; i++) expect |= static_cast<uint64_t>(out[i]) << (8 * i);
        REQUIRE(siphash24(key, msg) == expect);
    }
}

TEST_CASE("siphash24_128 agrees with libsodium siphashx24") {
    REQUIRE(sodium_init() >= 0);
    std::mt19937_64 rng(0xdecaf);
    for (int trial = 0; trial < 2000; trial++) {
        std::array<uint8_t, 16> key;
        for (auto& b : key) b = static_cast<uint8_t>(rng());
        std::vector<uint8_t> msg(rng() % 129);
        for (auto& b : msg) b = static_cast<uint8_t>(rng());

        uint8_t out[16];
        crypto_shorthash_siphashx24(out, msg.data(), msg.size(), key.data());
        uint64_t lo = 0, hi = 0;
        for (int i = 0; i < 8; i++) lo |= static_cast<uint64_t>(out[i]) << (8 * i);
        for (int i = 0; i < 8; i++) hi |= static_cast<uint64_t>(out[8 + i]) << (8 * i);
        REQUIRE(siphash24_128(key, msg) == u128_from(hi, lo));
    }
}
#endif

TEST_CASE("keyed_unit_draw lands in [0,1) and looks uniform") {
    auto key = seq_key();
    double sum = 0;
    const int n = 20000;
    for (int i = 0; i < n; i++) {
        uint8_t msg[4] = {static_cast<uint8_t>(i), static_cast<uint8_t>(i >> 8),
                          static_cast<uint8_t>(i >> 16), 0};
        double d = keyed_unit_draw(key, msg);
        REQUIRE(d >= 0.0);
        REQUIRE(d < 1.0);
        sum += d;
    }
    double mean = sum / n;
    CHECK(mean > 0.48);
    CHECK(mean < 0.52);
}
