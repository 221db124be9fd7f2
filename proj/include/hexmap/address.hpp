#ifndef HEXMAP_ADDRESS_HPP
#define HEXMAP_ADDRESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "hexmap/bits.hpp"

namespace hexmap {

enum class Family : uint8_t { v4 = 4, v6 = 6 };

constexpr unsigned address_width(Family f) { return f == Family::v4 ? 32 : 128; }

// One concrete address. v4 sits right-aligned in the low 32 bits of the lane.
struct Address {
    Family family = Family::v4;
    u128 bits = 0;

    friend bool operator==(const Address&, const Address&) = default;
    friend auto operator<=>(const Address&, const Address&) = default;
};

std::string format_address(const Address& a);          // dotted quad / RFC 5952
Address parse_address(const std::string& text, Family family); // throws ConfigError

// How the identifier (bits below random_lo) is chosen per composed address.
struct IdentifierSpec {
    enum class Mode : uint8_t { fixed, pattern, random };
    Mode mode = Mode::fixed;
    u128 value = 0;                 // fixed
    std::vector<u128> pattern;      // pattern; non-empty, duplicate-free
    uint64_t rng_seed = 0;          // random

    uint64_t multiplicity() const {
        return mode == Mode::pattern ? pattern.size() : 1;
    }
};

// Ordered, duplicate-free 16-bit ports. ICMP scans carry the sentinel {0}.
struct PortSet {
    std::vector<uint16_t> ports;

    size_t size() const { return ports.size(); }
    bool contains(uint16_t p) const;
    static PortSet icmp_sentinel() { return PortSet{{0}}; }
};

// "80,443,8000-8002" -> sorted deduplicated set. Throws ConfigError on
// ports > 65535, inverted ranges, or empty expansions.
PortSet parse_ports(const std::string& expr);

// A scan universe: fixed prefix [0,prefix_len), randomized range
// [prefix_len,random_lo), identifier [random_lo,width), all MSB-first.
struct TargetSpec {
    Family family = Family::v4;
    u128 base = 0;
    unsigned prefix_len = 0;
    unsigned random_lo = 0;   // exclusive end of the randomized range
    IdentifierSpec identifier;
    PortSet ports;

    unsigned width() const { return address_width(family); }
    unsigned random_width() const { return random_lo - prefix_len; }
    unsigned identifier_width() const { return width() - random_lo; }
};

// Accepts ADDR, ADDR/PLEN, ADDR/PLEN-RLO. When RLO is omitted the whole
// host part is randomized; when PLEN is omitted the target is a single
// address. The identifier defaults to the base address's bits below RLO.
// Ports are left empty; the caller fills them in.
TargetSpec parse_target(const std::string& expr, Family family);

// 2^random_width * identifier multiplicity * |ports|.
mpz_class space_size(const TargetSpec& spec);
mpz_class address_count(const TargetSpec& spec); // without the port factor

// Identifier value for a given (spec, choice index). For random mode the
// draw is a pure function of (rng_seed, index) so scans are reproducible.
u128 identifier_value(const TargetSpec& spec, uint64_t id_choice, u128 index);

// prefix bits || index (MSB-first in [prefix_len,random_lo)) || identifier.
// Throws std::out_of_range when index >= 2^random_width.
Address compose_address(const TargetSpec& spec, u128 index, u128 id_value);

// Bit-slicing inverse of compose_address: recovers (index, id_value).
struct Decomposed {
    u128 index;
    u128 id_value;
};
Decomposed decompose_address(const TargetSpec& spec, const Address& a);

} // namespace hexmap

#endif
