#include "hexmap/address.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include "hexmap/errors.hpp"
#include "hexmap/hash.hpp"

namespace hexmap {

std::string format_address(const Address& a) {
    char buf[INET6_ADDRSTRLEN] = {0};
    if (a.family == Family::v4) {
        uint8_t b[4];
        u128_to_bytes(a.bits, b);
        inet_ntop(AF_INET, b, buf, sizeof(buf));
    } else {
        uint8_t b[16];
        u128_to_bytes(a.bits, b);
        inet_ntop(AF_INET6, b, buf, sizeof(buf));
    }
    return buf;
}

Address parse_address(const std::string& text, Family family) {
    Address a;
    a.family = family;
    if (family == Family::v4) {
        uint8_t b[4];
        if (inet_pton(AF_INET, text.c_str(), b) != 1)
            throw ConfigError("malformed IPv4 address: \"" + text + "\"");
        a.bits = u128_from_bytes(b);
    } else {
        uint8_t b[16];
        if (inet_pton(AF_INET6, text.c_str(), b) != 1)
            throw ConfigError("malformed IPv6 address: \"" + text + "\"");
        a.bits = u128_from_bytes(b);
    }
    return a;
}

bool PortSet::contains(uint16_t p) const {
    return std::binary_search(ports.begin(), ports.end(), p);
}

namespace {

unsigned parse_uint_field(std::string_view s, const char* what, unsigned max) {
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError(std::string("malformed ") + what + ": \"" + std::string(s) + "\"");
    if (v > max)
        throw ConfigError(std::string(what) + " " + std::to_string(v) +
                          " exceeds maximum " + std::to_string(max));
    return v;
}

} // namespace

PortSet parse_ports(const std::string& expr) {
    PortSet set;
    size_t pos = 0;
    while (pos <= expr.size()) {
        size_t comma = expr.find(',', pos);
        std::string item = expr.substr(pos, comma == std::string::npos ? comma : comma - pos);
        pos = comma == std::string::npos ? expr.size() + 1 : comma + 1;
        if (item.empty())
            throw ConfigError("empty entry in port list \"" + expr + "\"");
        size_t dash = item.find('-');
        unsigned lo, hi;
        if (dash == std::string::npos) {
            lo = hi = parse_uint_field(item, "port", 65535);
        } else {
            lo = parse_uint_field(item.substr(0, dash), "port", 65535);
            hi = parse_uint_field(item.substr(dash + 1), "port", 65535);
            if (lo > hi)
                throw ConfigError("inverted port range \"" + item + "\"");
        }
        for (unsigned p = lo; p <= hi; p++)
            set.ports.push_back(static_cast<uint16_t>(p));
    }
    if (set.ports.empty())
        throw ConfigError("port list \"" + expr + "\" expands to nothing");
    std::sort(set.ports.begin(), set.ports.end());
    set.ports.erase(std::unique(set.ports.begin(), set.ports.end()), set.ports.end());
    return set;
}

TargetSpec parse_target(const std::string& expr, Family family) {
    TargetSpec spec;
    spec.family = family;
    unsigned width = spec.width();

    std::string addr_part = expr;
    unsigned plen = width;
    unsigned rlo = width;
    size_t slash = expr.find('/');
    if (slash != std::string::npos) {
        addr_part = expr.substr(0, slash);
        std::string range = expr.substr(slash + 1);
        size_t dash = range.find('-');
        if (dash == std::string::npos) {
            plen = parse_uint_field(range, "prefix length", width);
            rlo = width;
        } else {
            plen = parse_uint_field(range.substr(0, dash), "prefix length", width);
            rlo = parse_uint_field(range.substr(dash + 1), "randomized-range end", width);
        }
    }
    if (plen > rlo)
        throw ConfigError("prefix length " + std::to_string(plen) +
                          " exceeds randomized-range end " + std::to_string(rlo) +
                          " in \"" + expr + "\"");

    spec.base = parse_address(addr_part, family).bits;
    spec.prefix_len = plen;
    spec.random_lo = rlo;
    // Whatever the user typed below random_lo becomes the default identifier
    // (e.g. the "1" in 192.168.0.1/16-20).
    spec.identifier.mode = IdentifierSpec::Mode::fixed;
    spec.identifier.value = spec.base & low_mask(spec.identifier_width());
    return spec;
}

mpz_class address_count(const TargetSpec& spec) {
    mpz_class n = 1;
    mpz_mul_2exp(n.get_mpz_t(), n.get_mpz_t(), spec.random_width());
    n *= static_cast<unsigned long>(spec.identifier.multiplicity());
    return n;
}

mpz_class space_size(const TargetSpec& spec) {
    return address_count(spec) * static_cast<unsigned long>(std::max<size_t>(spec.ports.size(), 1));
}

u128 identifier_value(const TargetSpec& spec, uint64_t id_choice, u128 index) {
    unsigned idw = spec.identifier_width();
    if (idw == 0) return 0;
    switch (spec.identifier.mode) {
    case IdentifierSpec::Mode::fixed:
        return spec.identifier.value;
    case IdentifierSpec::Mode::pattern:
        return spec.identifier.pattern.at(id_choice);
    case IdentifierSpec::Mode::random: {
        uint8_t key[16];
        uint64_t st = spec.identifier.rng_seed;
        for (int i = 0; i < 2; i++) {
            uint64_t w = splitmix64(st);
            for (int j = 0; j < 8; j++) key[i * 8 + j] = static_cast<uint8_t>(w >> (8 * j));
        }
        uint8_t msg[17];
        msg[0] = 0x1d; // domain tag: identifier draw
        u128_to_bytes(index, std::span<uint8_t>(msg + 1, 16));
        u128 h = siphash24_128(std::span<const uint8_t, 16>(key, 16),
                               std::span<const uint8_t>(msg, sizeof(msg)));
        return h & low_mask(idw);
    }
    }
    return 0;
}

Address compose_address(const TargetSpec& spec, u128 index, u128 id_value) {
    unsigned w = spec.random_width();
    if (w < 128 && index >= (static_cast<u128>(1) << w))
        throw std::out_of_range("randomization index out of range");
    unsigned width = spec.width();
    unsigned idw = spec.identifier_width();

    u128 prefix_mask = low_mask(width) & ~low_mask(width - spec.prefix_len);
    u128 injected = spec.random_lo == 0 ? 0 : index << (width - spec.random_lo);
    u128 addr = (spec.base & prefix_mask) | injected | (id_value & low_mask(idw));
    return Address{spec.family, addr};
}

Decomposed decompose_address(const TargetSpec& spec, const Address& a) {
    unsigned width = spec.width();
    Decomposed d;
    d.index = spec.random_lo == 0
                  ? 0
                  : (a.bits >> (width - spec.random_lo)) & low_mask(spec.random_width());
    d.id_value = a.bits & low_mask(spec.identifier_width());
    return d;
}

} // namespace hexmap
