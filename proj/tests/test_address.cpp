#include "doctest.h"

#include <random>
#include <set>

#include "hexmap/address.hpp"
#include "hexmap/errors.hpp"

using namespace hexmap;

TEST_CASE("target grammar covers the three expression forms") {
    TargetSpec a = parse_target("2001:db8::/32-64", Family::v6);
    CHECK(a.prefix_len == 32);
    CHECK(a.random_lo == 64);
    CHECK(a.random_width() == 32);

    TargetSpec b = parse_target("192.168.0.1/16-20", Family::v4);
    CHECK(b.prefix_len == 16);
    CHECK(b.random_lo == 20);
    CHECK(b.random_width() == 4);

    TargetSpec c = parse_target("10.0.0.1/32", Family::v4);
    CHECK(c.random_width() == 0);
    c.ports = PortSet{{80}};
    CHECK(space_size(c) == 1);

    TargetSpec d = parse_target("10.0.0.0/8", Family::v4);
    CHECK(d.prefix_len == 8);
    CHECK(d.random_lo == 32);
    CHECK(d.random_width() == 24);

    TargetSpec e = parse_target("10.0.0.1", Family::v4);
    CHECK(e.prefix_len == 32);
    CHECK(e.random_width() == 0);
}

TEST_CASE("target grammar rejects malformed expressions") {
    CHECK_THROWS_AS(parse_target("10.0.0.0/24-16", Family::v4), ConfigError);
    CHECK_THROWS_AS(parse_target("10.0.0.0/8-33", Family::v4), ConfigError);
    CHECK_THROWS_AS(parse_target("10.0.0.0/33", Family::v4), ConfigError);
    CHECK_THROWS_AS(parse_target("2001:db8::/129", Family::v6), ConfigError);
    CHECK_THROWS_AS(parse_target("2001:db8::/32", Family::v4), ConfigError);
    CHECK_THROWS_AS(parse_target("1.2.3.4", Family::v6), ConfigError);
    CHECK_THROWS_AS(parse_target("999.1.1.1/8", Family::v4), ConfigError);
    CHECK_THROWS_AS(parse_target("", Family::v4), ConfigError);
    CHECK_THROWS_AS(parse_target("10.0.0.0/", Family::v4), ConfigError);
    CHECK_THROWS_AS(parse_target("10.0.0.0/8-", Family::v4), ConfigError);
}

TEST_CASE("space_size multiplies width, identifier multiplicity, and ports") {
    TargetSpec a = parse_target("2001:db8::/32-64", Family::v6);
    a.ports = PortSet::icmp_sentinel();
    CHECK(space_size(a) == mpz_class(1) << 32);

    TargetSpec b = parse_target("192.168.0.1/16-20", Family::v4);
    b.ports = parse_ports("80,443,8080");
    CHECK(space_size(b) == 48);
    // oracle: enumerate every composed (addr, port) pair
    std::set<std::pair<u128, uint16_t>> tuples;
    for (u128 i = 0; i < 16; i++) {
        Address addr = compose_address(b, i, identifier_value(b, 0, i));
        for (uint16_t p : b.ports.ports) tuples.insert({addr.bits, p});
    }
    CHECK(tuples.size() == 48);

    TargetSpec c = parse_target("2001:db8::/128", Family::v6);
    c.ports = PortSet::icmp_sentinel();
    CHECK(space_size(c) == 1);

    TargetSpec d = parse_target("10.0.0.0/24-28", Family::v4);
    d.ports = parse_ports("53");
    d.identifier.mode = IdentifierSpec::Mode::pattern;
    d.identifier.pattern = {1, 2, 254};
    CHECK(space_size(d) == 16 * 3);
    CHECK(address_count(d) == 16 * 3);
}

TEST_CASE("composition places the three address parts MSB-first") {
    TargetSpec v6 = parse_target("2001:db8::1/32-64", Family::v6);
    Address a = compose_address(v6, 1, identifier_value(v6, 0, 1));
    CHECK(format_address(a) == "2001:db8:0:1::1");

    Address base = compose_address(v6, 0, 0);
    CHECK(format_address(base) == "2001:db8::");

    TargetSpec v4 = parse_target("192.168.0.0/16-20", Family::v4);
    Address b = compose_address(v4, 0b1010, identifier_value(v4, 0, 0b1010));
    CHECK(format_address(b) == "192.168.160.0");

    // enumeration oracle for a tiny whole-host-part spec
    TargetSpec tiny = parse_target("10.0.0.0/30", Family::v4);
    std::set<std::string> got;
    for (u128 i = 0; i < 4; i++)
        got.insert(format_address(compose_address(tiny, i, identifier_value(tiny, 0, i))));
    CHECK(got == std::set<std::string>{"10.0.0.0", "10.0.0.1", "10.0.0.2", "10.0.0.3"});

    CHECK_THROWS_AS(compose_address(tiny, 4, 0), std::out_of_range);
}

TEST_CASE("composition round-trips through decomposition on random specs") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 500; trial++) {
        Family fam = rng() & 1 ? Family::v6 : Family::v4;
        unsigned w = address_width(fam);
        unsigned plen = static_cast<unsigned>(rng() % (w + 1));
        unsigned rlo = plen + static_cast<unsigned>(rng() % (w - plen + 1));
        TargetSpec spec;
        spec.family = fam;
        spec.prefix_len = plen;
        spec.random_lo = rlo;
        spec.base = (static_cast<u128>(rng()) << 64 | rng()) & low_mask(w);
        spec.base &= ~low_mask(w - plen); // keep only prefix bits
        spec.ports = PortSet::icmp_sentinel();

        unsigned rw = spec.random_width();
        u128 index = rw == 0 ? 0 : ((static_cast<u128>(rng()) << 64 | rng()) & low_mask(rw));
        unsigned idw = spec.identifier_width();
        u128 id = idw == 0 ? 0 : ((static_cast<u128>(rng()) << 64 | rng()) & low_mask(idw));

        Address a = compose_address(spec, index, id);
        Decomposed d = decompose_address(spec, a);
        REQUIRE(d.index == index);
        REQUIRE(d.id_value == id);
        // prefix bits preserved verbatim
        if (plen > 0)
            REQUIRE((a.bits & ~low_mask(w - plen)) == (spec.base & ~low_mask(w - plen)));
    }
}

TEST_CASE("composition is injective across the whole index range") {
    TargetSpec spec = parse_target("203.0.0.0/12-26", Family::v4); // 14 bits wide
    spec.ports = parse_ports("80,443");
    std::set<u128> seen;
    for (u128 i = 0; i < (1u << 14); i++)
        seen.insert(compose_address(spec, i, identifier_value(spec, 0, i)).bits);
    mpz_class per_port = space_size(spec) / 2;
    CHECK(mpz_class(static_cast<unsigned long>(seen.size())) == per_port);
}

TEST_CASE("incrementing the index touches only the randomized bit range") {
    TargetSpec spec = parse_target("2001:db8::42/32-64", Family::v6);
    unsigned w = spec.width();
    u128 range_mask = low_mask(w - spec.prefix_len) & ~low_mask(w - spec.random_lo);
    for (u128 i = 0; i + 1 < 64; i++) {
        u128 id = identifier_value(spec, 0, i);
        Address a = compose_address(spec, i, id);
        Address b = compose_address(spec, i + 1, id);
        REQUIRE(((a.bits ^ b.bits) & ~range_mask) == 0);
        REQUIRE(((a.bits ^ b.bits) & range_mask) != 0);
    }
}

TEST_CASE("identifier modes: fixed, pattern, random") {
    TargetSpec spec = parse_target("10.0.0.0/8-16", Family::v4);
    spec.ports = PortSet::icmp_sentinel();

    spec.identifier.mode = IdentifierSpec::Mode::fixed;
    spec.identifier.value = 0x2a;
    CHECK(spec.identifier.multiplicity() == 1);
    CHECK(identifier_value(spec, 0, 5) == 0x2a);

    spec.identifier.mode = IdentifierSpec::Mode::pattern;
    spec.identifier.pattern = {1, 2, 0xfe};
    CHECK(spec.identifier.multiplicity() == 3);
    CHECK(identifier_value(spec, 0, 9) == 1);
    CHECK(identifier_value(spec, 1, 9) == 2);
    CHECK(identifier_value(spec, 2, 9) == 0xfe);

    spec.identifier.mode = IdentifierSpec::Mode::random;
    spec.identifier.rng_seed = 99;
    u128 first = identifier_value(spec, 0, 7);
    CHECK(identifier_value(spec, 0, 7) == first); // pure function of (seed, index)
    CHECK((first & ~low_mask(spec.identifier_width())) == 0);
    std::set<u128> draws;
    for (u128 i = 0; i < 64; i++) draws.insert(identifier_value(spec, 0, i));
    CHECK(draws.size() > 32); // 16-bit identifiers: collisions rare over 64 draws
}

TEST_CASE("port expressions expand, sort, and deduplicate") {
    CHECK(parse_ports("80,443,8000-8002").ports ==
          std::vector<uint16_t>{80, 443, 8000, 8001, 8002});
    CHECK(parse_ports("53").ports == std::vector<uint16_t>{53});
    CHECK(parse_ports("80,80-81").ports == std::vector<uint16_t>{80, 81});
    CHECK(parse_ports("443,80").ports == std::vector<uint16_t>{80, 443});
    CHECK(parse_ports("0-3").ports == std::vector<uint16_t>{0, 1, 2, 3});

    CHECK_THROWS_AS(parse_ports("70000"), ConfigError);
    CHECK_THROWS_AS(parse_ports("90-80"), ConfigError);
    CHECK_THROWS_AS(parse_ports(""), ConfigError);
    CHECK_THROWS_AS(parse_ports("80,,81"), ConfigError);
    CHECK_THROWS_AS(parse_ports("http"), ConfigError);

    PortSet s = parse_ports("80,443");
    CHECK(s.contains(443));
    CHECK_FALSE(s.contains(8080));
}

TEST_CASE("address text round-trips in canonical form") {
    CHECK(format_address(parse_address("192.168.0.1", Family::v4)) == "192.168.0.1");
    CHECK(format_address(parse_address("0.0.0.0", Family::v4)) == "0.0.0.0");
    CHECK(format_address(parse_address("255.255.255.255", Family::v4)) == "255.255.255.255");
    CHECK(format_address(parse_address("2001:db8::1", Family::v6)) == "2001:db8::1");
    CHECK(format_address(parse_address("::", Family::v6)) == "::");
    CHECK(format_address(parse_address("::1", Family::v6)) == "::1");
    CHECK(format_address(parse_address("2001:DB8:0:0:1:0:0:1", Family::v6)) ==
          "2001:db8::1:0:0:1");
    CHECK(format_address(parse_address("fe80::", Family::v6)) == "fe80::");
    CHECK_THROWS_AS(parse_address("2001:db8::g", Family::v6), ConfigError);
    CHECK_THROWS_AS(parse_address("1.2.3", Family::v4), ConfigError);
    CHECK_THROWS_AS(parse_address("1.2.3.4.5", Family::v4), ConfigError);
}
