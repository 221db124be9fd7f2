#include "doctest.h"

#include <random>
#include <string>
#include <vector>

#include "hexmap/errors.hpp"
#include "hexmap/filters.hpp"

using namespace hexmap;

namespace {

Address a4(const char* s) { return parse_address(s, Family::v4); }
Address a6(const char* s) { return parse_address(s, Family::v6); }

// Linear-scan longest-prefix-match oracle with the same tie rule: among
// rules on the identical prefix, block wins.
struct OracleFilter {
    struct Rule {
        u128 bits;
        unsigned len;
        bool block;
    };
    unsigned width;
    std::vector<Rule> rules;
    bool has_allow = false;

    bool is_allowed(u128 addr) const {
        int best_len = -1;
        bool best_block = has_allow; // default policy
        for (const Rule& r : rules) {
            u128 mask = r.len == 0 ? 0 : (low_mask(width) & ~low_mask(width - r.len));
            if (((addr ^ r.bits) & mask) != 0) continue;
            int len = static_cast<int>(r.len);
            if (len > best_len) {
                best_len = len;
                best_block = r.block;
            } else if (len == best_len && r.block) {
                best_block = true;
            }
        }
        return !best_block;
    }
};

} // namespace

TEST_CASE("plain blocklist containment") {
    PrefixFilter f(Family::v4);
    f.add(a4("10.0.0.0").bits, 8, PrefixFilter::Policy::block);
    CHECK_FALSE(f.is_allowed(a4("10.0.0.0")));
    CHECK_FALSE(f.is_allowed(a4("10.1.2.3")));
    CHECK_FALSE(f.is_allowed(a4("10.255.255.255")));
    CHECK(f.is_allowed(a4("9.255.255.255")));
    CHECK(f.is_allowed(a4("11.0.0.0")));
    CHECK(f.is_allowed(a4("192.168.1.1")));
    CHECK(f.rule_count() == 1);
}

TEST_CASE("the longest matching prefix decides") {
    PrefixFilter f(Family::v4);
    f.add(a4("10.0.0.0").bits, 8, PrefixFilter::Policy::block);
    f.add(a4("10.1.0.0").bits, 16, PrefixFilter::Policy::allow);
    f.add(a4("10.1.5.0").bits, 24, PrefixFilter::Policy::block);
    CHECK_FALSE(f.is_allowed(a4("10.0.0.1")));
    CHECK(f.is_allowed(a4("10.1.0.1")));
    CHECK(f.is_allowed(a4("10.1.4.255")));
    CHECK_FALSE(f.is_allowed(a4("10.1.5.77")));
    CHECK(f.is_allowed(a4("10.1.6.0")));
    CHECK_FALSE(f.is_allowed(a4("10.2.0.0")));
}

TEST_CASE("identical prefixes in both lists block") {
    for (bool allow_first : {true, false}) {
        PrefixFilter f(Family::v4);
        if (allow_first) {
            f.add(a4("10.0.0.0").bits, 8, PrefixFilter::Policy::allow);
            f.add(a4("10.0.0.0").bits, 8, PrefixFilter::Policy::block);
        } else {
            f.add(a4("10.0.0.0").bits, 8, PrefixFilter::Policy::block);
            f.add(a4("10.0.0.0").bits, 8, PrefixFilter::Policy::allow);
        }
        CHECK_FALSE(f.is_allowed(a4("10.3.4.5")));
    }
}

TEST_CASE("an allowlist flips the default to block") {
    PrefixFilter open(Family::v4);
    CHECK(open.is_allowed(a4("8.8.8.8"))); // no rules at all: allow

    PrefixFilter f(Family::v4);
    f.add(a4("10.0.0.0").bits, 8, PrefixFilter::Policy::allow);
    CHECK(f.is_allowed(a4("10.9.9.9")));
    CHECK_FALSE(f.is_allowed(a4("11.0.0.1"))); // unmatched now blocked

    // an allowlist that names nothing permits nothing
    PrefixFilter none = build_filter(Family::v4, std::nullopt, "b", std::string(""), "a");
    CHECK_FALSE(none.is_allowed(a4("8.8.8.8")));

    PrefixFilter both = build_filter(Family::v4, std::string("10.1.0.0/16\n"), "blocklist",
                                     std::string("10.0.0.0/8\n"), "allowlist");
    CHECK(both.is_allowed(a4("10.0.0.1")));
    CHECK_FALSE(both.is_allowed(a4("10.1.0.1")));
    CHECK_FALSE(both.is_allowed(a4("172.16.0.1")));
}

TEST_CASE("rule text parsing reports file and line") {
    PrefixFilter f(Family::v4);
    f.add_lines("# header comment\n"
                "10.0.0.0/8\n"
                "\n"
                "  192.168.1.1   # bare address means /32\n"
                "172.16.9.1/12  \n",
                PrefixFilter::Policy::block, "test.conf");
    CHECK(f.rule_count() == 3);
    CHECK_FALSE(f.is_allowed(a4("10.1.1.1")));
    CHECK_FALSE(f.is_allowed(a4("192.168.1.1")));
    CHECK(f.is_allowed(a4("192.168.1.2")));
    // host bits below /12 were dropped
    CHECK_FALSE(f.is_allowed(a4("172.17.0.1")));

    auto check_error = [](const std::string& text, const std::string& needle) {
        PrefixFilter g(Family::v4);
        try {
            g.add_lines(text, PrefixFilter::Policy::block, "bad.conf");
            FAIL("expected ConfigError for: " << text);
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    check_error("10.0.0.0/8\nnot-an-address\n", "bad.conf:2");
    check_error("10.0.0.0/33\n", "bad prefix length");
    check_error("10.0.0.0/8x\n", "bad prefix length");
    check_error("# fine\n# fine\n2001:db8::/32\n", "bad.conf:3");

    CHECK_THROWS_AS(f.add(0, 33, PrefixFilter::Policy::block), ConfigError);
}

TEST_CASE("trie agrees with a linear-scan oracle on random rules") {
    std::mt19937_64 rng(0xf117e5ULL);
    for (Family fam : {Family::v4, Family::v6}) {
        unsigned w = address_width(fam);
        PrefixFilter f(fam);
        OracleFilter oracle{w, {}, false};

        auto rand_bits = [&] {
            return (static_cast<u128>(rng()) << 64 | rng()) & low_mask(w);
        };

        for (int i = 0; i < 60; i++) {
            unsigned len = static_cast<unsigned>(rng() % (w + 1));
            u128 bits = rand_bits() & (low_mask(w) & ~low_mask(w - len));
            bool block = (rng() & 3) != 0; // mostly blocks, some allows
            auto p = block ? PrefixFilter::Policy::block : PrefixFilter::Policy::allow;
            f.add(bits, len, p);
            oracle.rules.push_back({bits, len, block});
            if (!block) oracle.has_allow = true;
        }

        size_t disagreements = 0;
        for (int i = 0; i < 100000; i++) {
            u128 bits = rand_bits();
            // half the draws land inside a random rule so matches happen
            if (i & 1) {
                const auto& r = oracle.rules[rng() % oracle.rules.size()];
                u128 keep = r.len == 0 ? 0 : (low_mask(w) & ~low_mask(w - r.len));
                bits = (r.bits & keep) | (bits & ~keep & low_mask(w));
            }
            if (f.is_allowed(Address{fam, bits}) != oracle.is_allowed(bits)) disagreements++;
        }
        CHECK(disagreements == 0);
    }
}

TEST_CASE("count_excluded counts addresses, not tuples") {
    TargetSpec spec = parse_target("10.0.0.0/24-28", Family::v4);
    spec.ports = parse_ports("80,443,8080");
    PrefixFilter f(Family::v4);
    f.add(a4("10.0.0.0").bits, 24, PrefixFilter::Policy::block);
    CHECK(f.count_excluded(spec) == 16); // 2^4 addresses, ports not multiplied
    CHECK(address_count(spec) == 16);
}

TEST_CASE("count_excluded handles regions wider and narrower than the prefix") {
    TargetSpec spec = parse_target("2001:db8::/32-64", Family::v6);
    spec.ports = PortSet::icmp_sentinel();

    {
        PrefixFilter f(Family::v6);
        f.add(a6("2001:db8:5::").bits, 48, PrefixFilter::Policy::block);
        CHECK(f.count_excluded(spec) == 65536); // 2^(64-48)
    }
    {
        PrefixFilter f(Family::v6);
        f.add(a6("2001:db8::").bits, 32, PrefixFilter::Policy::block);
        CHECK(f.count_excluded(spec) == mpz_class(1) << 32);
    }
    {
        PrefixFilter f(Family::v6);
        f.add(a6("2001::").bits, 16, PrefixFilter::Policy::block); // covers whole universe
        CHECK(f.count_excluded(spec) == mpz_class(1) << 32);
    }
    {
        PrefixFilter f(Family::v6);
        f.add(a6("2001:db9::").bits, 48, PrefixFilter::Policy::block); // disjoint
        CHECK(f.count_excluded(spec) == 0);
    }
    {
        // region longer than the randomized range pins identifier bits
        TargetSpec idspec = parse_target("2001:db8::/32-64", Family::v6);
        idspec.ports = PortSet::icmp_sentinel();
        idspec.identifier.mode = IdentifierSpec::Mode::fixed;
        idspec.identifier.value = 1;
        PrefixFilter f(Family::v6);
        // block one full composed address: index 7, identifier 1
        Address victim = compose_address(idspec, 7, 1);
        f.add(victim.bits, 128, PrefixFilter::Policy::block);
        CHECK(f.count_excluded(idspec) == 1);
        CHECK_FALSE(f.is_allowed(victim));
        // blocking the same host bits with identifier 2 excludes nothing
        TargetSpec other = idspec;
        other.identifier.value = 2;
        Address miss = compose_address(other, 7, 2);
        PrefixFilter g(Family::v6);
        g.add(miss.bits, 128, PrefixFilter::Policy::block);
        CHECK(g.count_excluded(idspec) == 0);
    }
}

TEST_CASE("count_excluded equals brute force on random specs and filters") {
    std::mt19937_64 rng(0xc0117);
    int combos = 0;
    while (combos < 300) {
        Family fam = rng() & 1 ? Family::v6 : Family::v4;
        unsigned w = address_width(fam);
        unsigned rw = static_cast<unsigned>(rng() % 13);     // random bits
        unsigned idw = static_cast<unsigned>(rng() % 3);     // identifier bits
        unsigned plen = w - rw - idw;
        TargetSpec spec;
        spec.family = fam;
        spec.prefix_len = plen;
        spec.random_lo = plen + rw;
        spec.base = ((static_cast<u128>(rng()) << 64 | rng()) & low_mask(w)) &
                    ~low_mask(w - plen);
        spec.ports = PortSet::icmp_sentinel();
        switch (rng() % 3) {
        case 0:
            spec.identifier.mode = IdentifierSpec::Mode::fixed;
            spec.identifier.value = (static_cast<u128>(rng())) & low_mask(idw);
            break;
        case 1: {
            spec.identifier.mode = IdentifierSpec::Mode::pattern;
            size_t k = 1 + rng() % 3;
            for (size_t i = 0; i < k; i++)
                spec.identifier.pattern.push_back(static_cast<u128>(rng()) & low_mask(idw));
            break;
        }
        default:
            spec.identifier.mode = IdentifierSpec::Mode::random;
            spec.identifier.rng_seed = rng();
            break;
        }

        PrefixFilter f(fam);
        size_t nrules = 1 + rng() % 8;
        bool gave_allow = false;
        for (size_t i = 0; i < nrules; i++) {
            // bias rules into the universe so overlaps are common
            unsigned len = static_cast<unsigned>(rng() % (w + 1));
            u128 bits = (static_cast<u128>(rng()) << 64 | rng()) & low_mask(w);
            if (rng() & 1) bits = (bits & low_mask(w - plen)) | spec.base;
            bits &= low_mask(w) & ~low_mask(w - len);
            bool block = (rng() & 3) != 0;
            f.add(bits, len, block ? PrefixFilter::Policy::block : PrefixFilter::Policy::allow);
            gave_allow |= !block;
        }

        mpz_class brute = 0;
        u128 indices = u128{1} << rw;
        uint64_t mult = static_cast<uint64_t>(spec.identifier.multiplicity());
        for (u128 idx = 0; idx < indices; idx++) {
            for (uint64_t m = 0; m < mult; m++) {
                Address a = compose_address(spec, idx, identifier_value(spec, m, idx));
                if (!f.is_allowed(a)) brute++;
            }
        }
        mpz_class counted = f.count_excluded(spec);
        REQUIRE(counted == brute);
        combos++;
    }
}

TEST_CASE("count_excluded brute force at twenty bits") {
    TargetSpec spec = parse_target("172.16.0.0/12", Family::v4); // 20 random bits
    spec.ports = PortSet::icmp_sentinel();
    PrefixFilter f(Family::v4);
    f.add_lines("172.16.128.0/17\n172.17.3.0/24\n172.20.0.0/14\n8.8.8.8/32\n",
                PrefixFilter::Policy::block, "t");
    mpz_class brute = 0;
    for (u128 idx = 0; idx < (u128{1} << 20); idx++) {
        if (!f.is_allowed(compose_address(spec, idx, 0))) brute++;
    }
    CHECK(f.count_excluded(spec) == brute);
    CHECK(brute == 32768 + 256 + 262144);
}
