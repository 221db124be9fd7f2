#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "hexmap/address.hpp"

namespace hexmap {

// Binary trie over address bits, walked MSB first. Longest prefix wins
// regardless of which list a prefix came from; when the same prefix appears
// in both lists, block wins. Default policy is allow until an allow rule is
// inserted, after which unmatched addresses are blocked.
class PrefixFilter {
public:
    enum class Policy : uint8_t { allow, block };

    explicit PrefixFilter(Family family);

    Family family() const { return family_; }

    void add(u128 prefix_bits, unsigned prefix_len, Policy p);

    // One CIDR (or bare address) per line, `#` comments and blank lines
    // ignored. `origin` names the source in error messages.
    void add_lines(const std::string& text, Policy p, const std::string& origin);

    // Flip the default policy to block even when the allowlist had no rules
    // (an allowlist was given, so only listed space may be scanned).
    void mark_allowlist_given() { has_allow_ = true; }

    bool is_allowed(const Address& addr) const;

    // Exact count of composed addresses in the spec's universe that
    // is_allowed rejects, computed from trie regions without enumeration.
    mpz_class count_excluded(const TargetSpec& spec) const;

    size_t rule_count() const { return rules_; }

private:
    struct Node {
        int32_t child[2] = {-1, -1};
        int8_t mark = -1; // -1 none, else Policy
    };

    struct Region {
        u128 bits;    // prefix value, low-aligned like Address::bits
        unsigned len; // prefix length
    };

    Policy default_policy() const { return has_allow_ ? Policy::block : Policy::allow; }
    void collect_blocked(int32_t node, u128 prefix, unsigned depth, Policy inherited,
                         std::vector<Region>& out) const;
    mpz_class region_overlap(const Region& r, const TargetSpec& spec) const;

    Family family_;
    unsigned width_;
    std::vector<Node> nodes_;
    bool has_allow_ = false;
    size_t rules_ = 0;
};

// Convenience: build one filter from optional blocklist/allowlist texts.
PrefixFilter build_filter(Family family, const std::optional<std::string>& blocklist_text,
                          const std::string& blocklist_origin,
                          const std::optional<std::string>& allowlist_text,
                          const std::string& allowlist_origin);

} // namespace hexmap
