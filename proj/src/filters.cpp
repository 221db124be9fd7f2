#include "hexmap/filters.hpp"

#include <cassert>
#include <charconv>
#include <sstream>

#include "hexmap/errors.hpp"

namespace hexmap {

PrefixFilter::PrefixFilter(Family family) : family_(family), width_(address_width(family)) {
    nodes_.emplace_back();
}

void PrefixFilter::add(u128 prefix_bits, unsigned prefix_len, Policy p) {
    if (prefix_len > width_) throw ConfigError("prefix length exceeds address width");
    int32_t node = 0;
    for (unsigned d = 0; d < prefix_len; d++) {
        unsigned bit = static_cast<unsigned>(prefix_bits >> (width_ - 1 - d)) & 1;
        int32_t next = nodes_[node].child[bit];
        if (next < 0) {
            next = static_cast<int32_t>(nodes_.size());
            nodes_.emplace_back();
            nodes_[node].child[bit] = next;
        }
        node = next;
    }
    int8_t& mark = nodes_[node].mark;
    if (mark != static_cast<int8_t>(Policy::block)) mark = static_cast<int8_t>(p);
    if (p == Policy::allow) has_allow_ = true;
    rules_++;
}

void PrefixFilter::add_lines(const std::string& text, Policy p, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        size_t e = line.find_last_not_of(" \t\r");
        std::string entry = line.substr(b, e - b + 1);

        auto fail = [&](const std::string& why) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + why + " in \"" +
                              entry + "\"");
        };

        std::string addr_part = entry;
        unsigned len = width_;
        if (size_t slash = entry.find('/'); slash != std::string::npos) {
            addr_part = entry.substr(0, slash);
            std::string len_part = entry.substr(slash + 1);
            auto [ptr, ec] = std::from_chars(len_part.data(), len_part.data() + len_part.size(),
                                             len);
            if (ec != std::errc() || ptr != len_part.data() + len_part.size() || len > width_)
                fail("bad prefix length");
        }
        Address a;
        try {
            a = parse_address(addr_part, family_);
        } catch (const ConfigError& err) {
            fail(err.what());
        }
        // Host bits below the prefix are irrelevant to matching; drop them.
        u128 bits = a.bits & (low_mask(width_) & ~low_mask(width_ - len));
        add(bits, len, p);
    }
}

bool PrefixFilter::is_allowed(const Address& addr) const {
    assert(addr.family == family_);
    Policy best = default_policy();
    int32_t node = 0;
    if (nodes_[0].mark >= 0) best = static_cast<Policy>(nodes_[0].mark);
    for (unsigned d = 0; d < width_; d++) {
        unsigned bit = static_cast<unsigned>(addr.bits >> (width_ - 1 - d)) & 1;
        node = nodes_[node].child[bit];
        if (node < 0) break;
        if (nodes_[node].mark >= 0) best = static_cast<Policy>(nodes_[node].mark);
    }
    return best == Policy::allow;
}

void PrefixFilter::collect_blocked(int32_t node, u128 prefix, unsigned depth, Policy inherited,
                                   std::vector<Region>& out) const {
    const Node& n = nodes_[node];
    Policy eff = n.mark >= 0 ? static_cast<Policy>(n.mark) : inherited;
    if (n.child[0] < 0 && n.child[1] < 0) {
        if (eff == Policy::block) out.push_back({prefix, depth});
        return;
    }
    for (unsigned bit = 0; bit < 2; bit++) {
        u128 sub = prefix | (static_cast<u128>(bit) << (width_ - 1 - depth));
        if (n.child[bit] >= 0) {
            collect_blocked(n.child[bit], sub, depth + 1, eff, out);
        } else if (eff == Policy::block) {
            out.push_back({sub, depth + 1});
        }
    }
}

// A blocked region of length L intersects the universe in one of three
// shapes: it contains the whole spec prefix, it pins the high bits of the
// randomized range, or it additionally pins the index and constrains the
// identifier.
mpz_class PrefixFilter::region_overlap(const Region& r, const TargetSpec& spec) const {
    unsigned w = spec.width();
    unsigned plen = spec.prefix_len;
    unsigned rlo = spec.random_lo;
    unsigned idw = spec.identifier_width();

    u128 head_mask = low_mask(w) & ~low_mask(w - std::min(r.len, plen));
    if (((spec.base ^ r.bits) & head_mask) != 0) return 0;
    if (r.len <= plen) return address_count(spec);

    if (r.len <= rlo) {
        mpz_class count = 1;
        mpz_mul_2exp(count.get_mpz_t(), count.get_mpz_t(), rlo - r.len);
        return count * spec.identifier.multiplicity();
    }

    // Index fully determined by the region; identifier's top bits must match.
    unsigned rw = spec.random_width();
    u128 index = rw == 0 ? 0 : (r.bits >> idw) & low_mask(rw);
    unsigned k = r.len - rlo;
    u128 want = (r.bits >> (w - r.len)) & low_mask(k);
    auto id_matches = [&](u128 v) { return ((v & low_mask(idw)) >> (idw - k)) == want; };

    const IdentifierSpec& id = spec.identifier;
    switch (id.mode) {
    case IdentifierSpec::Mode::fixed: return id_matches(id.value) ? 1 : 0;
    case IdentifierSpec::Mode::random: return id_matches(identifier_value(spec, 0, index)) ? 1 : 0;
    case IdentifierSpec::Mode::pattern: {
        mpz_class hits = 0;
        for (u128 v : id.pattern)
            if (id_matches(v)) hits++;
        return hits;
    }
    }
    return 0;
}

mpz_class PrefixFilter::count_excluded(const TargetSpec& spec) const {
    assert(spec.family == family_);
    std::vector<Region> blocked;
    collect_blocked(0, 0, 0, default_policy(), blocked);
    mpz_class total = 0;
    for (const Region& r : blocked) total += region_overlap(r, spec);
    return total;
}

PrefixFilter build_filter(Family family, const std::optional<std::string>& blocklist_text,
                          const std::string& blocklist_origin,
                          const std::optional<std::string>& allowlist_text,
                          const std::string& allowlist_origin) {
    PrefixFilter f(family);
    if (allowlist_text) {
        f.mark_allowlist_given();
        f.add_lines(*allowlist_text, PrefixFilter::Policy::allow, allowlist_origin);
    }
    if (blocklist_text) {
        f.add_lines(*blocklist_text, PrefixFilter::Policy::block, blocklist_origin);
    }
    return f;
}

} // namespace hexmap
