#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hexmap/bits.hpp"

namespace hexmap::test {

inline std::map<std::string, std::vector<uint8_t>> load_fixture_frames() {
    std::string path = std::string(HEXMAP_FIXTURE_DIR) + "/golden_frames.txt";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing fixture file " + path);
    std::map<std::string, std::vector<uint8_t>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string name, hex;
        ls >> name >> hex;
        out[name] = from_hex(hex);
    }
    return out;
}

// Independent RFC 1071 adder used to re-verify every builder's checksums.
inline uint16_t ones_sum(std::span<const uint8_t> bytes, uint32_t carry_in = 0) {
    uint64_t s = carry_in;
    size_t i = 0;
    for (; i + 1 < bytes.size(); i += 2) s += (bytes[i] << 8) | bytes[i + 1];
    if (i < bytes.size()) s += bytes[i] << 8;
    while (s >> 16) s = (s & 0xffff) + (s >> 16);
    return static_cast<uint16_t>(s);
}

// True when every checksum in the L3 packet re-verifies (sums to 0xffff
// including the stored checksum). Unknown protocols count as valid.
inline bool checksums_verify(std::span<const uint8_t> l3) {
    if (l3.empty()) return false;
    unsigned ver = l3[0] >> 4;
    uint8_t proto = 0;
    std::span<const uint8_t> l4;
    std::vector<uint8_t> pseudo;
    if (ver == 4) {
        if (l3.size() < 20) return false;
        size_t ihl = (l3[0] & 0xf) * 4u;
        if (ones_sum(l3.subspan(0, ihl)) != 0xffff) return false;
        proto = l3[9];
        l4 = l3.subspan(ihl);
        if (proto == 1) {
            return ones_sum(l4) == 0xffff; // no pseudo-header for ICMPv4
        }
        pseudo.insert(pseudo.end(), l3.begin() + 12, l3.begin() + 20);
        pseudo.push_back(0);
        pseudo.push_back(proto);
        pseudo.push_back(static_cast<uint8_t>(l4.size() >> 8));
        pseudo.push_back(static_cast<uint8_t>(l4.size()));
    } else if (ver == 6) {
        if (l3.size() < 40) return false;
        proto = l3[6];
        l4 = l3.subspan(40);
        pseudo.insert(pseudo.end(), l3.begin() + 8, l3.begin() + 40);
        pseudo.push_back(static_cast<uint8_t>(l4.size() >> 24));
        pseudo.push_back(static_cast<uint8_t>(l4.size() >> 16));
        pseudo.push_back(static_cast<uint8_t>(l4.size() >> 8));
        pseudo.push_back(static_cast<uint8_t>(l4.size()));
        pseudo.push_back(0);
        pseudo.push_back(0);
        pseudo.push_back(0);
        pseudo.push_back(proto);
    } else {
        return false;
    }
    if (proto != 6 && proto != 17 && proto != 58) return true;
    uint16_t partial = ones_sum(pseudo);
    uint16_t total = ones_sum(l4, partial);
    if (proto == 17) {
        // a transmitted 0 checksum means "not computed"
        if (l4.size() >= 8 && l4[6] == 0 && l4[7] == 0) return true;
    }
    return total == 0xffff;
}

// Minimal RFC 4180 reader for round-trip checks.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    for (size_t i = 0; i < text.size(); i++) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    i++;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\n') {
            row.push_back(std::move(cell));
            cell.clear();
            rows.push_back(std::move(row));
            row.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    if (!cell.empty() || !row.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

} // namespace hexmap::test
