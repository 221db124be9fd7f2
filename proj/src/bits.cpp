#include "hexmap/bits.hpp"

#include <cstring>

#include "hexmap/errors.hpp"

namespace hexmap {

void u128_to_bytes(u128 v, std::span<uint8_t> out) {
    for (size_t i = out.size(); i-- > 0;) {
        out[i] = static_cast<uint8_t>(v & 0xff);
        v >>= 8;
    }
}

u128 u128_from_bytes(std::span<const uint8_t> in) {
    u128 v = 0;
    for (uint8_t b : in) v = (v << 8) | b;
    return v;
}

static const char* kHexDigits = "0123456789abcdef";

std::string to_hex(std::span<const uint8_t> bytes) {
    std::string s;
    s.reserve(bytes.size() * 2);
    for (uint8_t b : bytes) {
        s.push_back(kHexDigits[b >> 4]);
        s.push_back(kHexDigits[b & 0xf]);
    }
    return s;
}

static int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::vector<uint8_t> from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) throw ConfigError("hex string has odd length");
    std::vector<uint8_t> out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); i++) {
        int hi = hex_val(hex[2 * i]), lo = hex_val(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw ConfigError("invalid hex digit in \"" + hex + "\"");
        out[i] = static_cast<uint8_t>(hi << 4 | lo);
    }
    return out;
}

std::string to_base64(std::span<const uint8_t> bytes) {
    static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string s;
    s.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        uint32_t v = bytes[i] << 16 | bytes[i + 1] << 8 | bytes[i + 2];
        s.push_back(tbl[v >> 18]);
        s.push_back(tbl[(v >> 12) & 63]);
        s.push_back(tbl[(v >> 6) & 63]);
        s.push_back(tbl[v & 63]);
    }
    size_t rem = bytes.size() - i;
    if (rem == 1) {
        uint32_t v = bytes[i] << 16;
        s.push_back(tbl[v >> 18]);
        s.push_back(tbl[(v >> 12) & 63]);
        s += "==";
    } else if (rem == 2) {
        uint32_t v = bytes[i] << 16 | bytes[i + 1] << 8;
        s.push_back(tbl[v >> 18]);
        s.push_back(tbl[(v >> 12) & 63]);
        s.push_back(tbl[(v >> 6) & 63]);
        s.push_back('=');
    }
    return s;
}

} // namespace hexmap
