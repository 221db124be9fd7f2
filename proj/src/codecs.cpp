#include "hexmap/codecs.hpp"

#include <algorithm>
#include <cstring>

#include "hexmap/errors.hpp"

namespace hexmap {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    put_u16(out, static_cast<uint16_t>(v >> 16));
    put_u16(out, static_cast<uint16_t>(v));
}

void put_addr(std::vector<uint8_t>& out, const Address& a) {
    size_t n = a.family == Family::v4 ? 4 : 16;
    size_t at = out.size();
    out.resize(at + n);
    u128_to_bytes(a.bits, std::span<uint8_t>(out.data() + at, n));
}

void patch_u16(std::vector<uint8_t>& buf, size_t off, uint16_t v) {
    buf[off] = static_cast<uint8_t>(v >> 8);
    buf[off + 1] = static_cast<uint8_t>(v);
}

// Running one's-complement sum; fold + complement at the end.
struct ChecksumAccumulator {
    uint64_t sum = 0;

    void add(std::span<const uint8_t> bytes) {
        size_t i = 0;
        for (; i + 1 < bytes.size(); i += 2)
            sum += static_cast<uint16_t>(bytes[i] << 8 | bytes[i + 1]);
        if (i < bytes.size()) sum += static_cast<uint16_t>(bytes[i] << 8);
    }

    uint16_t finish() const {
        uint64_t s = sum;
        while (s >> 16) s = (s & 0xffff) + (s >> 16);
        return static_cast<uint16_t>(~s & 0xffff);
    }
};

uint16_t l4_checksum(const Address& src, const Address& dst, uint8_t protocol,
                     std::span<const uint8_t> l4) {
    ChecksumAccumulator acc;
    uint8_t ab[16];
    size_t alen = src.family == Family::v4 ? 4 : 16;
    u128_to_bytes(src.bits, std::span<uint8_t>(ab, alen));
    acc.add({ab, alen});
    u128_to_bytes(dst.bits, std::span<uint8_t>(ab, alen));
    acc.add({ab, alen});
    uint8_t tail[8];
    if (src.family == Family::v4) {
        // zero, protocol, length
        tail[0] = 0;
        tail[1] = protocol;
        tail[2] = static_cast<uint8_t>(l4.size() >> 8);
        tail[3] = static_cast<uint8_t>(l4.size());
        acc.add({tail, 4});
    } else {
        // RFC 8200 pseudo-header: 32-bit length, 3 zero bytes, next header
        tail[0] = static_cast<uint8_t>(l4.size() >> 24);
        tail[1] = static_cast<uint8_t>(l4.size() >> 16);
        tail[2] = static_cast<uint8_t>(l4.size() >> 8);
        tail[3] = static_cast<uint8_t>(l4.size());
        tail[4] = tail[5] = tail[6] = 0;
        tail[7] = protocol;
        acc.add({tail, 8});
    }
    acc.add(l4);
    return acc.finish();
}

constexpr uint8_t kProtoIcmp = 1;
constexpr uint8_t kProtoTcp = 6;
constexpr uint8_t kProtoUdp = 17;
constexpr uint8_t kProtoIcmp6 = 58;

uint8_t icmp_protocol(Family f) { return f == Family::v4 ? kProtoIcmp : kProtoIcmp6; }

} // namespace

uint16_t internet_checksum(std::span<const uint8_t> bytes) {
    ChecksumAccumulator acc;
    acc.add(bytes);
    return acc.finish();
}

std::vector<uint8_t> build_ipv4_header(const Address& src, const Address& dst,
                                       uint8_t protocol, size_t payload_len, uint8_t ttl) {
    if (payload_len > 65535 - 20) throw ConfigError("IPv4 payload too large");
    std::vector<uint8_t> h;
    h.reserve(20);
    h.push_back(0x45);
    h.push_back(0);
    put_u16(h, static_cast<uint16_t>(20 + payload_len));
    put_u16(h, 0); // identification
    put_u16(h, 0); // flags/fragment offset
    h.push_back(ttl);
    h.push_back(protocol);
    put_u16(h, 0); // checksum placeholder
    put_addr(h, src);
    put_addr(h, dst);
    patch_u16(h, 10, internet_checksum(h));
    return h;
}

std::vector<uint8_t> build_ipv6_header(const Address& src, const Address& dst,
                                       uint8_t next_header, size_t payload_len,
                                       uint8_t hop_limit) {
    if (payload_len > 65535) throw ConfigError("IPv6 payload too large");
    std::vector<uint8_t> h;
    h.reserve(40);
    h.push_back(0x60);
    h.push_back(0);
    put_u16(h, 0); // flow label
    put_u16(h, static_cast<uint16_t>(payload_len));
    h.push_back(next_header);
    h.push_back(hop_limit);
    put_addr(h, src);
    put_addr(h, dst);
    return h;
}

namespace {

std::vector<uint8_t> wrap_l3(const Address& src, const Address& dst, uint8_t protocol,
                             std::vector<uint8_t> l4, uint8_t ttl) {
    std::vector<uint8_t> pkt = src.family == Family::v4
                                   ? build_ipv4_header(src, dst, protocol, l4.size(), ttl)
                                   : build_ipv6_header(src, dst, protocol, l4.size(), ttl);
    pkt.insert(pkt.end(), l4.begin(), l4.end());
    return pkt;
}

} // namespace

std::vector<uint8_t> packet_icmp_echo(const Address& src, const Address& dst, bool is_reply,
                                      uint16_t id, uint16_t seq,
                                      std::span<const uint8_t> payload, uint8_t ttl) {
    std::vector<uint8_t> icmp;
    icmp.reserve(8 + payload.size());
    bool v4 = src.family == Family::v4;
    icmp.push_back(v4 ? (is_reply ? 0 : 8) : (is_reply ? 129 : 128));
    icmp.push_back(0);
    put_u16(icmp, 0);
    put_u16(icmp, id);
    put_u16(icmp, seq);
    icmp.insert(icmp.end(), payload.begin(), payload.end());
    uint16_t ck = v4 ? internet_checksum(icmp) : l4_checksum(src, dst, kProtoIcmp6, icmp);
    patch_u16(icmp, 2, ck);
    return wrap_l3(src, dst, icmp_protocol(src.family), std::move(icmp), ttl);
}

std::vector<uint8_t> packet_tcp(const Address& src, const Address& dst, uint16_t sport,
                                uint16_t dport, uint32_t seq, uint32_t ack, uint8_t flags,
                                uint8_t ttl) {
    std::vector<uint8_t> tcp;
    tcp.reserve(20);
    put_u16(tcp, sport);
    put_u16(tcp, dport);
    put_u32(tcp, seq);
    put_u32(tcp, ack);
    tcp.push_back(0x50); // data offset 5, no options
    tcp.push_back(flags);
    put_u16(tcp, 65535); // window
    put_u16(tcp, 0);     // checksum placeholder
    put_u16(tcp, 0);     // urgent pointer
    patch_u16(tcp, 16, l4_checksum(src, dst, kProtoTcp, tcp));
    return wrap_l3(src, dst, kProtoTcp, std::move(tcp), ttl);
}

std::vector<uint8_t> packet_udp(const Address& src, const Address& dst, uint16_t sport,
                                uint16_t dport, std::span<const uint8_t> payload, uint8_t ttl) {
    std::vector<uint8_t> udp;
    udp.reserve(8 + payload.size());
    put_u16(udp, sport);
    put_u16(udp, dport);
    put_u16(udp, static_cast<uint16_t>(8 + payload.size()));
    put_u16(udp, 0);
    udp.insert(udp.end(), payload.begin(), payload.end());
    uint16_t ck = l4_checksum(src, dst, kProtoUdp, udp);
    if (ck == 0) ck = 0xffff; // RFC 768 / RFC 8200: zero means "no checksum"
    patch_u16(udp, 6, ck);
    return wrap_l3(src, dst, kProtoUdp, std::move(udp), ttl);
}

std::vector<uint8_t> packet_icmp_error(const Address& src, const Address& dst, uint8_t type,
                                       uint8_t code, std::span<const uint8_t> original,
                                       uint8_t ttl) {
    std::vector<uint8_t> icmp;
    bool v4 = src.family == Family::v4;
    size_t quote = original.size();
    if (v4) {
        // internet header + first 8 bytes of the offending datagram
        size_t ihl = original.size() >= 1 ? (original[0] & 0xf) * 4u : 20;
        quote = std::min(quote, ihl + 8);
    } else {
        quote = std::min(quote, size_t{1232}); // keep whole packet under min MTU
    }
    icmp.reserve(8 + quote);
    icmp.push_back(type);
    icmp.push_back(code);
    put_u16(icmp, 0);
    put_u32(icmp, 0); // unused / type-specific
    icmp.insert(icmp.end(), original.begin(), original.begin() + quote);
    uint16_t ck = v4 ? internet_checksum(icmp) : l4_checksum(src, dst, kProtoIcmp6, icmp);
    patch_u16(icmp, 2, ck);
    return wrap_l3(src, dst, icmp_protocol(src.family), std::move(icmp), ttl);
}

std::vector<uint8_t> encode_dns_name(const std::string& name) {
    std::vector<uint8_t> out;
    if (name.empty() || name == ".") {
        out.push_back(0);
        return out;
    }
    size_t pos = 0;
    std::string n = name;
    if (n.back() == '.') n.pop_back();
    while (pos <= n.size()) {
        size_t dot = n.find('.', pos);
        size_t end = dot == std::string::npos ? n.size() : dot;
        size_t len = end - pos;
        if (len == 0) throw ConfigError("empty label in DNS name \"" + name + "\"");
        if (len > 63) throw ConfigError("DNS label longer than 63 bytes in \"" + name + "\"");
        out.push_back(static_cast<uint8_t>(len));
        out.insert(out.end(), n.begin() + pos, n.begin() + end);
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    out.push_back(0);
    if (out.size() > 255) throw ConfigError("DNS name longer than 255 bytes: \"" + name + "\"");
    return out;
}

std::vector<uint8_t> build_dns_query(const std::string& qname, uint16_t qtype, uint16_t qclass,
                                     uint16_t txid) {
    std::vector<uint8_t> msg;
    put_u16(msg, txid);
    put_u16(msg, 0x0100); // RD
    put_u16(msg, 1);      // QDCOUNT
    put_u16(msg, 0);
    put_u16(msg, 0);
    put_u16(msg, 0);
    auto name = encode_dns_name(qname);
    msg.insert(msg.end(), name.begin(), name.end());
    put_u16(msg, qtype);
    put_u16(msg, qclass);
    return msg;
}

std::vector<uint8_t> build_dns_response(const std::string& qname, uint16_t qtype,
                                        uint16_t qclass, uint16_t txid, uint8_t rcode,
                                        std::optional<Address> answer) {
    std::vector<uint8_t> msg;
    put_u16(msg, txid);
    put_u16(msg, static_cast<uint16_t>(0x8180 | (rcode & 0xf))); // QR, RD, RA
    put_u16(msg, 1);
    put_u16(msg, answer ? 1 : 0);
    put_u16(msg, 0);
    put_u16(msg, 0);
    auto name = encode_dns_name(qname);
    msg.insert(msg.end(), name.begin(), name.end());
    put_u16(msg, qtype);
    put_u16(msg, qclass);
    if (answer) {
        msg.push_back(0xc0); // pointer to the question name
        msg.push_back(12);
        put_u16(msg, answer->family == Family::v4 ? kDnsTypeA : kDnsTypeAaaa);
        put_u16(msg, kDnsClassIn);
        put_u32(msg, 60); // TTL
        size_t alen = answer->family == Family::v4 ? 4 : 16;
        put_u16(msg, static_cast<uint16_t>(alen));
        size_t at = msg.size();
        msg.resize(at + alen);
        u128_to_bytes(answer->bits, std::span<uint8_t>(msg.data() + at, alen));
    }
    return msg;
}

std::vector<uint8_t> frame_from_packet(const FrameTemplate& tmpl, Family family,
                                       std::span<const uint8_t> l3_packet) {
    std::vector<uint8_t> f;
    f.reserve(14 + l3_packet.size());
    f.insert(f.end(), tmpl.dst_mac.begin(), tmpl.dst_mac.end());
    f.insert(f.end(), tmpl.src_mac.begin(), tmpl.src_mac.end());
    put_u16(f, family == Family::v4 ? 0x0800 : 0x86dd);
    f.insert(f.end(), l3_packet.begin(), l3_packet.end());
    return f;
}

std::vector<uint8_t> build_icmp_echo_frame(const FrameTemplate& tmpl, const Address& dst,
                                           uint16_t id, uint16_t seq,
                                           std::span<const uint8_t> payload) {
    auto pkt = packet_icmp_echo(tmpl.src_addr, dst, false, id, seq, payload, tmpl.ttl);
    return frame_from_packet(tmpl, dst.family, pkt);
}

std::vector<uint8_t> build_tcp_syn_frame(const FrameTemplate& tmpl, const Address& dst,
                                         uint16_t sport, uint16_t dport, uint32_t seq) {
    auto pkt = packet_tcp(tmpl.src_addr, dst, sport, dport, seq, 0, kTcpSyn, tmpl.ttl);
    return frame_from_packet(tmpl, dst.family, pkt);
}

std::vector<uint8_t> build_udp_frame(const FrameTemplate& tmpl, const Address& dst,
                                     uint16_t sport, uint16_t dport,
                                     std::span<const uint8_t> payload) {
    auto pkt = packet_udp(tmpl.src_addr, dst, sport, dport, payload, tmpl.ttl);
    return frame_from_packet(tmpl, dst.family, pkt);
}

// ---------------------------------------------------------------- parsing

namespace {

// Bounds-checked cursor; every accessor reports failure instead of reading
// out of range.
struct ByteReader {
    std::span<const uint8_t> buf;
    size_t pos = 0;

    size_t remaining() const { return buf.size() - pos; }
    bool need(size_t n) const { return remaining() >= n; }

    bool u8(uint8_t& v) {
        if (!need(1)) return false;
        v = buf[pos++];
        return true;
    }
    bool u16(uint16_t& v) {
        if (!need(2)) return false;
        v = static_cast<uint16_t>(buf[pos] << 8 | buf[pos + 1]);
        pos += 2;
        return true;
    }
    bool u32(uint32_t& v) {
        if (!need(4)) return false;
        v = static_cast<uint32_t>(buf[pos]) << 24 | static_cast<uint32_t>(buf[pos + 1]) << 16 |
            static_cast<uint32_t>(buf[pos + 2]) << 8 | buf[pos + 3];
        pos += 4;
        return true;
    }
    bool addr(u128& v, size_t n) {
        if (!need(n)) return false;
        v = u128_from_bytes(buf.subspan(pos, n));
        pos += n;
        return true;
    }
    bool skip(size_t n) {
        if (!need(n)) return false;
        pos += n;
        return true;
    }
};

struct IpInfo {
    Family family;
    u128 src, dst;
    uint8_t protocol;
    uint8_t ttl;
    size_t l4_offset;
    size_t l4_end; // exclusive, clamped to the buffer
};

// IPv6 extension headers we step over on receive.
bool is_v6_extension(uint8_t nh) {
    return nh == 0 || nh == 43 || nh == 44 || nh == 51 || nh == 60;
}

bool parse_ip(std::span<const uint8_t> p, IpInfo& out) {
    if (p.empty()) return false;
    uint8_t ver = p[0] >> 4;
    if (ver == 4) {
        if (p.size() < 20) return false;
        size_t ihl = (p[0] & 0xf) * 4u;
        if (ihl < 20 || p.size() < ihl) return false;
        uint16_t totlen = static_cast<uint16_t>(p[2] << 8 | p[3]);
        size_t end = std::min<size_t>(p.size(), std::max<size_t>(totlen, ihl));
        out.family = Family::v4;
        out.ttl = p[8];
        out.protocol = p[9];
        out.src = u128_from_bytes(p.subspan(12, 4));
        out.dst = u128_from_bytes(p.subspan(16, 4));
        out.l4_offset = ihl;
        out.l4_end = end;
        return true;
    }
    if (ver == 6) {
        if (p.size() < 40) return false;
        uint16_t plen = static_cast<uint16_t>(p[4] << 8 | p[5]);
        uint8_t nh = p[6];
        out.family = Family::v6;
        out.ttl = p[7];
        out.src = u128_from_bytes(p.subspan(8, 16));
        out.dst = u128_from_bytes(p.subspan(24, 16));
        size_t off = 40;
        size_t end = std::min<size_t>(p.size(), 40 + static_cast<size_t>(plen));
        for (int hops = 0; is_v6_extension(nh) && hops < 4; hops++) {
            if (off + 2 > end) return false;
            uint8_t next = p[off];
            size_t hlen;
            if (nh == 44) hlen = 8;                       // fragment
            else if (nh == 51) hlen = (p[off + 1] + 2) * 4u; // AH
            else hlen = (p[off + 1] + 1) * 8u;
            if (off + hlen > end) return false;
            off += hlen;
            nh = next;
        }
        if (is_v6_extension(nh)) return false; // chain too long
        out.protocol = nh;
        out.l4_offset = off;
        out.l4_end = end;
        return true;
    }
    return false;
}

bool parse_inner(std::span<const uint8_t> bytes, InnerPacket& inner) {
    IpInfo ip;
    if (!parse_ip(bytes, ip)) return false;
    inner.family = ip.family;
    inner.src = ip.src;
    inner.dst = ip.dst;
    inner.protocol = ip.protocol;
    inner.l4_valid = false;
    if (ip.l4_offset > bytes.size()) return true;
    ByteReader r{bytes.subspan(ip.l4_offset)};
    if (ip.protocol == kProtoTcp) {
        uint32_t seq;
        if (r.u16(inner.sport) && r.u16(inner.dport) && r.u32(seq)) {
            inner.tcp_seq = seq;
            inner.l4_valid = true;
        }
    } else if (ip.protocol == kProtoUdp) {
        if (r.u16(inner.sport) && r.u16(inner.dport)) inner.l4_valid = true;
    } else if (ip.protocol == kProtoIcmp || ip.protocol == kProtoIcmp6) {
        uint8_t t, c;
        uint16_t ck;
        if (r.u8(t) && r.u8(c) && r.u16(ck) && r.u16(inner.icmp_id) && r.u16(inner.icmp_seq))
            inner.l4_valid = true;
    }
    return true;
}

} // namespace

std::optional<DnsMessageView> parse_dns_message(std::span<const uint8_t> msg) {
    if (msg.size() < 12) return std::nullopt;
    DnsMessageView v;
    v.txid = static_cast<uint16_t>(msg[0] << 8 | msg[1]);
    uint16_t flags = static_cast<uint16_t>(msg[2] << 8 | msg[3]);
    v.response = (flags & 0x8000) != 0;
    v.rcode = flags & 0xf;
    uint16_t qdcount = static_cast<uint16_t>(msg[4] << 8 | msg[5]);
    if (qdcount == 0) return v;

    size_t pos = 12;
    size_t labels_len = 0;
    std::string name;
    for (;;) {
        if (pos >= msg.size()) return std::nullopt;
        uint8_t len = msg[pos];
        if (len == 0) {
            pos++;
            break;
        }
        if (len > 63) return std::nullopt;
        if (pos + 1 + len > msg.size()) return std::nullopt;
        labels_len += len + 1;
        if (labels_len > 255) return std::nullopt;
        if (!name.empty()) name.push_back('.');
        name.append(reinterpret_cast<const char*>(msg.data() + pos + 1), len);
        pos += 1 + len;
    }
    if (pos + 4 > msg.size()) return std::nullopt;
    v.has_question = true;
    v.qname = std::move(name);
    v.qtype = static_cast<uint16_t>(msg[pos] << 8 | msg[pos + 1]);
    v.qclass = static_cast<uint16_t>(msg[pos + 2] << 8 | msg[pos + 3]);
    return v;
}

const char* reply_kind_name(ReplyKind k) {
    switch (k) {
    case ReplyKind::icmp_echo_reply: return "icmp_echo_reply";
    case ReplyKind::icmp_error: return "icmp_error";
    case ReplyKind::tcp: return "tcp";
    case ReplyKind::udp: return "udp";
    case ReplyKind::dns: return "dns";
    case ReplyKind::other: return "other";
    }
    return "other";
}

PacketView parse_reply(std::span<const uint8_t> packet) {
    PacketView v;
    IpInfo ip;
    if (!parse_ip(packet, ip)) return v;
    v.family = ip.family;
    v.src = ip.src;
    v.dst = ip.dst;
    v.protocol = ip.protocol;
    v.ttl = ip.ttl;
    if (ip.l4_offset >= ip.l4_end) return v;
    std::span<const uint8_t> l4 = packet.subspan(ip.l4_offset, ip.l4_end - ip.l4_offset);

    bool v4 = ip.family == Family::v4;
    if (ip.protocol == (v4 ? kProtoIcmp : kProtoIcmp6)) {
        if (l4.size() < 8) return v;
        v.icmp_type = l4[0];
        v.icmp_code = l4[1];
        bool echo_reply = v4 ? v.icmp_type == 0 : v.icmp_type == 129;
        bool echo_request = v4 ? v.icmp_type == 8 : v.icmp_type == 128;
        bool error = v4 ? (v.icmp_type == 3 || v.icmp_type == 11 || v.icmp_type == 12)
                        : (v.icmp_type >= 1 && v.icmp_type <= 4);
        if (echo_reply || echo_request) {
            // Requests keep kind `other` (not a reply) but expose their
            // fields so the sim harness can echo them.
            v.icmp_id = static_cast<uint16_t>(l4[4] << 8 | l4[5]);
            v.icmp_seq = static_cast<uint16_t>(l4[6] << 8 | l4[7]);
            v.payload.assign(l4.begin() + 8, l4.end());
            if (echo_reply) v.kind = ReplyKind::icmp_echo_reply;
        } else if (error) {
            InnerPacket inner;
            if (parse_inner(l4.subspan(8), inner)) {
                v.inner = inner;
                v.kind = ReplyKind::icmp_error;
            }
        }
        return v;
    }
    if (ip.protocol == kProtoTcp) {
        if (l4.size() < 20) return v;
        ByteReader r{l4};
        uint8_t off_byte = 0, flags = 0;
        r.u16(v.sport);
        r.u16(v.dport);
        r.u32(v.tcp_seq);
        r.u32(v.tcp_ack);
        r.u8(off_byte);
        r.u8(flags);
        size_t doff = (off_byte >> 4) * 4u;
        if (doff < 20 || doff > l4.size()) return v;
        v.tcp_flags = flags;
        v.kind = ReplyKind::tcp;
        return v;
    }
    if (ip.protocol == kProtoUdp) {
        if (l4.size() < 8) return v;
        v.sport = static_cast<uint16_t>(l4[0] << 8 | l4[1]);
        v.dport = static_cast<uint16_t>(l4[2] << 8 | l4[3]);
        uint16_t ulen = static_cast<uint16_t>(l4[4] << 8 | l4[5]);
        size_t body_end = std::min<size_t>(l4.size(), std::max<uint16_t>(ulen, 8));
        v.payload.assign(l4.begin() + 8, l4.begin() + body_end);
        v.kind = ReplyKind::udp;
        if (v.sport == 53) {
            if (auto dns = parse_dns_message(v.payload)) {
                v.kind = ReplyKind::dns;
                v.dns_txid = dns->txid;
                v.dns_response = dns->response;
                v.dns_rcode = dns->rcode;
                v.dns_qname = dns->qname;
                v.dns_qtype = dns->qtype;
            }
        }
        return v;
    }
    return v;
}

} // namespace hexmap
