#ifndef HEXMAP_CODECS_HPP
#define HEXMAP_CODECS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hexmap/address.hpp"
#include "hexmap/bits.hpp"

namespace hexmap {

using MacAddr = std::array<uint8_t, 6>;

// Everything constant across one scan's outbound frames.
struct FrameTemplate {
    MacAddr src_mac{{0x02, 0, 0, 0, 0, 0x01}};
    MacAddr dst_mac{{0x02, 0, 0, 0, 0, 0x02}}; // gateway
    Address src_addr;
    uint8_t ttl = 64; // hop limit on v6
};

// RFC 1071: one's-complement of the one's-complement 16-bit sum,
// odd lengths zero-padded.
uint16_t internet_checksum(std::span<const uint8_t> bytes);

// ---- layer-3 packet builders (no Ethernet header; the sim path and the
// ---- reply side of the harness work at this layer)

std::vector<uint8_t> build_ipv4_header(const Address& src, const Address& dst,
                                       uint8_t protocol, size_t payload_len, uint8_t ttl);
std::vector<uint8_t> build_ipv6_header(const Address& src, const Address& dst,
                                       uint8_t next_header, size_t payload_len,
                                       uint8_t hop_limit);

std::vector<uint8_t> packet_icmp_echo(const Address& src, const Address& dst, bool is_reply,
                                      uint16_t id, uint16_t seq,
                                      std::span<const uint8_t> payload, uint8_t ttl = 64);
std::vector<uint8_t> packet_tcp(const Address& src, const Address& dst, uint16_t sport,
                                uint16_t dport, uint32_t seq, uint32_t ack, uint8_t flags,
                                uint8_t ttl = 64);
std::vector<uint8_t> packet_udp(const Address& src, const Address& dst, uint16_t sport,
                                uint16_t dport, std::span<const uint8_t> payload,
                                uint8_t ttl = 64);
// ICMP destination-unreachable / time-exceeded and friends, quoting the
// offending packet (truncated to what fits per RFC).
std::vector<uint8_t> packet_icmp_error(const Address& src, const Address& dst, uint8_t type,
                                       uint8_t code, std::span<const uint8_t> original,
                                       uint8_t ttl = 64);

// DNS wire format, QDCOUNT=1, RD set. Throws ConfigError on bad names
// (label > 63, name > 255, empty label).
std::vector<uint8_t> build_dns_query(const std::string& qname, uint16_t qtype, uint16_t qclass,
                                     uint16_t txid);
// Response echoing the given question; optionally one address record.
std::vector<uint8_t> build_dns_response(const std::string& qname, uint16_t qtype,
                                        uint16_t qclass, uint16_t txid, uint8_t rcode,
                                        std::optional<Address> answer);
std::vector<uint8_t> encode_dns_name(const std::string& name);

// Header plus first question of a DNS message. nullopt when the bytes are
// not a DNS message; a compressed question name also counts as foreign
// since the queries built here never compress it.
struct DnsMessageView {
    uint16_t txid = 0;
    bool response = false;
    uint8_t rcode = 0;
    bool has_question = false;
    std::string qname;
    uint16_t qtype = 0;
    uint16_t qclass = 0;
};

std::optional<DnsMessageView> parse_dns_message(std::span<const uint8_t> msg);

// ---- full outbound frames (Ethernet + IP + L4)

std::vector<uint8_t> frame_from_packet(const FrameTemplate& tmpl, Family family,
                                       std::span<const uint8_t> l3_packet);
std::vector<uint8_t> build_icmp_echo_frame(const FrameTemplate& tmpl, const Address& dst,
                                           uint16_t id, uint16_t seq,
                                           std::span<const uint8_t> payload = {});
std::vector<uint8_t> build_tcp_syn_frame(const FrameTemplate& tmpl, const Address& dst,
                                         uint16_t sport, uint16_t dport, uint32_t seq);
std::vector<uint8_t> build_udp_frame(const FrameTemplate& tmpl, const Address& dst,
                                     uint16_t sport, uint16_t dport,
                                     std::span<const uint8_t> payload);

// ---- reply parsing

enum class ReplyKind : uint8_t { icmp_echo_reply, icmp_error, tcp, udp, dns, other };

const char* reply_kind_name(ReplyKind k);

// Summary of the probe quoted inside an ICMP error.
struct InnerPacket {
    Family family = Family::v4;
    u128 src = 0, dst = 0;
    uint8_t protocol = 0;
    bool l4_valid = false; // at least 8 bytes of L4 were quoted
    uint16_t sport = 0, dport = 0;
    uint32_t tcp_seq = 0;
    uint16_t icmp_id = 0, icmp_seq = 0;
};

struct PacketView {
    ReplyKind kind = ReplyKind::other;
    Family family = Family::v4;
    u128 src = 0, dst = 0;
    uint8_t protocol = 0;
    uint8_t ttl = 0;

    uint8_t icmp_type = 0, icmp_code = 0;
    uint16_t icmp_id = 0, icmp_seq = 0;

    uint16_t sport = 0, dport = 0;
    uint8_t tcp_flags = 0;
    uint32_t tcp_seq = 0, tcp_ack = 0;

    bool dns_response = false;
    uint16_t dns_txid = 0;
    uint8_t dns_rcode = 0;
    std::string dns_qname;
    uint16_t dns_qtype = 0;

    std::vector<uint8_t> payload; // L4 payload (echo data / UDP body)
    std::optional<InnerPacket> inner;
};

// Structural parse of an IP packet. Total: arbitrary bytes yield `other`,
// never a crash or out-of-bounds read. Walks at most 4 IPv6 extension
// headers. UDP from source port 53 with a plausible DNS header is
// classified as dns.
PacketView parse_reply(std::span<const uint8_t> packet);

// TCP flag bits
inline constexpr uint8_t kTcpFin = 0x01;
inline constexpr uint8_t kTcpSyn = 0x02;
inline constexpr uint8_t kTcpRst = 0x04;
inline constexpr uint8_t kTcpAck = 0x10;

// DNS constants used across probes/tests
inline constexpr uint16_t kDnsTypeA = 1;
inline constexpr uint16_t kDnsTypeNs = 2;
inline constexpr uint16_t kDnsTypeCname = 5;
inline constexpr uint16_t kDnsTypeTxt = 16;
inline constexpr uint16_t kDnsTypeAaaa = 28;
inline constexpr uint16_t kDnsClassIn = 1;
inline constexpr uint16_t kDnsClassChaos = 3;

} // namespace hexmap

#endif
