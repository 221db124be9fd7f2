#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "hexmap/address.hpp"
#include "hexmap/codecs.hpp"

namespace hexmap {

enum class ProbeType : uint8_t {
    icmp_echo = 1,
    tcp_syn = 2,
    udp = 3,
    dns = 4,
};

const char* probe_type_name(ProbeType t);
ProbeType parse_probe_type(const std::string& name); // throws ConfigError
uint8_t probe_protocol(ProbeType t, Family f);

// Per-scan MAC key. Derived from the run seed so a seed reproduces a scan
// exactly; never transmitted.
struct ScanSecret {
    std::array<uint8_t, 16> key{};

    static ScanSecret from_seed(uint64_t seed);
};

constexpr uint16_t kEphemeralBase = 32768;
constexpr uint16_t kEphemeralRange = 16384;

// 64-bit keyed token binding a probe to (destination, port, type).
uint64_t derive_token(const ScanSecret& secret, const Address& dst, uint16_t dst_port,
                      ProbeType type);

// Token bits mapped onto protocol fields, MSB first:
//   ICMP echo   id = bits [0,16)   seq = bits [16,32)
//   TCP SYN     seq32 = bits [0,32)
//   UDP / DNS   txid = bits [0,16)
//   source port (TCP/UDP/DNS) = base + bits [32,48) mod range
struct TokenFields {
    uint16_t id16;
    uint16_t seq16;
    uint32_t seq32;
    uint16_t sport;
};

TokenFields embed(uint64_t token);

enum class RejectReason : uint8_t {
    bad_token,
    unparseable,
    foreign_port,
    late_duplicate, // assigned by the dedup layer, never by verify()
};

const char* reject_reason_name(RejectReason r);

// Everything verify() may consult. Deliberately holds only per-run scan
// configuration; there is no way to smuggle per-probe state in, which is
// what makes reply matching stateless.
struct VerifyContext {
    ScanSecret secret;
    ProbeType probe_type = ProbeType::icmp_echo;
    Family family = Family::v4;
    Address source{};
    PortSet ports;
    std::string dns_qname;
    uint16_t dns_qtype = kDnsTypeA;
};

struct Verdict {
    bool accepted = false;
    RejectReason reason = RejectReason::unparseable;
    Address responder{};     // reply source (router for ICMP errors)
    Address probe_dst{};     // destination of the probe being answered
    uint16_t probe_port = 0; // probed destination port (0 for ICMP probes)
    std::string outcome;     // classification label surfaced in output rows
};

// Recomputes the token from the reply's claimed origin and compares the
// echoed fields. Replies of a kind the scan never sent, or addressed to
// someone else, are rejected as foreign.
Verdict verify(const VerifyContext& ctx, const PacketView& reply);

} // namespace hexmap
