#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hexmap/codecs.hpp"
#include "hexmap/validation.hpp"

namespace hexmap {

struct ProbeOptions {
    std::string dns_qname = "example.com";
    uint16_t dns_qtype = 0; // 0 resolves to A (v4) or AAAA (v6)
    uint16_t dns_qclass = kDnsClassIn;
    std::vector<uint8_t> udp_payload;
};

uint16_t resolved_dns_qtype(const ProbeOptions& opts, Family f);

// Everything needed to build any probe of one scan.
struct ProbeContext {
    ScanSecret secret;
    ProbeType type = ProbeType::icmp_echo;
    FrameTemplate tmpl;
    ProbeOptions opts;
};

// Full Ethernet frame for one (destination, port), with the validation
// token embedded in the type's protocol fields.
std::vector<uint8_t> build_probe_frame(const ProbeContext& ctx, const Address& dst,
                                       uint16_t port);

} // namespace hexmap
