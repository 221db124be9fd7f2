#include "hexmap/probes.hpp"

namespace hexmap {

uint16_t resolved_dns_qtype(const ProbeOptions& opts, Family f) {
    if (opts.dns_qtype != 0) return opts.dns_qtype;
    return f == Family::v4 ? kDnsTypeA : kDnsTypeAaaa;
}

std::vector<uint8_t> build_probe_frame(const ProbeContext& ctx, const Address& dst,
                                       uint16_t port) {
    TokenFields f = embed(derive_token(ctx.secret, dst, port, ctx.type));
    switch (ctx.type) {
    case ProbeType::icmp_echo:
        return build_icmp_echo_frame(ctx.tmpl, dst, f.id16, f.seq16);
    case ProbeType::tcp_syn:
        return build_tcp_syn_frame(ctx.tmpl, dst, f.sport, port, f.seq32);
    case ProbeType::udp:
        return build_udp_frame(ctx.tmpl, dst, f.sport, port, ctx.opts.udp_payload);
    case ProbeType::dns: {
        auto query = build_dns_query(ctx.opts.dns_qname, resolved_dns_qtype(ctx.opts, dst.family),
                                     ctx.opts.dns_qclass, f.id16);
        return build_udp_frame(ctx.tmpl, dst, f.sport, port, query);
    }
    }
    return {};
}

} // namespace hexmap
