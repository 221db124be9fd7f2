#include "hexmap/validation.hpp"

#include <algorithm>
#include <cctype>

#include "hexmap/errors.hpp"
#include "hexmap/hash.hpp"

namespace hexmap {

const char* probe_type_name(ProbeType t) {
    switch (t) {
    case ProbeType::icmp_echo: return "icmp_echo";
    case ProbeType::tcp_syn: return "tcp_syn";
    case ProbeType::udp: return "udp";
    case ProbeType::dns: return "dns";
    }
    return "?";
}

ProbeType parse_probe_type(const std::string& name) {
    if (name == "icmp_echo" || name == "icmp") return ProbeType::icmp_echo;
    if (name == "tcp_syn" || name == "tcp") return ProbeType::tcp_syn;
    if (name == "udp") return ProbeType::udp;
    if (name == "dns") return ProbeType::dns;
    throw ConfigError("unknown probe type \"" + name +
                      "\" (expected icmp_echo, tcp_syn, udp, or dns)");
}

uint8_t probe_protocol(ProbeType t, Family f) {
    switch (t) {
    case ProbeType::icmp_echo: return f == Family::v4 ? 1 : 58;
    case ProbeType::tcp_syn: return 6;
    case ProbeType::udp:
    case ProbeType::dns: return 17;
    }
    return 0;
}

ScanSecret ScanSecret::from_seed(uint64_t seed) {
    static constexpr std::array<uint8_t, 16> kKdfKey = {'h', 'e', 'x', 'm', 'a', 'p', '-', 's',
                                                        'c', 'a', 'n', '-', 'k', 'e', 'y', '!'};
    uint8_t msg[9];
    for (int i = 0; i < 8; i++) msg[i] = static_cast<uint8_t>(seed >> (8 * i));
    ScanSecret s;
    for (uint8_t half = 0; half < 2; half++) {
        msg[8] = static_cast<uint8_t>(half + 1);
        uint64_t h = siphash24(kKdfKey, msg);
        for (int i = 0; i < 8; i++) s.key[8 * half + i] = static_cast<uint8_t>(h >> (8 * i));
    }
    return s;
}

uint64_t derive_token(const ScanSecret& secret, const Address& dst, uint16_t dst_port,
                      ProbeType type) {
    uint8_t msg[20];
    size_t alen = dst.family == Family::v4 ? 4 : 16;
    msg[0] = static_cast<uint8_t>(dst.family);
    u128_to_bytes(dst.bits, std::span<uint8_t>(msg + 1, alen));
    msg[1 + alen] = static_cast<uint8_t>(dst_port >> 8);
    msg[2 + alen] = static_cast<uint8_t>(dst_port);
    msg[3 + alen] = static_cast<uint8_t>(type);
    return siphash24(secret.key, std::span<const uint8_t>(msg, 4 + alen));
}

TokenFields embed(uint64_t token) {
    TokenFields f;
    f.id16 = static_cast<uint16_t>(token >> 48);
    f.seq16 = static_cast<uint16_t>(token >> 32);
    f.seq32 = static_cast<uint32_t>(token >> 32);
    f.sport = static_cast<uint16_t>(kEphemeralBase +
                                    static_cast<uint16_t>(token >> 16) % kEphemeralRange);
    return f;
}

const char* reject_reason_name(RejectReason r) {
    switch (r) {
    case RejectReason::bad_token: return "bad_token";
    case RejectReason::unparseable: return "unparseable";
    case RejectReason::foreign_port: return "foreign_port";
    case RejectReason::late_duplicate: return "late_duplicate";
    }
    return "?";
}

namespace {

Verdict rejected(RejectReason why) {
    Verdict v;
    v.accepted = false;
    v.reason = why;
    return v;
}

std::string normalize_name(std::string s) {
    if (!s.empty() && s.back() == '.') s.pop_back();
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string icmp_error_outcome(Family f, uint8_t type, uint8_t code) {
    if (f == Family::v4) {
        if (type == 3) {
            switch (code) {
            case 0: return "icmp_unreach_net";
            case 1: return "icmp_unreach_host";
            case 2: return "icmp_unreach_protocol";
            case 3: return "icmp_unreach_port";
            case 9:
            case 10:
            case 13: return "icmp_unreach_admin";
            default: return "icmp_unreach";
            }
        }
        if (type == 11) return "icmp_ttl_exceeded";
        if (type == 12) return "icmp_param_problem";
    } else {
        if (type == 1) {
            switch (code) {
            case 0: return "icmp_unreach_net";
            case 1: return "icmp_unreach_admin";
            case 3: return "icmp_unreach_host";
            case 4: return "icmp_unreach_port";
            default: return "icmp_unreach";
            }
        }
        if (type == 2) return "icmp_packet_too_big";
        if (type == 3) return "icmp_ttl_exceeded";
        if (type == 4) return "icmp_param_problem";
    }
    return "icmp_error";
}

std::string dns_outcome(uint8_t rcode) {
    switch (rcode) {
    case 0: return "dns_noerror";
    case 1: return "dns_formerr";
    case 2: return "dns_servfail";
    case 3: return "dns_nxdomain";
    case 4: return "dns_notimp";
    case 5: return "dns_refused";
    default: return "dns_rcode_" + std::to_string(rcode);
    }
}

Verdict verify_icmp_error(const VerifyContext& ctx, const PacketView& reply) {
    if (!reply.inner || !reply.inner->l4_valid) return rejected(RejectReason::unparseable);
    const InnerPacket& in = *reply.inner;
    // The quoted packet must be one of our own probes.
    if (in.family != ctx.family || in.src != ctx.source.bits) {
        return rejected(RejectReason::foreign_port);
    }
    if (in.protocol != probe_protocol(ctx.probe_type, ctx.family)) {
        return rejected(RejectReason::foreign_port);
    }
    Address probed{ctx.family, in.dst};
    uint16_t port = 0;
    if (ctx.probe_type != ProbeType::icmp_echo) {
        port = in.dport;
        if (!ctx.ports.contains(port)) return rejected(RejectReason::foreign_port);
    }
    TokenFields want = embed(derive_token(ctx.secret, probed, port, ctx.probe_type));
    bool ok = false;
    switch (ctx.probe_type) {
    case ProbeType::icmp_echo:
        ok = in.icmp_id == want.id16 && in.icmp_seq == want.seq16;
        break;
    case ProbeType::tcp_syn:
        ok = in.tcp_seq == want.seq32 && in.sport == want.sport;
        break;
    case ProbeType::udp:
    case ProbeType::dns:
        ok = in.sport == want.sport;
        break;
    }
    if (!ok) return rejected(RejectReason::bad_token);
    Verdict v;
    v.accepted = true;
    v.responder = Address{reply.family, reply.src};
    v.probe_dst = probed;
    v.probe_port = port;
    v.outcome = icmp_error_outcome(reply.family, reply.icmp_type, reply.icmp_code);
    return v;
}

} // namespace

Verdict verify(const VerifyContext& ctx, const PacketView& reply) {
    if (reply.kind == ReplyKind::other) return rejected(RejectReason::unparseable);
    if (reply.family != ctx.family) return rejected(RejectReason::foreign_port);
    if (reply.dst != ctx.source.bits) return rejected(RejectReason::foreign_port);

    if (reply.kind == ReplyKind::icmp_error) return verify_icmp_error(ctx, reply);

    Address responder{reply.family, reply.src};

    switch (ctx.probe_type) {
    case ProbeType::icmp_echo: {
        if (reply.kind != ReplyKind::icmp_echo_reply) return rejected(RejectReason::foreign_port);
        TokenFields want = embed(derive_token(ctx.secret, responder, 0, ctx.probe_type));
        if (reply.icmp_id != want.id16 || reply.icmp_seq != want.seq16)
            return rejected(RejectReason::bad_token);
        Verdict v;
        v.accepted = true;
        v.responder = responder;
        v.probe_dst = responder;
        v.probe_port = 0;
        v.outcome = "echo_reply";
        return v;
    }
    case ProbeType::tcp_syn: {
        if (reply.kind != ReplyKind::tcp) return rejected(RejectReason::foreign_port);
        if (!ctx.ports.contains(reply.sport)) return rejected(RejectReason::foreign_port);
        TokenFields want = embed(derive_token(ctx.secret, responder, reply.sport, ctx.probe_type));
        // Both the ephemeral port and the acknowledged sequence carry token
        // bits. Stacks that reset without acking our SYN are unmatchable.
        if (reply.dport != want.sport || reply.tcp_ack != want.seq32 + 1)
            return rejected(RejectReason::bad_token);
        Verdict v;
        v.accepted = true;
        v.responder = responder;
        v.probe_dst = responder;
        v.probe_port = reply.sport;
        bool syn = reply.tcp_flags & kTcpSyn, ack = reply.tcp_flags & kTcpAck;
        bool rst = reply.tcp_flags & kTcpRst;
        v.outcome = rst ? "tcp_rst" : (syn && ack ? "tcp_synack" : "tcp_other");
        return v;
    }
    case ProbeType::udp: {
        if (reply.kind != ReplyKind::udp && reply.kind != ReplyKind::dns)
            return rejected(RejectReason::foreign_port);
        if (!ctx.ports.contains(reply.sport)) return rejected(RejectReason::foreign_port);
        TokenFields want = embed(derive_token(ctx.secret, responder, reply.sport, ctx.probe_type));
        if (reply.dport != want.sport) return rejected(RejectReason::bad_token);
        Verdict v;
        v.accepted = true;
        v.responder = responder;
        v.probe_dst = responder;
        v.probe_port = reply.sport;
        v.outcome = "udp_data";
        return v;
    }
    case ProbeType::dns: {
        if (reply.kind == ReplyKind::udp) return rejected(RejectReason::unparseable);
        if (reply.kind != ReplyKind::dns) return rejected(RejectReason::foreign_port);
        if (!ctx.ports.contains(reply.sport)) return rejected(RejectReason::foreign_port);
        TokenFields want = embed(derive_token(ctx.secret, responder, reply.sport, ctx.probe_type));
        if (reply.dport != want.sport || reply.dns_txid != want.id16)
            return rejected(RejectReason::bad_token);
        if (!reply.dns_response || reply.dns_qtype != ctx.dns_qtype ||
            normalize_name(reply.dns_qname) != normalize_name(ctx.dns_qname)) {
            return rejected(RejectReason::bad_token);
        }
        Verdict v;
        v.accepted = true;
        v.responder = responder;
        v.probe_dst = responder;
        v.probe_port = reply.sport;
        v.outcome = dns_outcome(reply.dns_rcode);
        return v;
    }
    }
    return rejected(RejectReason::unparseable);
}

} // namespace hexmap
