#include "hexmap/sim.hpp"

#include <charconv>
#include <chrono>
#include <sstream>

#include "hexmap/errors.hpp"
#include "hexmap/hash.hpp"

namespace hexmap {

uint64_t SimClock::now_ns() {
    std::lock_guard<std::mutex> lk(mu_);
    return now_;
}

void SimClock::sleep_until_ns(uint64_t deadline_ns) {
    std::function<void()> cb;
    {
        std::lock_guard<std::mutex> lk(mu_);
        if (deadline_ns > now_) {
            now_ = deadline_ns;
            cb = on_advance_;
        }
    }
    if (cb) cb();
}

void SimClock::set_on_advance(std::function<void()> fn) {
    std::lock_guard<std::mutex> lk(mu_);
    on_advance_ = std::move(fn);
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

uint8_t parse_rcode(const std::string& s) {
    if (s == "noerror") return 0;
    if (s == "formerr") return 1;
    if (s == "servfail") return 2;
    if (s == "nxdomain") return 3;
    if (s == "notimp") return 4;
    if (s == "refused") return 5;
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v > 15)
        throw ConfigError("bad rcode \"" + s + "\"");
    return static_cast<uint8_t>(v);
}

double parse_ms(const std::string& s) {
    std::string t = s;
    if (t.size() > 2 && t.substr(t.size() - 2) == "ms") t.resize(t.size() - 2);
    try {
        size_t used = 0;
        double v = std::stod(t, &used);
        if (used != t.size() || v < 0) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad duration \"" + s + "\"");
    }
}

std::array<uint8_t, 16> key_from_seed(uint64_t seed, uint8_t domain) {
    std::array<uint8_t, 16> key{};
    uint64_t s = seed ^ (0x73696du /*"sim"*/ + domain);
    uint64_t a = splitmix64(s), b = splitmix64(s);
    for (int i = 0; i < 8; i++) {
        key[i] = static_cast<uint8_t>(a >> (8 * i));
        key[8 + i] = static_cast<uint8_t>(b >> (8 * i));
    }
    return key;
}

constexpr uint8_t kDrawLoss = 1;
constexpr uint8_t kDrawLatency = 2;
constexpr uint8_t kDrawSeq = 3;

} // namespace

std::vector<ResponderRule> parse_rules(const std::string& text, Family family) {
    std::vector<ResponderRule> out;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    unsigned width = address_width(family);
    while (std::getline(in, line)) {
        lineno++;
        if (size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        auto fail = [&](const std::string& why) {
            throw ConfigError("rules:" + std::to_string(lineno) + ": " + why);
        };
        if (toks.size() < 2) fail("expected \"<cidr> <behavior> [options]\"");

        ResponderRule r;
        r.family = family;
        std::string addr_part = toks[0];
        r.prefix_len = width;
        if (size_t slash = addr_part.find('/'); slash != std::string::npos) {
            std::string lp = addr_part.substr(slash + 1);
            addr_part.resize(slash);
            auto [p, ec] = std::from_chars(lp.data(), lp.data() + lp.size(), r.prefix_len);
            if (ec != std::errc() || p != lp.data() + lp.size() || r.prefix_len > width)
                fail("bad prefix length");
        }
        try {
            Address a = parse_address(addr_part, family);
            r.prefix_bits = a.bits & (low_mask(width) & ~low_mask(width - r.prefix_len));
        } catch (const ConfigError& e) {
            fail(e.what());
        }

        std::string beh = toks[1];
        std::string args;
        if (size_t paren = beh.find('('); paren != std::string::npos) {
            if (beh.back() != ')') fail("unterminated behavior arguments");
            args = beh.substr(paren + 1, beh.size() - paren - 2);
            beh.resize(paren);
        }
        if (beh == "echo_reply") r.behavior = ResponderRule::Behavior::echo_reply;
        else if (beh == "syn_ack") r.behavior = ResponderRule::Behavior::syn_ack;
        else if (beh == "rst") r.behavior = ResponderRule::Behavior::rst;
        else if (beh == "udp_echo") r.behavior = ResponderRule::Behavior::udp_echo;
        else if (beh == "silent") r.behavior = ResponderRule::Behavior::silent;
        else if (beh == "dns_answer") {
            r.behavior = ResponderRule::Behavior::dns_answer;
            if (!args.empty()) {
                std::string rc = args, ip;
                if (size_t comma = args.find(','); comma != std::string::npos) {
                    rc = args.substr(0, comma);
                    ip = args.substr(comma + 1);
                }
                r.dns_rcode = parse_rcode(rc);
                if (!ip.empty()) r.dns_answer_addr = parse_address(ip, family);
            }
        } else if (beh == "icmp_error") {
            r.behavior = ResponderRule::Behavior::icmp_error;
            size_t comma = args.find(',');
            if (comma == std::string::npos) fail("icmp_error needs (type,code)");
            r.icmp_type = static_cast<uint8_t>(std::stoul(args.substr(0, comma)));
            r.icmp_code = static_cast<uint8_t>(std::stoul(args.substr(comma + 1)));
        } else {
            fail("unknown behavior \"" + beh + "\"");
        }

        for (size_t i = 2; i < toks.size(); i++) {
            size_t eq = toks[i].find('=');
            if (eq == std::string::npos) fail("expected key=value, got \"" + toks[i] + "\"");
            std::string key = toks[i].substr(0, eq), val = toks[i].substr(eq + 1);
            if (key == "port") {
                unsigned v = 0;
                auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
                if (ec != std::errc() || p != val.data() + val.size() || v > 65535)
                    fail("bad port \"" + val + "\"");
                r.port = static_cast<uint16_t>(v);
            } else if (key == "probe") {
                r.probe = parse_probe_type(val);
            } else if (key == "latency") {
                if (size_t dash = val.find('-'); dash != std::string::npos) {
                    r.latency_lo_ms = parse_ms(val.substr(0, dash));
                    r.latency_hi_ms = parse_ms(val.substr(dash + 1));
                    if (r.latency_hi_ms < r.latency_lo_ms) fail("inverted latency range");
                } else {
                    r.latency_lo_ms = r.latency_hi_ms = parse_ms(val);
                }
            } else if (key == "loss") {
                try {
                    r.loss = std::stod(val);
                } catch (const std::exception&) {
                    fail("bad loss \"" + val + "\"");
                }
                if (r.loss < 0 || r.loss > 1) fail("loss must be in [0,1]");
            } else {
                fail("unknown option \"" + key + "\"");
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

SimNet::SimNet(SimClock& clock, std::vector<ResponderRule> rules, uint64_t seed)
    : SimNet(clock, std::move(rules), seed, Options{}) {}

SimNet::SimNet(SimClock& clock, std::vector<ResponderRule> rules, uint64_t seed, Options opts)
    : clock_(clock), rules_(std::move(rules)), seed_(seed), opts_(opts) {
    clock_.set_on_advance([this] { cv_.notify_all(); });
}

const ResponderRule* SimNet::match_rule(const SentProbe& p) const {
    for (const ResponderRule& r : rules_) {
        if (r.family != p.family) continue;
        unsigned w = address_width(r.family);
        u128 mask = low_mask(w) & ~low_mask(w - r.prefix_len);
        if (((p.dst.bits ^ r.prefix_bits) & mask) != 0) continue;
        if (r.port && *r.port != p.dport) continue;
        if (r.probe && *r.probe != p.type) continue;
        return &r;
    }
    return nullptr;
}

double SimNet::unit_draw(const SentProbe& p, uint8_t purpose) const {
    uint8_t msg[20];
    u128_to_bytes(p.dst.bits, std::span<uint8_t>(msg, 16));
    msg[16] = static_cast<uint8_t>(p.dport >> 8);
    msg[17] = static_cast<uint8_t>(p.dport);
    msg[18] = static_cast<uint8_t>(p.type);
    msg[19] = purpose;
    return keyed_unit_draw(key_from_seed(seed_, 0), msg);
}

void SimNet::schedule(std::vector<uint8_t> packet, uint64_t due_ns) {
    {
        std::lock_guard<std::mutex> lk(mu_);
        inbound_.push({due_ns, next_seq_++, std::move(packet)});
    }
    cv_.notify_all();
}

void SimNet::send_frame(std::span<const uint8_t> frame) {
    SentProbe p;
    p.time_ns = clock_.now_ns();
    if (opts_.log_frames) p.frame.assign(frame.begin(), frame.end());

    std::span<const uint8_t> l3;
    if (frame.size() >= 14) {
        uint16_t ether = static_cast<uint16_t>(frame[12] << 8 | frame[13]);
        if (ether == 0x0800 || ether == 0x86dd) l3 = frame.subspan(14);
    }
    PacketView view;
    if (!l3.empty()) view = parse_reply(l3);
    if (view.protocol == 1 || view.protocol == 58) {
        p.parsed = true;
        p.type = ProbeType::icmp_echo;
        p.dport = 0;
    } else if (view.protocol == 6 && view.kind == ReplyKind::tcp) {
        p.parsed = true;
        p.type = ProbeType::tcp_syn;
        p.dport = view.dport;
    } else if (view.protocol == 17 &&
               (view.kind == ReplyKind::udp || view.kind == ReplyKind::dns)) {
        p.parsed = true;
        p.dport = view.dport;
        auto q = parse_dns_message(view.payload);
        p.type = q && !q->response && q->has_question ? ProbeType::dns : ProbeType::udp;
    }
    if (p.parsed) {
        p.family = view.family;
        p.dst = Address{view.family, view.dst};
    }

    {
        std::lock_guard<std::mutex> lk(mu_);
        log_.push_back(p);
    }
    if (!p.parsed) return;

    const ResponderRule* rule = match_rule(p);
    if (!rule || rule->behavior == ResponderRule::Behavior::silent) return;
    if (rule->loss > 0 && unit_draw(p, kDrawLoss) < rule->loss) return;

    Address responder = p.dst;
    Address scanner{view.family, view.src};
    std::vector<uint8_t> reply;
    switch (rule->behavior) {
    case ResponderRule::Behavior::echo_reply: {
        bool is_request = (view.protocol == 1 && view.icmp_type == 8) ||
                          (view.protocol == 58 && view.icmp_type == 128);
        if (!is_request) return;
        reply = packet_icmp_echo(responder, scanner, true, view.icmp_id, view.icmp_seq,
                                 view.payload);
        break;
    }
    case ResponderRule::Behavior::syn_ack:
    case ResponderRule::Behavior::rst: {
        if (view.kind != ReplyKind::tcp) return;
        bool rst = rule->behavior == ResponderRule::Behavior::rst;
        uint32_t seq = rst ? 0
                           : static_cast<uint32_t>(unit_draw(p, kDrawSeq) * 4294967296.0);
        uint8_t flags = rst ? (kTcpRst | kTcpAck) : (kTcpSyn | kTcpAck);
        reply = packet_tcp(responder, scanner, view.dport, view.sport, seq, view.tcp_seq + 1,
                           flags);
        break;
    }
    case ResponderRule::Behavior::udp_echo: {
        if (view.kind != ReplyKind::udp && view.kind != ReplyKind::dns) return;
        reply = packet_udp(responder, scanner, view.dport, view.sport, view.payload);
        break;
    }
    case ResponderRule::Behavior::dns_answer: {
        if (view.kind != ReplyKind::udp && view.kind != ReplyKind::dns) return;
        auto q = parse_dns_message(view.payload);
        if (!q || !q->has_question || q->response) return;
        auto resp = build_dns_response(q->qname, q->qtype, q->qclass, q->txid, rule->dns_rcode,
                                       rule->dns_answer_addr);
        reply = packet_udp(responder, scanner, view.dport, view.sport, resp);
        break;
    }
    case ResponderRule::Behavior::icmp_error:
        reply = packet_icmp_error(responder, scanner, rule->icmp_type, rule->icmp_code, l3);
        break;
    case ResponderRule::Behavior::silent: return;
    }

    double ms = rule->latency_lo_ms;
    if (rule->latency_hi_ms > rule->latency_lo_ms) {
        ms += unit_draw(p, kDrawLatency) * (rule->latency_hi_ms - rule->latency_lo_ms);
    }
    schedule(std::move(reply), p.time_ns + static_cast<uint64_t>(ms * 1e6));
}

std::optional<std::vector<uint8_t>> SimNet::pop_due_locked(uint64_t now) {
    if (inbound_.empty() || inbound_.top().due_ns > now) return std::nullopt;
    std::vector<uint8_t> bytes = std::move(const_cast<Delivery&>(inbound_.top()).packet);
    inbound_.pop();
    return bytes;
}

std::optional<std::vector<uint8_t>> SimNet::receive(uint64_t max_wait_ms) {
    std::unique_lock<std::mutex> lk(mu_);
    if (auto p = pop_due_locked(clock_.now_ns())) return p;
    if (max_wait_ms == 0) return std::nullopt;
    cv_.wait_for(lk, std::chrono::milliseconds(max_wait_ms));
    return pop_due_locked(clock_.now_ns());
}

bool SimNet::pending() {
    std::lock_guard<std::mutex> lk(mu_);
    return !inbound_.empty() && inbound_.top().due_ns <= clock_.now_ns();
}

uint64_t SimNet::send_count() const {
    std::lock_guard<std::mutex> lk(mu_);
    return log_.size();
}

uint64_t SimNet::inject_forgeries(uint64_t n, uint64_t seed, const ForgerySpec& spec) {
    auto key = key_from_seed(seed, 1);
    Family fam = spec.scanner.family;
    unsigned w = address_width(fam);
    uint64_t now = clock_.now_ns();
    for (uint64_t i = 0; i < n; i++) {
        uint8_t msg[9];
        for (int b = 0; b < 8; b++) msg[b] = static_cast<uint8_t>(i >> (8 * b));
        msg[8] = 1;
        u128 r1 = siphash24_128(key, msg);
        msg[8] = 2;
        u128 r2 = siphash24_128(key, msg);

        Address src{fam, r1 & low_mask(w)};
        if (src.bits == spec.scanner.bits) src.bits ^= 1;
        uint16_t dport = static_cast<uint16_t>(r2);
        uint16_t f16 = static_cast<uint16_t>(r2 >> 16);

        std::vector<uint8_t> pkt;
        switch (spec.type) {
        case ProbeType::icmp_echo:
            pkt = packet_icmp_echo(src, spec.scanner, true, f16,
                                   static_cast<uint16_t>(r2 >> 96), {});
            break;
        case ProbeType::tcp_syn:
            pkt = packet_tcp(src, spec.scanner, spec.service_port, dport,
                             static_cast<uint32_t>(r2 >> 64), static_cast<uint32_t>(r2 >> 32),
                             kTcpSyn | kTcpAck);
            break;
        case ProbeType::udp: {
            uint8_t body[4];
            for (int b = 0; b < 4; b++) body[b] = static_cast<uint8_t>(r2 >> (64 + 8 * b));
            pkt = packet_udp(src, spec.scanner, spec.service_port, dport, body);
            break;
        }
        case ProbeType::dns: {
            std::string qname;
            if (spec.correct_question) {
                qname = spec.qname;
            } else {
                qname = "f" + to_hex({msg, 8}) + ".invalid";
            }
            auto resp = build_dns_response(qname, spec.dns_qtype, kDnsClassIn, f16, 0,
                                           std::nullopt);
            pkt = packet_udp(src, spec.scanner, spec.service_port, dport, resp);
            break;
        }
        }
        schedule(std::move(pkt), now);
    }
    return n;
}

void SimNet::inject_packet(std::vector<uint8_t> bytes) {
    schedule(std::move(bytes), clock_.now_ns());
}

} // namespace hexmap
