#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "hexmap/engine.hpp"
#include "hexmap/rate.hpp"
#include "hexmap/validation.hpp"

namespace hexmap {

// Virtual time. sleep_until_ns advances the clock (never blocks a real
// thread for long): whoever needs the future most pulls everyone there.
class SimClock : public Clock {
public:
    explicit SimClock(uint64_t start_ns = 0) : now_(start_ns) {}

    uint64_t now_ns() override;
    void sleep_until_ns(uint64_t deadline_ns) override;

    // Invoked after every advance; the sim network uses this to wake its
    // receiver when queued deliveries come due.
    void set_on_advance(std::function<void()> fn);

private:
    std::mutex mu_;
    uint64_t now_;
    std::function<void()> on_advance_;
};

// One programmable responder population entry. First matching rule wins.
struct ResponderRule {
    enum class Behavior : uint8_t {
        echo_reply,
        syn_ack,
        rst,
        dns_answer,
        icmp_error,
        udp_echo,
        silent,
    };

    Family family = Family::v4;
    u128 prefix_bits = 0;
    unsigned prefix_len = 0;
    std::optional<uint16_t> port;    // absent = any
    std::optional<ProbeType> probe;  // absent = any

    Behavior behavior = Behavior::silent;
    uint8_t dns_rcode = 0;
    std::optional<Address> dns_answer_addr;
    uint8_t icmp_type = 0, icmp_code = 0;

    double latency_lo_ms = 0, latency_hi_ms = 0;
    double loss = 0.0;
};

// Text fixture format, one rule per line:
//   <cidr> <behavior>[(args)] [port=N] [probe=NAME] [latency=X[-Y]ms] [loss=P]
// Behaviors: echo_reply, syn_ack, rst, udp_echo, silent,
//            dns_answer(rcode[,answer-ip]), icmp_error(type,code).
std::vector<ResponderRule> parse_rules(const std::string& text, Family family);

// What inject_forgeries should counterfeit.
struct ForgerySpec {
    ProbeType type = ProbeType::icmp_echo;
    Address scanner{};          // forgeries are addressed here
    uint16_t service_port = 0;  // reply source port (TCP/UDP/DNS)
    uint16_t dns_qtype = kDnsTypeA;
    std::string qname;          // used when correct_question
    bool correct_question = false;
};

// In-process network: consumes probe frames, evaluates responder rules, and
// schedules replies on the shared simulated clock. Loss and latency draws
// are pure functions of (seed, destination, port, probe type), so the hit
// set is reproducible regardless of thread interleaving.
class SimNet : public Transport {
public:
    struct SentProbe {
        uint64_t time_ns = 0;
        std::vector<uint8_t> frame;
        bool parsed = false;
        Family family = Family::v4;
        Address dst{};
        uint16_t dport = 0;
        ProbeType type = ProbeType::icmp_echo;
    };

    struct Options {
        bool log_frames = true; // keep raw frame bytes in the send log
    };

    SimNet(SimClock& clock, std::vector<ResponderRule> rules, uint64_t seed);
    SimNet(SimClock& clock, std::vector<ResponderRule> rules, uint64_t seed, Options opts);

    void send_frame(std::span<const uint8_t> frame) override;
    std::optional<std::vector<uint8_t>> receive(uint64_t max_wait_ms) override;
    bool pending() override;

    // Deliver n well-formed replies of the given shape whose validation
    // fields are drawn pseudorandomly from `seed`. Returns n.
    uint64_t inject_forgeries(uint64_t n, uint64_t seed, const ForgerySpec& spec);

    // Deliver arbitrary bytes as an inbound packet (duplicate genuine
    // replies, truncated noise).
    void inject_packet(std::vector<uint8_t> bytes);

    // Stable after the scan has finished; not synchronized against senders.
    const std::vector<SentProbe>& send_log() const { return log_; }
    uint64_t send_count() const;

private:
    struct Delivery {
        uint64_t due_ns;
        uint64_t seq; // insertion order tie-break
        std::vector<uint8_t> packet;
    };
    struct DeliveryLater {
        bool operator()(const Delivery& a, const Delivery& b) const {
            return a.due_ns != b.due_ns ? a.due_ns > b.due_ns : a.seq > b.seq;
        }
    };

    const ResponderRule* match_rule(const SentProbe& p) const;
    double unit_draw(const SentProbe& p, uint8_t purpose) const;
    void schedule(std::vector<uint8_t> packet, uint64_t due_ns);
    std::optional<std::vector<uint8_t>> pop_due_locked(uint64_t now);

    SimClock& clock_;
    std::vector<ResponderRule> rules_;
    uint64_t seed_;
    Options opts_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::priority_queue<Delivery, std::vector<Delivery>, DeliveryLater> inbound_;
    uint64_t next_seq_ = 0;
    std::vector<SentProbe> log_;
};

} // namespace hexmap
