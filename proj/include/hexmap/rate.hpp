#pragma once

#include <cstdint>
#include <mutex>
#include <string>

#include "hexmap/bits.hpp"

namespace hexmap {

// Time source for anything rate- or timeout-sensitive. Tests inject a
// simulated clock; production uses the steady clock.
class Clock {
public:
    virtual ~Clock() = default;
    virtual uint64_t now_ns() = 0;
    // May return early (wakeups); callers re-check the time.
    virtual void sleep_until_ns(uint64_t deadline_ns) = 0;

    void sleep_ns(uint64_t delta_ns) { sleep_until_ns(now_ns() + delta_ns); }
};

class SystemClock : public Clock {
public:
    uint64_t now_ns() override;
    void sleep_until_ns(uint64_t deadline_ns) override;
};

struct RatePolicy {
    enum class Mode : uint8_t { unlimited, pps, bps };
    Mode mode = Mode::unlimited;
    uint64_t target = 0; // packets/sec or bits/sec depending on mode
    uint64_t batch = 1;  // probes requested per token acquisition
};

// floor(bps / (8 x (frame_bytes + 24))); the 24 covers preamble, FCS and
// inter-frame gap. Throws ConfigError when the result is zero.
uint64_t bps_to_pps(uint64_t bits_per_sec, size_t frame_bytes);

// Resolve a policy to packets/sec given the wire size of one probe.
// Returns 0 for unlimited.
uint64_t effective_pps(const RatePolicy& policy, size_t frame_bytes);

// Shared token bucket. Capacity is one refill-tick deep (10 ms of traffic,
// floor batch) so bursts stay bounded without starving batched senders.
class TokenBucket {
public:
    struct Grant {
        uint64_t granted;
        uint64_t retry_at_ns; // meaningful when granted == 0
    };

    // rate_pps == 0 means unlimited.
    TokenBucket(uint64_t rate_pps, uint64_t batch, Clock& clock);

    Grant try_acquire(uint64_t n);

    // Convenience loop: sleep on the clock until at least one token arrives.
    uint64_t acquire(uint64_t n);

    uint64_t capacity() const { return capacity_; }

private:
    void refill_locked(uint64_t now);

    uint64_t rate_;
    uint64_t capacity_;
    Clock& clock_;
    std::mutex mu_;
    uint64_t tokens_;
    uint64_t credit_ns_; // fractional refill carry, in token-fractions of 1s
    uint64_t last_ns_;
};

} // namespace hexmap
