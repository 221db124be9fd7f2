#include "hexmap/rate.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "hexmap/errors.hpp"

namespace hexmap {

uint64_t SystemClock::now_ns() {
    return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                     std::chrono::steady_clock::now().time_since_epoch())
                                     .count());
}

void SystemClock::sleep_until_ns(uint64_t deadline_ns) {
    uint64_t now = now_ns();
    if (deadline_ns > now)
        std::this_thread::sleep_for(std::chrono::nanoseconds(deadline_ns - now));
}

uint64_t bps_to_pps(uint64_t bits_per_sec, size_t frame_bytes) {
    uint64_t wire_bits = 8 * (static_cast<uint64_t>(frame_bytes) + 24);
    uint64_t pps = bits_per_sec / wire_bits;
    if (pps == 0) {
        throw ConfigError("bandwidth " + std::to_string(bits_per_sec) +
                          " bps is below one probe per second (" + std::to_string(wire_bits) +
                          " bits on the wire)");
    }
    return pps;
}

uint64_t effective_pps(const RatePolicy& policy, size_t frame_bytes) {
    switch (policy.mode) {
    case RatePolicy::Mode::unlimited: return 0;
    case RatePolicy::Mode::pps: return policy.target;
    case RatePolicy::Mode::bps: return bps_to_pps(policy.target, frame_bytes);
    }
    return 0;
}

namespace {
constexpr uint64_t kNsPerSec = 1'000'000'000;
}

TokenBucket::TokenBucket(uint64_t rate_pps, uint64_t batch, Clock& clock)
    : rate_(rate_pps),
      capacity_(std::max<uint64_t>(std::max<uint64_t>(batch, 1), rate_pps / 100)),
      clock_(clock),
      tokens_(capacity_),
      credit_ns_(0),
      last_ns_(clock.now_ns()) {}

void TokenBucket::refill_locked(uint64_t now) {
    if (now <= last_ns_) return;
    uint64_t elapsed = now - last_ns_;
    last_ns_ = now;
    if (tokens_ >= capacity_) {
        credit_ns_ = 0;
        return;
    }
    // Cap elapsed at what fills the bucket so the product below cannot
    // overflow even across long stalls.
    uint64_t fill_ns = ((capacity_ - tokens_) * kNsPerSec + rate_ - 1) / rate_ + 1;
    elapsed = std::min(elapsed, fill_ns);
    u128 credit = static_cast<u128>(elapsed) * rate_ + credit_ns_;
    uint64_t fresh = static_cast<uint64_t>(credit / kNsPerSec);
    credit_ns_ = static_cast<uint64_t>(credit % kNsPerSec);
    tokens_ = std::min(capacity_, tokens_ + fresh);
    if (tokens_ >= capacity_) credit_ns_ = 0;
}

TokenBucket::Grant TokenBucket::try_acquire(uint64_t n) {
    if (rate_ == 0) return {n, 0};
    std::lock_guard<std::mutex> lk(mu_);
    uint64_t now = clock_.now_ns();
    refill_locked(now);
    if (tokens_ > 0) {
        uint64_t take = std::min(tokens_, n);
        tokens_ -= take;
        return {take, 0};
    }
    uint64_t missing_ns = (kNsPerSec - credit_ns_ + rate_ - 1) / rate_;
    return {0, now + std::max<uint64_t>(missing_ns, 1)};
}

uint64_t TokenBucket::acquire(uint64_t n) {
    for (;;) {
        Grant g = try_acquire(n);
        if (g.granted > 0) return g.granted;
        clock_.sleep_until_ns(g.retry_at_ns);
    }
}

} // namespace hexmap
