#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <gmpxx.h>

#include "hexmap/filters.hpp"
#include "hexmap/output.hpp"
#include "hexmap/permutation.hpp"
#include "hexmap/probes.hpp"
#include "hexmap/rate.hpp"

namespace hexmap {

// Link between the engine and a packet path. Senders push L2 frames;
// the receiver pulls L3 packets. receive() must never block senders.
class Transport {
public:
    virtual ~Transport() = default;

    virtual void send_frame(std::span<const uint8_t> frame) = 0;

    // Next inbound packet, waiting up to max_wait_ms of real time.
    virtual std::optional<std::vector<uint8_t>> receive(uint64_t max_wait_ms) = 0;

    // True when packets are already due for delivery (used to drain the
    // queue at shutdown; the raw path has no such knowledge).
    virtual bool pending() { return false; }
};

struct ScanConfig {
    TargetSpec spec;
    ProbeType probe = ProbeType::icmp_echo;
    ProbeOptions probe_opts;
    FrameTemplate frame_template;
    RatePolicy rate;
    uint64_t seed = 0;
    Shard shard{0, 1};
    unsigned sender_threads = 1;
    double cooldown_secs = 8.0;
    bool dry_run = false;
    bool dedup = false;
    bool output_all = false;
    std::optional<uint64_t> max_results;
    std::optional<double> max_runtime_secs;
};

struct ScanStats {
    uint64_t sent = 0;
    uint64_t recv = 0;
    uint64_t hits = 0;
    uint64_t blocked_skips = 0;
    uint64_t send_errors = 0;
    uint64_t start_ns = 0;
    uint64_t end_ns = 0;
};

// Scan universe size minus filtered addresses, in probes (tuples).
mpz_class effective_space(const TargetSpec& spec, const PrefixFilter& filter);

struct Progress {
    double percent = 0;
    std::optional<double> eta_secs; // absent until a rate is observable
    double live_pps = 0;
};

Progress progress_report(const ScanStats& stats, const mpz_class& effective_probes,
                         uint64_t now_ns);

// Runs one scan to completion: N sender threads walk disjoint shards of the
// permuted (address x identifier x port) space; one receiver validates and
// writes records until the cooldown after the last send expires. `stats` is
// kept current so callers see partial counts if a RuntimeFailure aborts the
// scan mid-flight.
void run_scan(const ScanConfig& cfg, const PrefixFilter& filter, Transport& transport,
              OutputSink& sink, Clock& clock, ScanStats& stats);

} // namespace hexmap
