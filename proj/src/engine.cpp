#include "hexmap/engine.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "hexmap/errors.hpp"
#include "hexmap/hash.hpp"

namespace hexmap {

mpz_class effective_space(const TargetSpec& spec, const PrefixFilter& filter) {
    mpz_class excluded = filter.count_excluded(spec);
    return space_size(spec) - excluded * static_cast<unsigned long>(spec.ports.size());
}

Progress progress_report(const ScanStats& stats, const mpz_class& effective_probes,
                         uint64_t now_ns) {
    Progress p;
    double eff = mpz_get_d(effective_probes.get_mpz_t());
    p.percent = eff > 0 ? 100.0 * static_cast<double>(stats.sent) / eff : 100.0;
    double elapsed = now_ns > stats.start_ns ? (now_ns - stats.start_ns) / 1e9 : 0.0;
    if (elapsed > 0 && stats.sent > 0) {
        p.live_pps = static_cast<double>(stats.sent) / elapsed;
        double remaining = std::max(0.0, eff - static_cast<double>(stats.sent));
        p.eta_secs = remaining / p.live_pps;
    }
    return p;
}

namespace {

u128 mpz_low_u128(const mpz_class& z) {
    uint64_t words[2] = {0, 0};
    size_t count = 0;
    mpz_export(words, &count, -1, 8, 0, 0, z.get_mpz_t());
    return u128_from(words[1], words[0]);
}

struct TupleKey {
    u128 addr;
    uint16_t port;
    bool operator==(const TupleKey&) const = default;
};

struct TupleKeyHash {
    size_t operator()(const TupleKey& k) const {
        uint64_t s = u128_lo(k.addr);
        uint64_t h = splitmix64(s);
        s = u128_hi(k.addr) ^ k.port;
        return h ^ splitmix64(s);
    }
};

uint64_t pick_batch(const RatePolicy& rate, uint64_t pps) {
    if (rate.batch > 1) return rate.batch;
    if (pps == 0) return 64;
    return std::clamp<uint64_t>(pps / 100, 1, 128);
}

} // namespace

void run_scan(const ScanConfig& cfg, const PrefixFilter& filter, Transport& transport,
              OutputSink& sink, Clock& clock, ScanStats& stats) {
    stats = ScanStats{};
    stats.start_ns = clock.now_ns();

    const TargetSpec& spec = cfg.spec;
    if (spec.ports.size() == 0) throw ConfigError("scan has an empty port set");
    const unsigned long port_count = spec.ports.size();
    const unsigned long id_count = std::max<uint64_t>(spec.identifier.multiplicity(), 1);

    mpz_class n = space_size(spec);
    CycleParams params = CycleParams::create(n, cfg.seed);

    ProbeContext pctx{ScanSecret::from_seed(cfg.seed), cfg.probe, cfg.frame_template,
                      cfg.probe_opts};

    VerifyContext vctx;
    vctx.secret = pctx.secret;
    vctx.probe_type = cfg.probe;
    vctx.family = spec.family;
    vctx.source = cfg.frame_template.src_addr;
    vctx.ports = spec.ports;
    vctx.dns_qname = cfg.probe_opts.dns_qname;
    vctx.dns_qtype = resolved_dns_qtype(cfg.probe_opts, spec.family);

    uint64_t pps = 0;
    if (cfg.rate.mode != RatePolicy::Mode::unlimited) {
        // Wire size of a representative probe, padded to the Ethernet
        // minimum, prices bandwidth targets.
        Address sample_dst = compose_address(spec, 0, identifier_value(spec, 0, 0));
        size_t wire = build_probe_frame(pctx, sample_dst, spec.ports.ports[0]).size();
        pps = effective_pps(cfg.rate, std::max<size_t>(wire, 60));
    }
    uint64_t batch = pick_batch(cfg.rate, pps);
    std::optional<TokenBucket> bucket;
    if (pps > 0) bucket.emplace(pps, batch, clock);

    std::atomic<uint64_t> sent{0}, recv{0}, hits{0}, blocked{0}, send_errors{0};
    std::atomic<bool> stop{false};
    std::atomic<bool> recv_stop{false};
    std::mutex sink_mu;
    std::mutex err_mu;
    std::exception_ptr first_error;

    auto record_failure = [&]() {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
        stop.store(true, std::memory_order_relaxed);
    };

    const uint64_t runtime_deadline =
        cfg.max_runtime_secs
            ? stats.start_ns + static_cast<uint64_t>(*cfg.max_runtime_secs * 1e9)
            : UINT64_MAX;

    const unsigned threads = std::max(1u, cfg.sender_threads);

    auto sender = [&](unsigned t) {
        try {
            Shard sub{cfg.shard.shard_index + cfg.shard.shard_count * t,
                      cfg.shard.shard_count * threads};
            CycleState cycle(params, sub);
            uint64_t held = 0;
            mpz_class q;
            while (!stop.load(std::memory_order_relaxed)) {
                if (runtime_deadline != UINT64_MAX && clock.now_ns() >= runtime_deadline) break;
                auto idx = cycle.next();
                if (!idx) break;
                // Mixed radix over (address, identifier, port), port fastest,
                // so multi-port order is randomized jointly with addresses.
                unsigned long port_i = mpz_tdiv_q_ui(q.get_mpz_t(), idx->get_mpz_t(), port_count);
                unsigned long id_i = mpz_tdiv_q_ui(q.get_mpz_t(), q.get_mpz_t(), id_count);
                u128 addr_idx = mpz_low_u128(q);
                Address dst = compose_address(spec, addr_idx,
                                              identifier_value(spec, id_i, addr_idx));
                if (!filter.is_allowed(dst)) {
                    blocked.fetch_add(1, std::memory_order_relaxed);
                    continue;
                }
                uint16_t port = spec.ports.ports[port_i];
                auto frame = build_probe_frame(pctx, dst, port);
                if (bucket && held == 0) held = bucket->acquire(batch);
                if (held > 0) held--;
                if (cfg.dry_run) {
                    ReplyRecord r;
                    r.saddr = cfg.frame_template.src_addr;
                    r.daddr = dst;
                    r.dport = port;
                    r.outcome = "sent";
                    r.probe_type = cfg.probe;
                    r.orig_dest = dst;
                    r.timestamp_ms = (clock.now_ns() - stats.start_ns) / 1'000'000;
                    r.frame = std::move(frame);
                    std::lock_guard<std::mutex> lk(sink_mu);
                    sink.write(r);
                } else {
                    try {
                        transport.send_frame(frame);
                    } catch (...) {
                        send_errors.fetch_add(1, std::memory_order_relaxed);
                        throw;
                    }
                }
                sent.fetch_add(1, std::memory_order_relaxed);
            }
        } catch (...) {
            record_failure();
        }
    };

    auto receiver = [&]() {
        try {
            std::unordered_set<TupleKey, TupleKeyHash> seen;
            for (;;) {
                bool stopping = recv_stop.load(std::memory_order_acquire);
                auto pkt = transport.receive(stopping ? 0 : 1);
                if (!pkt) {
                    if (stopping && !transport.pending()) break;
                    continue;
                }
                recv.fetch_add(1, std::memory_order_relaxed);
                PacketView view = parse_reply(*pkt);
                Verdict v = verify(vctx, view);
                uint64_t ts_ms = (clock.now_ns() - stats.start_ns) / 1'000'000;

                ReplyRecord r;
                r.saddr = v.accepted ? v.responder : Address{vctx.family, view.src};
                r.daddr = Address{vctx.family, view.dst};
                r.sport = view.sport;
                r.dport = view.dport;
                r.probe_type = cfg.probe;
                r.orig_dest = v.accepted ? v.probe_dst : Address{};
                r.payload = view.payload;
                r.timestamp_ms = ts_ms;

                if (v.accepted) {
                    bool duplicate =
                        cfg.dedup && !seen.insert({v.probe_dst.bits, v.probe_port}).second;
                    if (!duplicate) {
                        r.outcome = v.outcome;
                        hits.fetch_add(1, std::memory_order_relaxed);
                        std::lock_guard<std::mutex> lk(sink_mu);
                        sink.write(r);
                        if (cfg.max_results && hits.load() >= *cfg.max_results)
                            stop.store(true, std::memory_order_relaxed);
                    } else if (cfg.output_all) {
                        r.outcome = reject_reason_name(RejectReason::late_duplicate);
                        std::lock_guard<std::mutex> lk(sink_mu);
                        sink.write(r);
                    }
                } else if (cfg.output_all) {
                    r.outcome = std::string("reject_") + reject_reason_name(v.reason);
                    std::lock_guard<std::mutex> lk(sink_mu);
                    sink.write(r);
                }
            }
        } catch (...) {
            record_failure();
        }
    };

    std::thread rx;
    if (!cfg.dry_run) rx = std::thread(receiver);
    std::vector<std::thread> tx;
    tx.reserve(threads);
    for (unsigned t = 0; t < threads; t++) tx.emplace_back(sender, t);
    for (auto& th : tx) th.join();

    bool aborted;
    {
        std::lock_guard<std::mutex> lk(err_mu);
        aborted = first_error != nullptr;
    }

    if (rx.joinable()) {
        if (!aborted) {
            uint64_t cool_end =
                clock.now_ns() + static_cast<uint64_t>(cfg.cooldown_secs * 1e9);
            clock.sleep_until_ns(cool_end);
        }
        recv_stop.store(true, std::memory_order_release);
        rx.join();
    }
    {
        std::lock_guard<std::mutex> lk(err_mu);
        aborted = first_error != nullptr;
    }

    stats.sent = sent.load();
    stats.recv = recv.load();
    stats.hits = hits.load();
    stats.blocked_skips = blocked.load();
    stats.send_errors = send_errors.load();
    stats.end_ns = clock.now_ns();

    try {
        sink.flush();
    } catch (...) {
        if (!aborted) throw;
    }
    if (aborted) std::rethrow_exception(first_error);
}

} // namespace hexmap
