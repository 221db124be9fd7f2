#include "hexmap/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "hexmap/errors.hpp"
#include "hexmap/transport_raw.hpp"

namespace hexmap::cli {

namespace {

// Sink for --dry-run: the engine never touches the transport, but run_scan
// wants one.
class NullTransport : public Transport {
public:
    void send_frame(std::span<const uint8_t>) override {}
    std::optional<std::vector<uint8_t>> receive(uint64_t) override { return std::nullopt; }
};

std::string group_digits(std::string s) {
    for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3)
        s.insert(static_cast<size_t>(i), ",");
    return s;
}

std::string group_digits(uint64_t v) { return group_digits(std::to_string(v)); }
std::string group_digits(const mpz_class& z) { return group_digits(z.get_str()); }

uint64_t parse_bandwidth(const std::string& text) {
    std::string t = text;
    double mult = 1;
    if (!t.empty()) {
        switch (std::toupper(static_cast<unsigned char>(t.back()))) {
        case 'K': mult = 1e3; t.pop_back(); break;
        case 'M': mult = 1e6; t.pop_back(); break;
        case 'G': mult = 1e9; t.pop_back(); break;
        default: break;
        }
    }
    try {
        size_t used = 0;
        double v = std::stod(t, &used);
        if (used != t.size() || v <= 0) throw std::invalid_argument(t);
        return static_cast<uint64_t>(std::llround(v * mult));
    } catch (const std::exception&) {
        throw ConfigError("bad bandwidth \"" + text + "\" (use bits/s, e.g. 10M, 2.5G)");
    }
}

Shard parse_shard(const std::string& text) {
    size_t slash = text.find('/');
    ConfigError bad("bad shard \"" + text + "\" (use i/N with 0 <= i < N)");
    if (slash == std::string::npos) throw bad;
    uint32_t i = 0, n = 0;
    auto r1 = std::from_chars(text.data(), text.data() + slash, i);
    auto r2 = std::from_chars(text.data() + slash + 1, text.data() + text.size(), n);
    if (r1.ec != std::errc() || r1.ptr != text.data() + slash || r2.ec != std::errc() ||
        r2.ptr != text.data() + text.size() || n == 0 || i >= n)
        throw bad;
    return Shard{i, n};
}

MacAddr parse_mac(const std::string& text) {
    MacAddr mac{};
    unsigned b[6];
    char extra;
    if (std::sscanf(text.c_str(), "%x:%x:%x:%x:%x:%x%c", &b[0], &b[1], &b[2], &b[3], &b[4],
                    &b[5], &extra) != 6 ||
        std::any_of(std::begin(b), std::end(b), [](unsigned v) { return v > 255; }))
        throw ConfigError("bad MAC address \"" + text + "\"");
    for (int i = 0; i < 6; i++) mac[static_cast<size_t>(i)] = static_cast<uint8_t>(b[i]);
    return mac;
}

uint16_t parse_dns_type(const std::string& text) {
    std::string u = text;
    std::transform(u.begin(), u.end(), u.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    if (u == "A") return kDnsTypeA;
    if (u == "NS") return kDnsTypeNs;
    if (u == "CNAME") return kDnsTypeCname;
    if (u == "TXT") return kDnsTypeTxt;
    if (u == "AAAA") return kDnsTypeAaaa;
    if (u == "ANY") return 255;
    unsigned v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size() || v == 0 || v > 65535)
        throw ConfigError("bad DNS type \"" + text + "\"");
    return static_cast<uint16_t>(v);
}

uint16_t parse_dns_class(const std::string& text) {
    std::string u = text;
    std::transform(u.begin(), u.end(), u.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    if (u == "IN") return kDnsClassIn;
    if (u == "CH" || u == "CHAOS") return kDnsClassChaos;
    if (u == "ANY") return 255;
    unsigned v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size() || v == 0 || v > 65535)
        throw ConfigError("bad DNS class \"" + text + "\"");
    return static_cast<uint16_t>(v);
}

u128 parse_u128_hex(const std::string& text) {
    std::string t = text;
    if (t.rfind("0x", 0) == 0 || t.rfind("0X", 0) == 0) t.erase(0, 2);
    if (t.empty() || t.size() > 32 ||
        !std::all_of(t.begin(), t.end(),
                     [](unsigned char c) { return std::isxdigit(c) != 0; }))
        throw ConfigError("bad hex value \"" + text + "\"");
    u128 v = 0;
    for (char c : t) {
        unsigned d = static_cast<unsigned>(
            std::isdigit(static_cast<unsigned char>(c))
                ? c - '0'
                : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10);
        v = (v << 4) | d;
    }
    return v;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_fields(const std::string& expr) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(expr);
    while (std::getline(in, item, ',')) {
        size_t a = item.find_first_not_of(" \t");
        size_t b = item.find_last_not_of(" \t");
        if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
    }
    return out;
}

// "fixed[:HEX]", "pattern:HEX[,HEX...]", "random[:SEED]"
void apply_identifier(const std::string& expr, uint64_t scan_seed, TargetSpec& spec,
                      const std::string& target_text) {
    std::string mode = expr, arg;
    if (size_t colon = expr.find(':'); colon != std::string::npos) {
        mode = expr.substr(0, colon);
        arg = expr.substr(colon + 1);
    }
    unsigned idw = spec.identifier_width();
    auto check_fit = [&](u128 v) {
        if (idw < 128 && (v & ~low_mask(idw)) != 0)
            throw ConfigError("identifier value does not fit in the " + std::to_string(idw) +
                              "-bit identifier of target \"" + target_text + "\"");
    };
    if (mode == "fixed") {
        spec.identifier.mode = IdentifierSpec::Mode::fixed;
        if (!arg.empty()) {
            spec.identifier.value = parse_u128_hex(arg);
            check_fit(spec.identifier.value);
        }
    } else if (mode == "pattern") {
        if (arg.empty()) throw ConfigError("pattern identifier needs values: pattern:HEX[,HEX...]");
        spec.identifier.mode = IdentifierSpec::Mode::pattern;
        spec.identifier.pattern.clear();
        std::istringstream in(arg);
        std::string item;
        while (std::getline(in, item, ',')) {
            u128 v = parse_u128_hex(item);
            check_fit(v);
            if (std::find(spec.identifier.pattern.begin(), spec.identifier.pattern.end(), v) !=
                spec.identifier.pattern.end())
                throw ConfigError("duplicate pattern identifier \"" + item + "\"");
            spec.identifier.pattern.push_back(v);
        }
    } else if (mode == "random") {
        spec.identifier.mode = IdentifierSpec::Mode::random;
        spec.identifier.rng_seed = scan_seed;
        if (!arg.empty()) {
            uint64_t s = 0;
            auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), s);
            if (ec != std::errc() || p != arg.data() + arg.size())
                throw ConfigError("bad identifier seed \"" + arg + "\"");
            spec.identifier.rng_seed = s;
        }
    } else {
        throw ConfigError("bad --identifier \"" + expr +
                          "\" (fixed[:HEX] | pattern:HEX,... | random[:SEED])");
    }
}

std::string format_duration(double secs) {
    char buf[64];
    if (!std::isfinite(secs) || secs >= 1e15) return "longer than you have";
    if (secs >= 100) return group_digits(static_cast<uint64_t>(std::llround(secs))) + " s";
    std::snprintf(buf, sizeof(buf), "%.1f s", secs);
    return buf;
}

void write_man_page(std::ostream& out, CLI::App& app) {
    out << ".TH HEXMAP 1 \"\" \"hexmap\" \"User Commands\"\n"
        << ".SH NAME\n"
        << "hexmap \\- fast stateless IPv4/IPv6 network prober\n"
        << ".SH SYNOPSIS\n"
        << ".B hexmap\n"
        << "[\\fIOPTIONS\\fR] \\fITARGET\\fR...\n"
        << ".SH DESCRIPTION\n"
        << "hexmap probes address ranges with ICMP echo, TCP SYN, UDP, or DNS query\n"
        << "packets, randomizing probe order over the whole (address, port) space and\n"
        << "validating replies statelessly from the packets alone. Targets are\n"
        << "ADDR, ADDR/PLEN, or ADDR/PLEN-RLO; bits between PLEN and RLO are\n"
        << "enumerated in a random order, bits below RLO form the identifier.\n"
        << ".SH OPTIONS\n";
    for (const CLI::Option* opt : app.get_options()) {
        std::string name = opt->get_positional() ? opt->get_name(true) : opt->get_name(false, true);
        out << ".TP\n\\fB" << name << "\\fR";
        if (!opt->get_positional() && !opt->get_type_name().empty())
            out << " \\fI" << opt->get_type_name() << "\\fR";
        out << "\n" << opt->get_description() << "\n";
    }
    out << ".SH EXIT STATUS\n"
        << ".TP\n0\nScan completed.\n"
        << ".TP\n1\nConfiguration error; nothing was sent.\n"
        << ".TP\n2\nRuntime failure; partial results were flushed.\n"
        << ".SH ENVIRONMENT\n"
        << ".TP\nHEXMAP_BLOCKLIST\nDefault blocklist path when -b is not given.\n"
        << ".SH EXAMPLES\n"
        << ".TP\nhexmap -6 2001:db8::/32-64 -M icmp_echo --dry-run -o -\n"
        << "Build the frames an ICMPv6 scan would send and print them.\n"
        << ".TP\nhexmap -4 198.51.100.0/24 -p 80,443 -M tcp_syn -i eth0 -R 10000\n"
        << "SYN-scan two ports across a /24 at 10k packets per second.\n";
}

struct CliOptions {
    std::vector<std::string> targets;
    bool v4 = false, v6 = false;
    std::string ports_expr;
    std::string module = "icmp_echo";
    std::string output_path = "-";
    std::string format_name;
    std::string fields_expr;
    bool output_all = false;
    uint64_t rate_pps = 0;
    std::string bandwidth;
    uint64_t seed = 0;
    std::string shard_expr = "0/1";
    unsigned sender_threads = 1;
    std::string blocklist_path;
    std::string allowlist_path;
    std::string iface;
    bool dry_run = false;
    double cooldown_secs = 8.0;
    uint64_t max_results = 0;
    double max_runtime = 0;
    std::string identifier_expr;
    std::string dns_qname = "example.com";
    std::string dns_qtype = "";
    std::string dns_qclass = "IN";
    std::string udp_payload_hex;
    unsigned ttl = 64;
    std::string source_ip;
    std::string source_mac;
    std::string gateway_mac;
    bool no_dedup = false;
    bool quiet = false;
    int verbose = 0;
    bool write_man = false;
};

} // namespace

int run(const std::vector<std::string>& args, const RunHooks& hooks) {
    std::ostream& out = hooks.out ? *hooks.out : std::cout;
    std::ostream& diag = hooks.err ? *hooks.err : std::cerr;

    CLI::App app{"hexmap: fast stateless IPv4/IPv6 network prober"};
    app.name("hexmap");
    CliOptions o;

    app.add_option("targets", o.targets,
                   "Target expressions: ADDR, ADDR/PLEN, or ADDR/PLEN-RLO");
    app.add_flag("-4,--ipv4", o.v4, "Scan IPv4 space (default)");
    app.add_flag("-6,--ipv6", o.v6, "Scan IPv6 space");
    app.add_option("-p,--ports", o.ports_expr,
                   "Ports to probe, e.g. 80,443,8000-8100 (TCP/UDP/DNS modules)");
    app.add_option("-M,--probe-module", o.module,
                   "Probe module: icmp_echo, tcp_syn, udp, dns")
        ->capture_default_str();
    app.add_option("-o,--output", o.output_path, "Results path; - for stdout")
        ->capture_default_str();
    app.add_option("-O,--output-format", o.format_name,
                   "Output format: txt, csv, jsonl (default: by -o extension, else txt)");
    app.add_option("--output-fields", o.fields_expr,
                   "Comma-separated fields to emit (see man page for the registry)");
    app.add_flag("--output-all", o.output_all,
                 "Also emit rejected and duplicate replies, tagged by reason");
    app.add_option("-R,--rate", o.rate_pps, "Send rate in packets per second");
    app.add_option("-B,--bandwidth", o.bandwidth,
                   "Send rate in bits per second (K/M/G suffixes); overrides --rate");
    auto* seed_opt = app.add_option("--seed", o.seed,
                                    "Permutation/validation seed (default: random, echoed)");
    app.add_option("--shard", o.shard_expr,
                   "This instance's shard as i/N (disjoint cover of the scan)")
        ->capture_default_str();
    app.add_option("-T,--sender-threads", o.sender_threads, "Sender thread count")
        ->capture_default_str();
    app.add_option("-b,--blocklist", o.blocklist_path,
                   "CIDR blocklist file; never probe matching addresses")
        ->envname("HEXMAP_BLOCKLIST");
    app.add_option("-w,--allowlist", o.allowlist_path,
                   "CIDR allowlist file; probe only matching addresses");
    app.add_option("-i,--iface", o.iface, "Network interface for the raw transport");
    app.add_flag("--dry-run", o.dry_run, "Build frames and write them to the sink; send nothing");
    app.add_option("--cooldown-secs", o.cooldown_secs,
                   "How long to keep receiving after the last probe")
        ->capture_default_str();
    app.add_option("--max-results", o.max_results, "Stop sending after this many hits");
    app.add_option("--max-runtime", o.max_runtime, "Stop sending after this many seconds");
    app.add_option("--identifier", o.identifier_expr,
                   "Identifier bits policy: fixed[:HEX], pattern:HEX[,HEX...], random[:SEED]");
    app.add_option("--dns-qname", o.dns_qname, "DNS question name")->capture_default_str();
    app.add_option("--dns-qtype", o.dns_qtype,
                   "DNS question type (name or number; default A for -4, AAAA for -6)");
    app.add_option("--dns-qclass", o.dns_qclass, "DNS question class")->capture_default_str();
    app.add_option("--udp-payload-hex", o.udp_payload_hex, "UDP probe payload as hex");
    app.add_option("--ttl", o.ttl, "IP TTL / hop limit")->capture_default_str();
    app.add_option("--source-ip", o.source_ip,
                   "Source address (default 192.0.2.1 / 2001:db8::1)");
    app.add_option("--source-mac", o.source_mac, "Source MAC (default 02:00:00:00:00:01)");
    app.add_option("--gateway-mac", o.gateway_mac, "Gateway MAC (default 02:00:00:00:00:02)");
    app.add_flag("--no-dedup", o.no_dedup, "Report repeat answers from the same target");
    app.add_flag("-q,--quiet", o.quiet, "Suppress the config echo and summary");
    app.add_flag("-v,--verbose", o.verbose, "More diagnostics (repeatable)");
    app.add_flag("--write-man", o.write_man, "Write a man page to stdout and exit");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(std::move(rev));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        diag << "hexmap: error: " << e.what() << "\n";
        diag << "Run hexmap --help for usage.\n";
        return 1;
    }

    if (o.write_man) {
        write_man_page(out, app);
        return 0;
    }

    ScanStats total;
    uint64_t run_started = 0;
    Clock* clock = nullptr;
    SystemClock system_clock;

    auto summarize = [&](bool failed) {
        if (o.quiet) return;
        double secs = clock ? (clock->now_ns() - run_started) / 1e9 : 0.0;
        diag << "hexmap: " << (failed ? "aborted: " : "done: ") << "sent "
             << group_digits(total.sent) << " (blocked " << group_digits(total.blocked_skips)
             << ", send errors " << group_digits(total.send_errors) << "), recv "
             << group_digits(total.recv) << ", hits " << group_digits(total.hits) << ", "
             << format_duration(secs) << "\n";
    };

    try {
        if (o.targets.empty()) {
            diag << "hexmap: error: no target given\n\n" << app.help();
            return 1;
        }
        if (o.v4 && o.v6) throw ConfigError("give exactly one of -4 and -6");
        Family family = o.v6 ? Family::v6 : Family::v4;

        ProbeType probe = parse_probe_type(o.module);
        PortSet ports;
        if (probe == ProbeType::icmp_echo) {
            if (!o.ports_expr.empty())
                throw ConfigError("icmp_echo probes take no -p/--ports");
            ports = PortSet::icmp_sentinel();
        } else {
            if (o.ports_expr.empty())
                throw ConfigError(std::string(probe_type_name(probe)) +
                                  " probes need -p/--ports");
            ports = parse_ports(o.ports_expr);
        }

        if (o.sender_threads < 1) throw ConfigError("--sender-threads must be >= 1");
        if (o.cooldown_secs < 0) throw ConfigError("--cooldown-secs must be >= 0");
        if (o.ttl < 1 || o.ttl > 255) throw ConfigError("--ttl must be in 1..255");
        if (app.count("--max-runtime") && o.max_runtime <= 0)
            throw ConfigError("--max-runtime must be > 0");

        uint64_t seed = o.seed;
        if (seed_opt->count() == 0) {
            std::random_device rd;
            seed = (static_cast<uint64_t>(rd()) << 32) ^ rd();
        }

        std::vector<TargetSpec> specs;
        for (const std::string& expr : o.targets) {
            TargetSpec spec = parse_target(expr, family);
            spec.ports = ports;
            if (!o.identifier_expr.empty())
                apply_identifier(o.identifier_expr, seed, spec, expr);
            specs.push_back(std::move(spec));
        }

        std::optional<std::string> blocklist_text, allowlist_text;
        if (!o.blocklist_path.empty()) blocklist_text = read_file(o.blocklist_path);
        if (!o.allowlist_path.empty()) allowlist_text = read_file(o.allowlist_path);
        PrefixFilter filter = build_filter(family, blocklist_text, o.blocklist_path,
                                           allowlist_text, o.allowlist_path);

        FrameTemplate tmpl;
        tmpl.ttl = static_cast<uint8_t>(o.ttl);
        tmpl.src_addr = parse_address(
            o.source_ip.empty() ? (family == Family::v4 ? "192.0.2.1" : "2001:db8::1")
                                : o.source_ip,
            family);
        if (!o.source_mac.empty()) tmpl.src_mac = parse_mac(o.source_mac);
        if (!o.gateway_mac.empty()) tmpl.dst_mac = parse_mac(o.gateway_mac);

        ProbeOptions popts;
        popts.dns_qname = o.dns_qname;
        if (!o.dns_qtype.empty()) popts.dns_qtype = parse_dns_type(o.dns_qtype);
        popts.dns_qclass = parse_dns_class(o.dns_qclass);
        if (!o.udp_payload_hex.empty()) popts.udp_payload = from_hex(o.udp_payload_hex);

        RatePolicy rate;
        if (!o.bandwidth.empty()) {
            rate.mode = RatePolicy::Mode::bps;
            rate.target = parse_bandwidth(o.bandwidth);
        } else if (o.rate_pps > 0) {
            rate.mode = RatePolicy::Mode::pps;
            rate.target = o.rate_pps;
        }

        Shard shard = parse_shard(o.shard_expr);

        OutputFormat format = OutputFormat::txt;
        if (!o.format_name.empty()) {
            format = parse_output_format(o.format_name);
        } else if (o.output_path.size() > 4 &&
                   o.output_path.rfind(".csv") == o.output_path.size() - 4) {
            format = OutputFormat::csv;
        } else if (o.output_path.size() > 6 &&
                   o.output_path.rfind(".jsonl") == o.output_path.size() - 6) {
            format = OutputFormat::jsonl;
        }
        std::vector<std::string> fields = split_fields(o.fields_expr);
        if (fields.empty() && o.dry_run) fields = {"frame"};

        std::ofstream file_out;
        std::ostream* sink_stream = &out;
        if (o.output_path != "-") {
            file_out.open(o.output_path, std::ios::binary | std::ios::trunc);
            if (!file_out) throw ConfigError("cannot write \"" + o.output_path + "\"");
            sink_stream = &file_out;
        }
        OutputSink sink(*sink_stream, format, fields);

        std::unique_ptr<Transport> owned_transport;
        Transport* transport = hooks.transport;
        if (!transport) {
            if (o.dry_run) {
                owned_transport = std::make_unique<NullTransport>();
            } else if (!o.iface.empty()) {
                owned_transport = std::make_unique<RawTransport>(o.iface, family);
            } else {
                throw ConfigError("no packet path: give -i/--iface, or --dry-run");
            }
            transport = owned_transport.get();
        }
        clock = hooks.clock ? hooks.clock : &system_clock;

        mpz_class effective_total = 0, excluded_total = 0;
        for (const TargetSpec& spec : specs) {
            effective_total += effective_space(spec, filter);
            excluded_total +=
                filter.count_excluded(spec) * static_cast<unsigned long>(ports.size());
        }

        if (!o.quiet) {
            diag << "hexmap: probe " << probe_type_name(probe) << ", IPv"
                 << (family == Family::v4 ? '4' : '6') << ", " << specs.size() << " target"
                 << (specs.size() == 1 ? "" : "s") << ", shard " << shard.shard_index << "/"
                 << shard.shard_count << ", " << o.sender_threads << " sender thread"
                 << (o.sender_threads == 1 ? "" : "s") << "\n";
            diag << "hexmap: seed " << seed << " (use --seed " << seed
                 << " to reproduce this scan)\n";
            diag << "hexmap: space " << group_digits(effective_total) << " probe"
                 << (effective_total == 1 ? "" : "s") << " (" << group_digits(excluded_total)
                 << " excluded by " << filter.rule_count() << " filter rule"
                 << (filter.rule_count() == 1 ? "" : "s") << ")\n";
            if (rate.mode == RatePolicy::Mode::unlimited) {
                diag << "hexmap: rate unlimited\n";
            } else {
                double duration = 0;
                ProbeContext pctx{ScanSecret::from_seed(seed), probe, tmpl, popts};
                for (const TargetSpec& spec : specs) {
                    Address sample =
                        compose_address(spec, 0, identifier_value(spec, 0, 0));
                    size_t wire =
                        build_probe_frame(pctx, sample, spec.ports.ports[0]).size();
                    uint64_t pps = effective_pps(rate, std::max<size_t>(wire, 60));
                    duration +=
                        mpz_get_d(effective_space(spec, filter).get_mpz_t()) / pps;
                }
                if (rate.mode == RatePolicy::Mode::bps) {
                    diag << "hexmap: bandwidth " << group_digits(rate.target) << " bps";
                } else {
                    diag << "hexmap: rate " << group_digits(rate.target) << " pps";
                }
                diag << ", estimated duration " << format_duration(duration) << "\n";
            }
            if (o.dry_run) diag << "hexmap: DRY RUN: building frames without sending\n";
        }

        run_started = clock->now_ns();
        const uint64_t runtime_deadline =
            app.count("--max-runtime")
                ? run_started + static_cast<uint64_t>(o.max_runtime * 1e9)
                : UINT64_MAX;

        for (size_t ti = 0; ti < specs.size(); ti++) {
            ScanConfig cfg;
            cfg.spec = specs[ti];
            cfg.probe = probe;
            cfg.probe_opts = popts;
            cfg.frame_template = tmpl;
            cfg.rate = rate;
            cfg.seed = seed;
            cfg.shard = shard;
            cfg.sender_threads = o.sender_threads;
            cfg.cooldown_secs = o.cooldown_secs;
            cfg.dry_run = o.dry_run;
            cfg.dedup = !o.no_dedup;
            cfg.output_all = o.output_all;
            if (o.max_results > 0) {
                if (total.hits >= o.max_results) break;
                cfg.max_results = o.max_results - total.hits;
            }
            if (runtime_deadline != UINT64_MAX) {
                uint64_t now = clock->now_ns();
                if (now >= runtime_deadline) break;
                cfg.max_runtime_secs = (runtime_deadline - now) / 1e9;
            }

            ScanStats ts;
            try {
                run_scan(cfg, filter, *transport, sink, *clock, ts);
            } catch (...) {
                total.sent += ts.sent;
                total.recv += ts.recv;
                total.hits += ts.hits;
                total.blocked_skips += ts.blocked_skips;
                total.send_errors += ts.send_errors;
                throw;
            }
            total.sent += ts.sent;
            total.recv += ts.recv;
            total.hits += ts.hits;
            total.blocked_skips += ts.blocked_skips;
            total.send_errors += ts.send_errors;
            if (o.verbose > 0 && !o.quiet) {
                Progress p = progress_report(ts, effective_space(cfg.spec, filter),
                                             clock->now_ns());
                diag << "hexmap: target " << o.targets[ti] << ": sent "
                     << group_digits(ts.sent) << ", hits " << group_digits(ts.hits) << ", "
                     << static_cast<uint64_t>(p.live_pps) << " pps\n";
            }
        }

        total.start_ns = run_started;
        total.end_ns = clock->now_ns();
        if (hooks.stats) *hooks.stats = total;
        summarize(false);
        return 0;
    } catch (const ConfigError& e) {
        diag << "hexmap: error: " << e.what() << "\n";
        return 1;
    } catch (const RuntimeFailure& e) {
        diag << "hexmap: fatal: " << e.what() << "\n";
        if (hooks.stats) *hooks.stats = total;
        summarize(true);
        return 2;
    }
}

int run_main(int argc, char** argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<size_t>(argc > 0 ? argc - 1 : 0));
    for (int i = 1; i < argc; i++) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace hexmap::cli
