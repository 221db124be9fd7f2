#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hexmap/address.hpp"
#include "hexmap/validation.hpp"

namespace hexmap {

// One classified reply (or, under --dry-run, one built frame).
struct ReplyRecord {
    Address saddr{};  // reply source; the probed host, or the router for ICMP errors
    Address daddr{};  // reply destination (the scanner)
    uint16_t sport = 0;
    uint16_t dport = 0;
    std::string outcome;
    ProbeType probe_type = ProbeType::icmp_echo;
    Address orig_dest{}; // destination of the probe this reply answers
    std::optional<double> rtt_ms;
    std::vector<uint8_t> payload;
    std::vector<uint8_t> frame; // dry-run only: the frame that would be sent
    uint64_t timestamp_ms = 0;  // relative to scan start
};

enum class OutputFormat : uint8_t { txt, csv, jsonl };

OutputFormat parse_output_format(const std::string& name); // throws ConfigError

// Serializes records with a user-selected field subset. Single-writer by
// contract (only the receiver thread writes). Any stream error is fatal:
// results must not silently truncate.
class OutputSink {
public:
    // Empty field list selects the format default: txt prints saddr only,
    // csv/jsonl print the standard summary columns.
    OutputSink(std::ostream& out, OutputFormat format, std::vector<std::string> fields);

    void write(const ReplyRecord& r);
    void flush();
    uint64_t rows() const { return rows_; }
    const std::vector<std::string>& fields() const { return fields_; }

    static const std::vector<std::string>& known_fields();

private:
    std::string render(const ReplyRecord& r, const std::string& field) const;

    std::ostream& out_;
    OutputFormat format_;
    std::vector<std::string> fields_;
    uint64_t rows_ = 0;
};

} // namespace hexmap
