#include "hexmap/output.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "hexmap/errors.hpp"

namespace hexmap {

OutputFormat parse_output_format(const std::string& name) {
    if (name == "txt") return OutputFormat::txt;
    if (name == "csv") return OutputFormat::csv;
    if (name == "jsonl") return OutputFormat::jsonl;
    throw ConfigError("unknown output format \"" + name + "\" (expected txt, csv, or jsonl)");
}

const std::vector<std::string>& OutputSink::known_fields() {
    static const std::vector<std::string> k = {
        "saddr",   "daddr",     "sport",        "dport",  "outcome", "probe_type",
        "orig_dest", "rtt_ms", "payload", "frame", "timestamp_ms",
    };
    return k;
}

namespace {

std::vector<std::string> default_fields(OutputFormat f) {
    if (f == OutputFormat::txt) return {"saddr"};
    return {"saddr", "daddr", "sport", "dport", "outcome", "probe_type", "timestamp_ms"};
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += "\"\"";
        else q += c;
    }
    q += '"';
    return q;
}

bool is_numeric_field(const std::string& f) {
    return f == "sport" || f == "dport" || f == "timestamp_ms" || f == "rtt_ms";
}

} // namespace

OutputSink::OutputSink(std::ostream& out, OutputFormat format, std::vector<std::string> fields)
    : out_(out), format_(format), fields_(std::move(fields)) {
    if (fields_.empty()) fields_ = default_fields(format_);
    const auto& known = known_fields();
    for (const auto& f : fields_) {
        if (std::find(known.begin(), known.end(), f) == known.end()) {
            std::string valid;
            for (const auto& k : known) valid += (valid.empty() ? "" : ", ") + k;
            throw ConfigError("unknown output field \"" + f + "\" (valid: " + valid + ")");
        }
    }
    if (format_ == OutputFormat::csv) {
        for (size_t i = 0; i < fields_.size(); i++)
            out_ << (i ? "," : "") << csv_escape(fields_[i]);
        out_ << '\n';
    }
    if (!out_) throw RuntimeFailure("output sink write failed");
}

std::string OutputSink::render(const ReplyRecord& r, const std::string& field) const {
    bool json = format_ == OutputFormat::jsonl;
    if (field == "saddr") return format_address(r.saddr);
    if (field == "daddr") return format_address(r.daddr);
    if (field == "orig_dest") return format_address(r.orig_dest);
    if (field == "sport") return std::to_string(r.sport);
    if (field == "dport") return std::to_string(r.dport);
    if (field == "outcome") return r.outcome;
    if (field == "probe_type") return probe_type_name(r.probe_type);
    if (field == "timestamp_ms") return std::to_string(r.timestamp_ms);
    if (field == "rtt_ms") return r.rtt_ms ? std::to_string(*r.rtt_ms) : "";
    if (field == "payload") return json ? to_base64(r.payload) : to_hex(r.payload);
    if (field == "frame") return json ? to_base64(r.frame) : to_hex(r.frame);
    return "";
}

void OutputSink::write(const ReplyRecord& r) {
    switch (format_) {
    case OutputFormat::txt:
        for (size_t i = 0; i < fields_.size(); i++) out_ << (i ? "\t" : "") << render(r, fields_[i]);
        out_ << '\n';
        break;
    case OutputFormat::csv:
        for (size_t i = 0; i < fields_.size(); i++)
            out_ << (i ? "," : "") << csv_escape(render(r, fields_[i]));
        out_ << '\n';
        break;
    case OutputFormat::jsonl: {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& f : fields_) {
            if (f == "rtt_ms" && !r.rtt_ms) continue; // absent, not null
            if (is_numeric_field(f)) {
                if (f == "sport") j[f] = r.sport;
                else if (f == "dport") j[f] = r.dport;
                else if (f == "timestamp_ms") j[f] = r.timestamp_ms;
                else j[f] = *r.rtt_ms;
            } else {
                j[f] = render(r, f);
            }
        }
        out_ << j.dump() << '\n';
        break;
    }
    }
    if (!out_) throw RuntimeFailure("output sink write failed");
    rows_++;
}

void OutputSink::flush() {
    out_.flush();
    if (!out_) throw RuntimeFailure("output sink flush failed");
}

} // namespace hexmap
