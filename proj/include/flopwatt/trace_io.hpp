#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "flopwatt/errors.hpp"
#include "flopwatt/telemetry.hpp"

namespace flopwatt {

enum class TraceFormat { csv, jsonl };

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view field, std::size_t line) {
    field = trim(field);
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw parse_error("not a number: '" + std::string(field) + "'", line);
    return value;
}

// Shortest decimal representation that round-trips the double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

// Reorders by timestamp and runs the full trace validation. Duplicate
// timestamps and negative power surface as data_error.
inline PowerTrace finish_ingest(PowerTrace trace) {
    std::stable_sort(trace.samples.begin(), trace.samples.end(),
                     [](const PowerSample& a, const PowerSample& b) { return a.t_s < b.t_s; });
    validate_trace(trace);
    return trace;
}

inline PowerTrace ingest_csv(std::istream& in, std::string default_meter_id) {
    PowerTrace trace;
    trace.meter_id = std::move(default_meter_id);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        if (sv.front() == '#') {
            // Optional metadata comments: "# meter_id: x" / "# epoch: y"
            sv.remove_prefix(1);
            sv = trim(sv);
            if (sv.rfind("meter_id:", 0) == 0)
                trace.meter_id = std::string(trim(sv.substr(9)));
            else if (sv.rfind("epoch:", 0) == 0)
                trace.epoch = std::string(trim(sv.substr(6)));
            continue;
        }
        if (!header_seen) {
            std::string compact;
            for (char c : sv)
                if (c != ' ' && c != '\t') compact.push_back(c);
            if (compact != "t_s,power_w")
                throw parse_error("expected CSV header 't_s,power_w', got '" + std::string(sv) + "'",
                                  line_no);
            header_seen = true;
            continue;
        }
        const std::size_t comma = sv.find(',');
        if (comma == std::string_view::npos)
            throw parse_error("expected 't,power' row, got '" + std::string(sv) + "'", line_no);
        const double t = parse_double(sv.substr(0, comma), line_no);
        const double p = parse_double(sv.substr(comma + 1), line_no);
        if (p < 0.0)
            throw data_error("negative power " + format_double(p) + " W (line " +
                             std::to_string(line_no) + ")");
        trace.samples.push_back({t, p});
    }
    if (!header_seen) throw parse_error("empty CSV trace: header 't_s,power_w' not found");
    return finish_ingest(std::move(trace));
}

inline PowerTrace ingest_jsonl(std::istream& in, std::string default_meter_id) {
    PowerTrace trace;
    trace.meter_id = std::move(default_meter_id);
    std::string line;
    std::size_t line_no = 0;
    bool first_object = true;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(sv);
        } catch (const nlohmann::json::parse_error& e) {
            throw parse_error(std::string("bad JSONL object: ") + e.what(), line_no);
        }
        if (!obj.is_object()) throw parse_error("JSONL line is not an object", line_no);
        if (first_object && !obj.contains("t_s")) {
            // Header object: {"meter_id":..., "epoch":...}
            if (obj.contains("meter_id")) trace.meter_id = obj["meter_id"].get<std::string>();
            if (obj.contains("epoch")) {
                const auto& e = obj["epoch"];
                trace.epoch = e.is_string() ? e.get<std::string>() : e.dump();
            }
            first_object = false;
            continue;
        }
        first_object = false;
        if (!obj.contains("t_s") || !obj.contains("power_w"))
            throw parse_error("JSONL sample needs 't_s' and 'power_w'", line_no);
        if (!obj["t_s"].is_number() || !obj["power_w"].is_number())
            throw parse_error("'t_s' and 'power_w' must be numbers", line_no);
        const double t = obj["t_s"].get<double>();
        const double p = obj["power_w"].get<double>();
        if (p < 0.0)
            throw data_error("negative power " + format_double(p) + " W (line " +
                             std::to_string(line_no) + ")");
        trace.samples.push_back({t, p});
    }
    if (trace.samples.empty()) throw data_error("JSONL trace has no samples");
    return finish_ingest(std::move(trace));
}

} // namespace detail

// Parses a power trace from a byte stream. Samples are returned sorted by
// time; malformed rows, duplicate timestamps and negative powers are errors.
inline PowerTrace ingest_trace(std::istream& in, TraceFormat format,
                               std::string default_meter_id = "") {
    switch (format) {
    case TraceFormat::csv: return detail::ingest_csv(in, std::move(default_meter_id));
    case TraceFormat::jsonl: return detail::ingest_jsonl(in, std::move(default_meter_id));
    }
    throw domain_error("ingest_trace: unknown format");
}

// Convenience file loader; format picked by extension (.jsonl/.ndjson ->
// JSONL, anything else -> CSV). The file stem becomes the default meter id.
inline PowerTrace ingest_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open trace file: " + path);
    std::string stem = path;
    if (const auto slash = stem.find_last_of("/\\"); slash != std::string::npos)
        stem = stem.substr(slash + 1);
    std::string ext;
    if (const auto dot = stem.find_last_of('.'); dot != std::string::npos) {
        ext = stem.substr(dot + 1);
        stem = stem.substr(0, dot);
    }
    const TraceFormat fmt =
        (ext == "jsonl" || ext == "ndjson") ? TraceFormat::jsonl : TraceFormat::csv;
    return ingest_trace(in, fmt, stem);
}

// Writes the CSV trace format: metadata comments, "t_s,power_w" header, one
// sample per row. Doubles are printed shortest-round-trip, so a write/ingest
// cycle reproduces the trace bit for bit.
inline void write_trace_csv(std::ostream& out, const PowerTrace& trace) {
    if (!trace.meter_id.empty()) out << "# meter_id: " << trace.meter_id << "\n";
    if (trace.epoch) out << "# epoch: " << *trace.epoch << "\n";
    out << "t_s,power_w\n";
    for (const PowerSample& s : trace.samples)
        out << detail::format_double(s.t_s) << "," << detail::format_double(s.power_w) << "\n";
}

} // namespace flopwatt
