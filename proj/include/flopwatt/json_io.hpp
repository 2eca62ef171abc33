#pragma once

// JSON/CSV bindings for the domain types: configuration documents in,
// reports out. Reports carry schema_version so downstream scripts can gate
// on layout changes.

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flopwatt/aggregation.hpp"
#include "flopwatt/errors.hpp"
#include "flopwatt/methodology.hpp"
#include "flopwatt/power_model.hpp"
#include "flopwatt/roofline.hpp"
#include "flopwatt/trace_io.hpp"
#include "flopwatt/window_analysis.hpp"

namespace flopwatt {

using json = nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

[[noreturn]] inline void missing_field(const std::string& ctx, const std::string& key) {
    throw data_error(ctx + ": missing field '" + key + "'");
}

inline const json& member(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.is_object() || !j.contains(key)) missing_field(ctx, key);
    return j.at(key);
}

inline double get_num(const json& j, const std::string& key, const std::string& ctx) {
    const json& v = member(j, key, ctx);
    if (!v.is_number()) throw data_error(ctx + ": field '" + key + "' must be a number");
    return v.get<double>();
}

inline double get_num_or(const json& j, const std::string& key, const std::string& ctx,
                         double fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    return get_num(j, key, ctx);
}

inline std::int64_t get_int(const json& j, const std::string& key, const std::string& ctx) {
    const json& v = member(j, key, ctx);
    if (!v.is_number_integer()) throw data_error(ctx + ": field '" + key + "' must be an integer");
    return v.get<std::int64_t>();
}

inline bool get_bool(const json& j, const std::string& key, const std::string& ctx) {
    const json& v = member(j, key, ctx);
    if (!v.is_boolean()) throw data_error(ctx + ": field '" + key + "' must be a boolean");
    return v.get<bool>();
}

inline std::string get_str(const json& j, const std::string& key, const std::string& ctx) {
    const json& v = member(j, key, ctx);
    if (!v.is_string()) throw data_error(ctx + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

} // namespace detail

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open '" + path + "'");
    try {
        return json::parse(in, nullptr, true, /*ignore_comments=*/false);
    } catch (const json::parse_error& e) {
        throw parse_error(std::string(path) + ": " + e.what());
    }
}

// ---- run records -----------------------------------------------------------

inline RunRecord run_from_json(const json& j) {
    const std::string ctx = "run record";
    RunRecord run;
    run.t_start_s = detail::get_num(j, "t_start_s", ctx);
    run.t_end_s = detail::get_num(j, "t_end_s", ctx);
    run.performance_gflops = detail::get_num(j, "performance_gflops", ctx);
    run.nodes_measured = detail::get_int(j, "nodes_measured", ctx);
    run.nodes_total = detail::get_int(j, "nodes_total", ctx);
    run.network_included = detail::get_bool(j, "network_included", ctx);
    if (j.contains("reported_avg_power_w") && !j.at("reported_avg_power_w").is_null())
        run.reported_avg_power_w = detail::get_num(j, "reported_avg_power_w", ctx);
    if (j.contains("reported_efficiency_mflops_per_w") &&
        !j.at("reported_efficiency_mflops_per_w").is_null())
        run.reported_efficiency_mflops_per_w =
            detail::get_num(j, "reported_efficiency_mflops_per_w", ctx);
    validate_run(run);
    return run;
}

inline json run_to_json(const RunRecord& run) {
    json j{{"t_start_s", run.t_start_s},
           {"t_end_s", run.t_end_s},
           {"performance_gflops", run.performance_gflops},
           {"nodes_measured", run.nodes_measured},
           {"nodes_total", run.nodes_total},
           {"network_included", run.network_included}};
    if (run.reported_avg_power_w) j["reported_avg_power_w"] = *run.reported_avg_power_w;
    if (run.reported_efficiency_mflops_per_w)
        j["reported_efficiency_mflops_per_w"] = *run.reported_efficiency_mflops_per_w;
    return j;
}

// ---- power model configuration ---------------------------------------------

inline FanCurve fan_curve_from_json(const json& j) {
    if (!j.is_array()) throw data_error("fan curve: expected an array of {load, power_w}");
    FanCurve curve;
    for (const json& p : j)
        curve.points.push_back({detail::get_num(p, "load", "fan curve point"),
                                detail::get_num(p, "power_w", "fan curve point")});
    validate_fan_curve(curve);
    return curve;
}

inline ComponentPower component_power_from_json(const json& j) {
    const std::string ctx = "component power";
    ComponentPower m;
    m.cpu_w_each = detail::get_num(j, "cpu_w_each", ctx);
    m.cpu_count = detail::get_int(j, "cpu_count", ctx);
    m.gpu_w_each = detail::get_num(j, "gpu_w_each", ctx);
    m.gpu_count = detail::get_int(j, "gpu_count", ctx);
    m.memory_w = detail::get_num(j, "memory_w", ctx);
    m.chipset_w = detail::get_num(j, "chipset_w", ctx);
    m.network_w = detail::get_num(j, "network_w", ctx);
    m.management_w = detail::get_num(j, "management_w", ctx);
    m.usb_w = detail::get_num(j, "usb_w", ctx);
    m.disk_w = detail::get_num(j, "disk_w", ctx);
    m.ethernet_w = detail::get_num(j, "ethernet_w", ctx);
    m.fan = fan_curve_from_json(detail::member(j, "fan", ctx));
    validate_component_power(m);
    return m;
}

inline SavingsToggles toggles_from_json(const json& j) {
    SavingsToggles t;
    if (j.contains("usb_suspend")) t.usb_suspend = detail::get_bool(j, "usb_suspend", "toggles");
    if (j.contains("disk_off")) t.disk_off = detail::get_bool(j, "disk_off", "toggles");
    if (j.contains("ethernet_off")) t.ethernet_off = detail::get_bool(j, "ethernet_off", "toggles");
    return t;
}

inline HplTraceParams hpl_params_from_json(const json& j) {
    const std::string ctx = "synth params";
    HplTraceParams p;
    p.duration_s = detail::get_num(j, "duration_s", ctx);
    p.plateau_w = detail::get_num(j, "plateau_w", ctx);
    p.tail_start = detail::get_num(j, "tail_start", ctx);
    p.tail_end_w = detail::get_num(j, "tail_end_w", ctx);
    p.ramp_duration_s = detail::get_num_or(j, "ramp_duration_s", ctx, 0.0);
    p.noise_amplitude_w = detail::get_num_or(j, "noise_amplitude_w", ctx, 0.0);
    if (j.contains("seed")) {
        const json& v = j.at("seed");
        if (!v.is_number_integer()) throw data_error(ctx + ": field 'seed' must be an integer");
        p.seed = v.get<std::uint64_t>();
    }
    validate_hpl_params(p);
    return p;
}

// ---- roofline configuration --------------------------------------------------

// GPU memory / bandwidth use vendor units: 1 GB = 1e9 bytes.
inline GpuSpec gpu_from_json(const json& j) {
    const std::string ctx = "gpu spec";
    GpuSpec g;
    g.name = detail::get_str(j, "name", ctx);
    g.chips_per_board = detail::get_int(j, "chips_per_board", ctx);
    g.memory_per_chip_bytes =
        static_cast<std::uint64_t>(detail::get_num(j, "memory_per_chip_gb", ctx) * 1e9);
    g.bandwidth_per_chip_bytes_s = detail::get_num(j, "bandwidth_per_chip_gb_s", ctx) * 1e9;
    g.board_power_w = detail::get_num(j, "board_power_w", ctx);
    validate_gpu(g);
    return g;
}

inline NodeConfig node_config_from_json(const json& j) {
    const std::string ctx = "node config";
    NodeConfig node;
    const json& boards = detail::member(j, "gpu_boards", ctx);
    if (!boards.is_array()) throw data_error(ctx + ": 'gpu_boards' must be an array");
    for (const json& b : boards) node.gpu_boards.push_back(gpu_from_json(b));
    if (j.contains("cpu")) node.cpu = detail::get_str(j, "cpu", ctx);
    if (j.contains("host_memory_gb"))
        node.host_memory_bytes =
            static_cast<std::uint64_t>(detail::get_num(j, "host_memory_gb", ctx) * 1e9);
    validate_node(node);
    return node;
}

inline KernelModel kernel_from_json(const json& j) {
    const std::string ctx = "kernel model";
    KernelModel k;
    k.arithmetic_intensity_flops_per_byte =
        detail::get_num(j, "arithmetic_intensity_flops_per_byte", ctx);
    k.bandwidth_efficiency = detail::get_num(j, "bandwidth_efficiency", ctx);
    validate_kernel(k);
    return k;
}

inline LatticeJob job_from_json(const json& j) {
    const std::string ctx = "lattice job";
    LatticeJob job;
    job.nx = detail::get_int(j, "nx", ctx);
    job.ny = detail::get_int(j, "ny", ctx);
    job.nz = detail::get_int(j, "nz", ctx);
    job.nt = detail::get_int(j, "nt", ctx);
    const std::int64_t bps = detail::get_int(j, "bytes_per_site", ctx);
    if (bps < 1) throw data_error(ctx + ": 'bytes_per_site' must be positive");
    job.bytes_per_site = static_cast<std::uint64_t>(bps);
    validate_job(job);
    return job;
}

inline std::vector<LatticeJob> jobs_from_json(const json& j) {
    const json& arr = j.is_array() ? j : detail::member(j, "jobs", "job list");
    if (!arr.is_array()) throw data_error("job list: expected an array");
    std::vector<LatticeJob> jobs;
    for (const json& e : arr) jobs.push_back(job_from_json(e));
    return jobs;
}

inline std::vector<OperatingMode> modes_from_json(const json& j) {
    const json& arr = j.is_array() ? j : detail::member(j, "modes", "mode list");
    if (!arr.is_array()) throw data_error("mode list: expected an array");
    std::vector<OperatingMode> modes;
    for (const json& e : arr) {
        const std::string ctx = "operating mode";
        OperatingMode m;
        m.name = detail::get_str(e, "name", ctx);
        m.performance_gflops = detail::get_num(e, "performance_gflops", ctx);
        m.power_w = detail::get_num(e, "power_w", ctx);
        modes.push_back(m);
    }
    return modes;
}

// ---- node efficiency samples --------------------------------------------------

// CSV with header `node_id,efficiency_mflops_per_w`; blank lines and `#`
// comments are skipped.
inline std::vector<NodeEfficiencySample> node_samples_from_csv(std::istream& in) {
    std::vector<NodeEfficiencySample> samples;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row(detail::trim(line));
        if (row.empty() || row.front() == '#') continue;
        if (!saw_header) {
            std::string compact;
            for (char c : row)
                if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
            if (compact != "node_id,efficiency_mflops_per_w")
                throw parse_error("expected header 'node_id,efficiency_mflops_per_w'", line_no);
            saw_header = true;
            continue;
        }
        const std::size_t comma = row.find(',');
        if (comma == std::string::npos) throw parse_error("expected 'node_id,value'", line_no);
        NodeEfficiencySample s;
        s.node_id = std::string(detail::trim(row.substr(0, comma)));
        if (s.node_id.empty()) throw parse_error("empty node_id", line_no);
        s.efficiency_mflops_per_w =
            detail::parse_double(detail::trim(row.substr(comma + 1)), line_no);
        samples.push_back(s);
    }
    if (!saw_header) throw parse_error("empty node sample file");
    return samples;
}

inline std::vector<NodeEfficiencySample> node_samples_from_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open '" + path + "'");
    try {
        return node_samples_from_csv(in);
    } catch (const parse_error& e) {
        throw parse_error(path + ": " + e.what());
    }
}

// ---- report fragments ----------------------------------------------------------

inline json verdict_to_json(const Verdict& v) {
    return json{{"ok", v.ok}, {"violations", v.violations}};
}

inline json window_to_json(const MeasurementWindow& w) {
    return json{{"w0_s", w.w0_s}, {"w1_s", w.w1_s}, {"length_s", w.length_s()}};
}

inline json consistency_to_json(const ConsistencyCheck& c) {
    json j{{"ok", c.ok}, {"tolerance", c.tolerance}};
    j["efficiency_rel_error"] = c.efficiency_rel_error ? json(*c.efficiency_rel_error) : json();
    j["power_rel_error"] = c.power_rel_error ? json(*c.power_rel_error) : json();
    j["implied_avg_power_w"] = c.implied_avg_power_w ? json(*c.implied_avg_power_w) : json();
    return j;
}

inline json compliance_to_json(const ComplianceReport& r) {
    return json{{"level", r.level},
                {"window", window_to_json(r.window)},
                {"window_check", verdict_to_json(r.window_check)},
                {"fraction_check", verdict_to_json(r.fraction_check)},
                {"avg_power_w", r.avg_power_w},
                {"efficiency_mflops_per_w", r.efficiency_mflops_per_w},
                {"consistency", consistency_to_json(r.consistency)},
                {"ok", r.ok()}};
}

inline json variability_to_json(const VariabilityStats& v) {
    return json{{"n", v.n},           {"mean", v.mean}, {"stddev", v.stddev},
                {"stddev_sample", v.stddev_sample},     {"rel_stddev", v.rel_stddev},
                {"min", v.min},       {"max", v.max}};
}

inline json sweep_to_json(const WindowSweepResult& r, bool include_curve = false) {
    json j{{"best_window", window_to_json(r.best_window)},
           {"best_avg_power_w", r.best_avg_power_w},
           {"fair_avg_power_w", r.fair_avg_power_w},
           {"exploit_gap", r.exploit_gap},
           {"curve_points", r.curve.size()}};
    if (include_curve) {
        json curve = json::array();
        for (const CurvePoint& p : r.curve)
            curve.push_back(json{{"start_s", p.start_s}, {"avg_power_w", p.avg_power_w}});
        j["curve"] = curve;
    }
    return j;
}

inline const char* placement_kind_name(PlacementKind k) {
    switch (k) {
        case PlacementKind::single_chip: return "single_chip";
        case PlacementKind::spread: return "spread";
        case PlacementKind::infeasible: return "infeasible";
    }
    return "infeasible";
}

inline json placement_to_json(const Placement& p) {
    return json{{"kind", placement_kind_name(p.kind)},
                {"n_chips", p.n_chips},
                {"predicted_gflops", p.predicted_gflops}};
}

inline json throughput_to_json(const ThroughputReport& t) {
    return json{{"total_gflops", t.total_gflops},
                {"job_chip", t.job_chip},
                {"unplaced", t.unplaced}};
}

inline json mode_to_json(const OperatingMode& m) {
    return json{{"name", m.name},
                {"performance_gflops", m.performance_gflops},
                {"power_w", m.power_w},
                {"gflops_per_w", m.performance_gflops / m.power_w}};
}

inline void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "start_s,avg_power_w\n";
    for (const CurvePoint& p : curve)
        out << detail::format_double(p.start_s) << ',' << detail::format_double(p.avg_power_w)
            << '\n';
}

// ---- renderings -----------------------------------------------------------------

namespace detail {

inline void render_text_value(std::ostream& out, const json& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            if (value.is_object() || (value.is_array() && !value.empty() &&
                                      (value.front().is_object() || value.front().is_array()))) {
                out << pad << key << ":\n";
                render_text_value(out, value, indent + 1);
            } else {
                out << pad << key << ": " << value.dump() << '\n';
            }
        }
    } else if (j.is_array()) {
        std::size_t i = 0;
        for (const json& e : j) {
            out << pad << "- [" << i++ << "]\n";
            render_text_value(out, e, indent + 1);
        }
    } else {
        out << pad << j.dump() << '\n';
    }
}

inline void flatten_json(const json& j, const std::string& prefix,
                         std::vector<std::pair<std::string, std::string>>& rows) {
    if (j.is_object()) {
        for (const auto& [key, value] : j.items())
            flatten_json(value, prefix.empty() ? key : prefix + "." + key, rows);
    } else if (j.is_array()) {
        std::size_t i = 0;
        for (const json& e : j) flatten_json(e, prefix + "[" + std::to_string(i++) + "]", rows);
    } else {
        rows.emplace_back(prefix, j.dump());
    }
}

} // namespace detail

// Human-readable view of a report. The JSON stays the source of truth; this
// is only a rendering.
inline void render_report_text(std::ostream& out, const json& report) {
    detail::render_text_value(out, report, 0);
}

// Flat key,value CSV view of a report.
inline void render_report_csv(std::ostream& out, const json& report) {
    std::vector<std::pair<std::string, std::string>> rows;
    detail::flatten_json(report, "", rows);
    out << "key,value\n";
    for (const auto& [key, value] : rows) {
        std::string quoted = value;
        if (quoted.find(',') != std::string::npos || quoted.find('"') != std::string::npos) {
            std::string esc = "\"";
            for (char c : quoted) {
                if (c == '"') esc += "\"\"";
                else esc += c;
            }
            esc += '"';
            quoted = esc;
        }
        out << key << ',' << quoted << '\n';
    }
}

} // namespace flopwatt
