// flopwatt command-line front end: ingest -> validate -> analyze -> report.
//
// Exit codes: 0 ok, 1 rule violation, 2 input/parse error, 3 internal error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flopwatt/flopwatt.hpp"

namespace {

using flopwatt::json;

struct OutputArgs {
    std::string out;           // empty = stdout
    std::string format = "json";
};

void emit(const json& report, const OutputArgs& o) {
    std::ostringstream body;
    if (o.format == "json")
        body << report.dump(2) << '\n';
    else if (o.format == "text")
        flopwatt::render_report_text(body, report);
    else if (o.format == "csv")
        flopwatt::render_report_csv(body, report);
    else
        throw flopwatt::domain_error("unknown format '" + o.format + "'");
    if (o.out.empty()) {
        std::cout << body.str();
    } else {
        std::ofstream f(o.out);
        if (!f) throw flopwatt::error("cannot open '" + o.out + "' for writing");
        f << body.str();
    }
}

flopwatt::MeasurementWindow parse_window(const std::string& s) {
    const std::size_t pos = s.find(':');
    if (pos == std::string::npos || pos == 0 || pos + 1 == s.size())
        throw flopwatt::domain_error("--window expects '<w0>:<w1>'");
    flopwatt::MeasurementWindow w;
    const std::string_view sv(s);
    w.w0_s = flopwatt::detail::parse_double(sv.substr(0, pos), 0);
    w.w1_s = flopwatt::detail::parse_double(sv.substr(pos + 1), 0);
    return w;
}

flopwatt::PowerTrace load_merged_traces(const std::vector<std::string>& paths) {
    std::vector<flopwatt::PowerTrace> traces;
    traces.reserve(paths.size());
    for (const std::string& p : paths) traces.push_back(flopwatt::ingest_trace_file(p));
    return flopwatt::merge_traces(traces);
}

// ---- measure ----------------------------------------------------------------

struct MeasureArgs {
    std::vector<std::string> traces;
    std::string run_path;
    int level = 1;
    std::string window;
    double tolerance = 0.01;
    OutputArgs out;
};

int cmd_measure(const MeasureArgs& a) {
    const flopwatt::PowerTrace trace = load_merged_traces(a.traces);
    const flopwatt::RunRecord run = flopwatt::run_from_json(flopwatt::load_json_file(a.run_path));

    flopwatt::MeasurementWindow window{run.t_start_s, run.t_end_s};
    if (!a.window.empty())
        window = parse_window(a.window);
    else if (a.level == 1)
        throw flopwatt::domain_error("level 1 measures a window; pass --window <w0>:<w1>");

    const flopwatt::ComplianceReport rep =
        flopwatt::compliance_report(trace, run, window, a.level, a.tolerance);

    json report{{"schema_version", flopwatt::kReportSchemaVersion},
                {"command", "measure"},
                {"inputs",
                 json{{"traces", a.traces},
                      {"run", a.run_path},
                      {"level", a.level},
                      {"window", flopwatt::window_to_json(window)},
                      {"tolerance", a.tolerance}}},
                {"run", flopwatt::run_to_json(run)},
                {"metrics",
                 json{{"avg_power_w", rep.avg_power_w},
                      {"energy_j", rep.avg_power_w * window.length_s()},
                      {"efficiency_mflops_per_w", rep.efficiency_mflops_per_w}}},
                {"verdicts",
                 json{{"window", flopwatt::verdict_to_json(rep.window_check)},
                      {"fraction", flopwatt::verdict_to_json(rep.fraction_check)},
                      {"consistency", flopwatt::consistency_to_json(rep.consistency)}}},
                {"ok", rep.ok()}};
    emit(report, a.out);
    return rep.ok() ? 0 : 1;
}

// ---- windows ----------------------------------------------------------------

struct WindowsArgs {
    std::vector<std::string> traces;
    std::string run_path;
    double step = 0.0; // 0 = auto (duration/1000)
    std::string curve_out;
    OutputArgs out;
};

int cmd_windows(const WindowsArgs& a) {
    const flopwatt::PowerTrace trace = load_merged_traces(a.traces);
    const flopwatt::RunRecord run = flopwatt::run_from_json(flopwatt::load_json_file(a.run_path));

    const flopwatt::WindowSweepResult sweep = flopwatt::exploit_gap(trace, run, a.step);

    if (!a.curve_out.empty()) {
        std::ofstream f(a.curve_out);
        if (!f) throw flopwatt::error("cannot open '" + a.curve_out + "' for writing");
        flopwatt::write_curve_csv(f, sweep.curve);
    }

    json report{{"schema_version", flopwatt::kReportSchemaVersion},
                {"command", "windows"},
                {"inputs",
                 json{{"traces", a.traces},
                      {"run", a.run_path},
                      {"step_s", a.step},
                      {"curve_csv", a.curve_out}}},
                {"sweep", flopwatt::sweep_to_json(sweep)}};
    emit(report, a.out);
    return 0;
}

// ---- extrapolate --------------------------------------------------------------

struct ExtrapolateArgs {
    double power_w = -1.0; // <0 = take it from the traces
    std::vector<std::string> traces;
    std::string run_path;
    std::int64_t nodes_measured = 0; // 0 = take from run record
    std::int64_t nodes_total = 0;
    double network_w = 0.0;
    std::string nodes_csv;
    OutputArgs out;
};

int cmd_extrapolate(const ExtrapolateArgs& a) {
    double measured = a.power_w;
    if (measured < 0.0) {
        if (a.traces.empty())
            throw flopwatt::domain_error("extrapolate needs --power or at least one --trace");
        const flopwatt::PowerTrace trace = load_merged_traces(a.traces);
        double t0 = trace.t_begin();
        double t1 = trace.t_end();
        if (!a.run_path.empty()) {
            const flopwatt::RunRecord run =
                flopwatt::run_from_json(flopwatt::load_json_file(a.run_path));
            t0 = run.t_start_s;
            t1 = run.t_end_s;
        }
        measured = flopwatt::average_power_w(trace, t0, t1);
    }

    std::int64_t measured_nodes = a.nodes_measured;
    std::int64_t total_nodes = a.nodes_total;
    if ((measured_nodes == 0 || total_nodes == 0) && !a.run_path.empty()) {
        const flopwatt::RunRecord run =
            flopwatt::run_from_json(flopwatt::load_json_file(a.run_path));
        if (measured_nodes == 0) measured_nodes = run.nodes_measured;
        if (total_nodes == 0) total_nodes = run.nodes_total;
    }
    if (measured_nodes == 0 || total_nodes == 0)
        throw flopwatt::domain_error(
            "extrapolate needs node counts (--nodes-measured/--nodes-total or --run)");

    const double scaled =
        flopwatt::extrapolate_power_w(measured, measured_nodes, total_nodes, a.network_w);

    json report{{"schema_version", flopwatt::kReportSchemaVersion},
                {"command", "extrapolate"},
                {"inputs",
                 json{{"traces", a.traces},
                      {"run", a.run_path},
                      {"measured_avg_power_w", measured},
                      {"nodes_measured", measured_nodes},
                      {"nodes_total", total_nodes},
                      {"network_w", a.network_w},
                      {"nodes_csv", a.nodes_csv}}},
                {"metrics", json{{"extrapolated_power_w", scaled}}}};

    if (!a.nodes_csv.empty()) {
        const std::vector<flopwatt::NodeEfficiencySample> samples =
            flopwatt::node_samples_from_csv_file(a.nodes_csv);
        const flopwatt::VariabilityStats stats = flopwatt::variability(samples);
        const double u = flopwatt::extrapolation_uncertainty(stats);
        report["metrics"]["uncertainty_rel"] = u;
        report["metrics"]["power_low_w"] = scaled * (1.0 - u);
        report["metrics"]["power_high_w"] = scaled * (1.0 + u);
        report["variability"] = flopwatt::variability_to_json(stats);
    }

    emit(report, a.out);
    return 0;
}

// ---- synth ---------------------------------------------------------------------

struct SynthArgs {
    std::string params_path;
    double dt = 0.0; // 0 = duration/1000
    std::string out; // empty = stdout
};

int cmd_synth(const SynthArgs& a) {
    if (a.dt < 0.0) throw flopwatt::domain_error("synth: dt must be positive");
    const flopwatt::HplTraceParams params =
        flopwatt::hpl_params_from_json(flopwatt::load_json_file(a.params_path));
    const double dt = a.dt > 0.0 ? a.dt : params.duration_s / 1000.0;
    const flopwatt::PowerTrace trace = flopwatt::synth_hpl_trace(params, dt);
    if (a.out.empty()) {
        flopwatt::write_trace_csv(std::cout, trace);
    } else {
        std::ofstream f(a.out);
        if (!f) throw flopwatt::error("cannot open '" + a.out + "' for writing");
        flopwatt::write_trace_csv(f, trace);
    }
    return 0;
}

// ---- plan ----------------------------------------------------------------------

struct PlanArgs {
    std::string inventory_path;
    std::string kernel_path;
    std::string jobs_path;
    std::string modes_path;
    double penalty = 0.2;
    OutputArgs out;
};

int cmd_plan(const PlanArgs& a) {
    const flopwatt::NodeConfig node =
        flopwatt::node_config_from_json(flopwatt::load_json_file(a.inventory_path));
    const flopwatt::KernelModel kernel =
        flopwatt::kernel_from_json(flopwatt::load_json_file(a.kernel_path));

    json boards = json::array();
    for (const flopwatt::GpuSpec& g : node.gpu_boards)
        boards.push_back(json{{"name", g.name},
                              {"chips", g.chips_per_board},
                              {"kernel_perf_gflops_per_chip", flopwatt::kernel_perf_gflops(g, kernel)},
                              {"board_power_w", g.board_power_w}});

    json report{{"schema_version", flopwatt::kReportSchemaVersion},
                {"command", "plan"},
                {"inputs",
                 json{{"inventory", a.inventory_path},
                      {"kernel", a.kernel_path},
                      {"jobs", a.jobs_path},
                      {"modes", a.modes_path},
                      {"multi_gpu_penalty", a.penalty}}},
                {"boards", boards}};

    if (!a.jobs_path.empty()) {
        const std::vector<flopwatt::LatticeJob> jobs =
            flopwatt::jobs_from_json(flopwatt::load_json_file(a.jobs_path));
        json placements = json::array();
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            const flopwatt::Placement p = flopwatt::place_job(jobs[i], node, kernel, a.penalty);
            json e = flopwatt::placement_to_json(p);
            e["job"] = i;
            e["footprint_bytes"] = flopwatt::lattice_footprint_bytes(jobs[i]);
            placements.push_back(e);
        }
        report["placements"] = placements;
        report["throughput"] =
            flopwatt::throughput_to_json(flopwatt::node_throughput(node, jobs, kernel));
    }

    if (!a.modes_path.empty()) {
        const std::vector<flopwatt::OperatingMode> modes =
            flopwatt::modes_from_json(flopwatt::load_json_file(a.modes_path));
        json all = json::array();
        for (const flopwatt::OperatingMode& m : modes) all.push_back(flopwatt::mode_to_json(m));
        report["modes"] = all;
        report["selected_mode"] = flopwatt::mode_to_json(flopwatt::mode_select(modes));
    }

    emit(report, a.out);
    return 0;
}

// ---- report (render an existing report) ------------------------------------------

struct ReportArgs {
    std::string in_path;
    OutputArgs out;
};

int cmd_report(const ReportArgs& a) {
    const json report = flopwatt::load_json_file(a.in_path);
    if (!report.is_object() || !report.contains("schema_version"))
        throw flopwatt::data_error("'" + a.in_path + "' is not a flopwatt report (no schema_version)");
    emit(report, a.out);
    return 0;
}

void add_output_flags(CLI::App* cmd, OutputArgs& out) {
    cmd->add_option("--out", out.out, "Write the report here instead of stdout");
    cmd->add_option("--format", out.format, "Report rendering")
        ->check(CLI::IsMember({"json", "text", "csv"}))
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flopwatt: power-efficiency measurement and capacity planning toolkit"};
    app.require_subcommand(1);

    MeasureArgs measure_args;
    CLI::App* measure = app.add_subcommand(
        "measure", "Validate a measurement window against level rules and compute efficiency");
    measure->add_option("--trace", measure_args.traces, "Power trace file (repeatable)")
        ->required();
    measure->add_option("--run", measure_args.run_path, "Run record JSON")->required();
    measure->add_option("--level", measure_args.level, "Measurement level")
        ->check(CLI::Range(1, 3))
        ->required();
    measure->add_option("--window", measure_args.window, "Window '<w0>:<w1>' in seconds");
    measure->add_option("--tolerance", measure_args.tolerance,
                        "Relative tolerance for the consistency check")
        ->capture_default_str();
    add_output_flags(measure, measure_args.out);

    WindowsArgs windows_args;
    CLI::App* windows = app.add_subcommand(
        "windows", "Sweep all rule-compliant windows and quantify the exploit gap");
    windows->add_option("--trace", windows_args.traces, "Power trace file (repeatable)")
        ->required();
    windows->add_option("--run", windows_args.run_path, "Run record JSON")->required();
    windows->add_option("--step", windows_args.step, "Sweep step in seconds (default: T/1000)");
    windows->add_option("--curve-out", windows_args.curve_out, "Write the sweep curve CSV here");
    add_output_flags(windows, windows_args.out);

    ExtrapolateArgs extrapolate_args;
    CLI::App* extrapolate = app.add_subcommand(
        "extrapolate", "Scale a node-subset power measurement to the full machine");
    extrapolate->add_option("--power", extrapolate_args.power_w, "Measured average power in watts");
    extrapolate->add_option("--trace", extrapolate_args.traces,
                            "Measured power trace (repeatable, alternative to --power)");
    extrapolate->add_option("--run", extrapolate_args.run_path, "Run record JSON");
    extrapolate->add_option("--nodes-measured", extrapolate_args.nodes_measured,
                            "Number of metered nodes");
    extrapolate->add_option("--nodes-total", extrapolate_args.nodes_total,
                            "Number of nodes in the machine");
    extrapolate->add_option("--network-w", extrapolate_args.network_w,
                            "Separately metered network power in watts");
    extrapolate->add_option("--nodes", extrapolate_args.nodes_csv,
                            "Per-node efficiency CSV for the uncertainty bound");
    add_output_flags(extrapolate, extrapolate_args.out);

    SynthArgs synth_args;
    CLI::App* synth =
        app.add_subcommand("synth", "Generate a synthetic benchmark power trace (CSV)");
    synth->add_option("--params", synth_args.params_path, "Trace shape parameters JSON")
        ->required();
    synth->add_option("--dt", synth_args.dt, "Sample spacing in seconds (default: duration/1000)");
    synth->add_option("--out", synth_args.out, "Write the trace here instead of stdout");

    PlanArgs plan_args;
    CLI::App* plan = app.add_subcommand(
        "plan", "Roofline performance, job placement, and operating-mode selection");
    plan->add_option("--inventory", plan_args.inventory_path, "Node GPU inventory JSON")
        ->required();
    plan->add_option("--kernel", plan_args.kernel_path, "Kernel model JSON")->required();
    plan->add_option("--jobs", plan_args.jobs_path, "Lattice job mix JSON");
    plan->add_option("--modes", plan_args.modes_path, "Operating modes JSON");
    plan->add_option("--penalty", plan_args.penalty, "Multi-GPU performance penalty")
        ->capture_default_str();
    add_output_flags(plan, plan_args.out);

    ReportArgs report_args;
    CLI::App* report =
        app.add_subcommand("report", "Re-render an existing report JSON as text or CSV");
    report->add_option("--in", report_args.in_path, "Report JSON produced by another command")
        ->required();
    add_output_flags(report, report_args.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints help or the parse error
        return code == 0 ? 0 : 2;
    }

    try {
        if (measure->parsed()) return cmd_measure(measure_args);
        if (windows->parsed()) return cmd_windows(windows_args);
        if (extrapolate->parsed()) return cmd_extrapolate(extrapolate_args);
        if (synth->parsed()) return cmd_synth(synth_args);
        if (plan->parsed()) return cmd_plan(plan_args);
        if (report->parsed()) return cmd_report(report_args);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const flopwatt::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}
