#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flopwatt/errors.hpp"
#include "flopwatt/telemetry.hpp"

namespace flopwatt {

// One benchmark execution. Times are seconds on the same epoch as the power
// traces; performance is the sustained GFLOPS of the run. The reported_*
// fields hold what a submission claims, for cross-checking against what the
// traces actually show.
struct RunRecord {
    double t_start_s = 0.0;
    double t_end_s = 0.0;
    double performance_gflops = 0.0;
    std::int64_t nodes_measured = 0;
    std::int64_t nodes_total = 0;
    bool network_included = false;
    std::optional<double> reported_avg_power_w;
    std::optional<double> reported_efficiency_mflops_per_w;

    double duration_s() const { return t_end_s - t_start_s; }
};

inline void validate_run(const RunRecord& run) {
    if (!(run.t_start_s < run.t_end_s))
        throw data_error("run record: t_start_s must be before t_end_s");
    if (!(run.performance_gflops > 0.0))
        throw data_error("run record: performance_gflops must be positive");
    if (run.nodes_measured < 1 || run.nodes_measured > run.nodes_total)
        throw data_error("run record: need 1 <= nodes_measured <= nodes_total");
}

// Candidate averaging window, absolute seconds.
struct MeasurementWindow {
    double w0_s = 0.0;
    double w1_s = 0.0;

    double length_s() const { return w1_s - w0_s; }
};

enum class WindowRule {
    fraction_of_middle, // window inside the middle of the run, minimum length
    full_runtime,       // window must equal the whole run
};

// Constraints of one measurement level. The minimum metered fraction of the
// system is kept as an exact rational so 7-of-56 compares equal to 1/8.
struct LevelRule {
    int level = 1;
    std::int64_t min_fraction_num = 1;
    std::int64_t min_fraction_den = 64;
    bool requires_network = false;
    WindowRule window_rule = WindowRule::fraction_of_middle;
    double middle_frac = 0.80;     // the "middle 80%" of the run
    double min_length_frac = 0.20; // of that middle span
};

// The three levels, in increasing rigor:
//   1: >= 1/64 of the nodes, no network, window >= 20% of the middle 80%
//   2: >= 1/8 of the nodes, network included, full runtime
//   3: full system, network included, full runtime
inline LevelRule level_rule(int level) {
    switch (level) {
    case 1: return {1, 1, 64, false, WindowRule::fraction_of_middle, 0.80, 0.20};
    case 2: return {2, 1, 8, true, WindowRule::full_runtime, 0.80, 0.20};
    case 3: return {3, 1, 1, true, WindowRule::full_runtime, 0.80, 0.20};
    default: throw domain_error("level must be 1, 2 or 3");
    }
}

// Rule-check outcome. ok iff the violation list is empty.
struct Verdict {
    bool ok = true;
    std::vector<std::string> violations;

    void add(std::string msg) {
        ok = false;
        violations.push_back(std::move(msg));
    }
};

// Bounds of the level-1 window region: the window must lie inside the middle
// middle_frac of the run and be at least min_length_frac of that span long.
struct L1WindowBounds {
    double lo_s;      // earliest allowed window start
    double hi_s;      // latest allowed window end
    double min_len_s; // minimum window length
};

inline L1WindowBounds l1_window_bounds(const RunRecord& run, const LevelRule& rule) {
    const double T = run.duration_s();
    const double edge = 0.5 * (1.0 - rule.middle_frac); // 0.10 for the middle 80%
    return {run.t_start_s + edge * T, run.t_end_s - edge * T,
            rule.min_length_frac * rule.middle_frac * T};
}

inline Verdict validate_window(const RunRecord& run, const MeasurementWindow& w, int level) {
    validate_run(run);
    const LevelRule rule = level_rule(level);
    const double T = run.duration_s();
    const double eps = 1e-9 * T;
    Verdict v;
    if (!(w.w0_s < w.w1_s)) {
        v.add("window is empty: w0 must be before w1");
        return v;
    }
    if (rule.window_rule == WindowRule::full_runtime) {
        if (std::abs(w.w0_s - run.t_start_s) > eps || std::abs(w.w1_s - run.t_end_s) > eps)
            v.add("level " + std::to_string(level) + " requires the full runtime [" +
                  std::to_string(run.t_start_s) + ", " + std::to_string(run.t_end_s) + "]");
        return v;
    }
    const L1WindowBounds b = l1_window_bounds(run, rule);
    if (w.w0_s < b.lo_s - eps)
        v.add("window starts at " + std::to_string(w.w0_s) + " s, before the middle-" +
              std::to_string(static_cast<int>(rule.middle_frac * 100)) + "% boundary " +
              std::to_string(b.lo_s) + " s");
    if (w.w1_s > b.hi_s + eps)
        v.add("window ends at " + std::to_string(w.w1_s) + " s, after the middle-" +
              std::to_string(static_cast<int>(rule.middle_frac * 100)) + "% boundary " +
              std::to_string(b.hi_s) + " s");
    if (w.length_s() < b.min_len_s - eps)
        v.add("window length " + std::to_string(w.length_s()) + " s is below the minimum " +
              std::to_string(b.min_len_s) + " s");
    return v;
}

inline Verdict validate_fraction(const RunRecord& run, int level) {
    validate_run(run);
    const LevelRule rule = level_rule(level);
    Verdict v;
    // Exact rational comparison: measured/total >= num/den.
    if (run.nodes_measured * rule.min_fraction_den < run.nodes_total * rule.min_fraction_num)
        v.add("only " + std::to_string(run.nodes_measured) + " of " +
              std::to_string(run.nodes_total) + " nodes measured, below the required " +
              std::to_string(rule.min_fraction_num) + "/" + std::to_string(rule.min_fraction_den) +
              " of the system");
    if (rule.requires_network && !run.network_included)
        v.add("level " + std::to_string(level) + " requires the network gear in the measurement");
    return v;
}

// The ranking quotient: achieved GFLOPS divided by average watts, reported
// in MFLOPS/W.
inline double efficiency_mflops_per_w(double performance_gflops, double avg_power_w) {
    if (!(avg_power_w > 0.0)) throw domain_error("efficiency: average power must be positive");
    return 1000.0 * performance_gflops / avg_power_w;
}

// Cross-check of a submission's claimed numbers against the recomputed
// efficiency. implied_avg_power_w is the power the claimed efficiency would
// require at the claimed performance; a large gap between it and the
// measured power is exactly the kind of inconsistency this flags.
struct ConsistencyCheck {
    bool ok = true;
    double tolerance = 0.01;
    std::optional<double> efficiency_rel_error; // |computed - reported| / reported
    std::optional<double> power_rel_error;      // same, via the implied power
    std::optional<double> implied_avg_power_w;  // 1000 * perf / reported efficiency
};

inline ConsistencyCheck consistency_check(const RunRecord& run, double computed_efficiency,
                                          double tolerance = 0.01) {
    if (!(tolerance >= 0.0)) throw domain_error("consistency_check: tolerance must be >= 0");
    if (!(computed_efficiency > 0.0))
        throw domain_error("consistency_check: computed efficiency must be positive");
    validate_run(run);
    ConsistencyCheck c;
    c.tolerance = tolerance;
    if (run.reported_efficiency_mflops_per_w) {
        const double reported = *run.reported_efficiency_mflops_per_w;
        if (!(reported > 0.0)) throw data_error("reported efficiency must be positive");
        c.implied_avg_power_w = 1000.0 * run.performance_gflops / reported;
        c.efficiency_rel_error = std::abs(computed_efficiency - reported) / reported;
        if (*c.efficiency_rel_error > tolerance) c.ok = false;
    }
    if (run.reported_avg_power_w) {
        const double reported = *run.reported_avg_power_w;
        if (!(reported > 0.0)) throw data_error("reported average power must be positive");
        const double implied_from_computed = 1000.0 * run.performance_gflops / computed_efficiency;
        c.power_rel_error = std::abs(implied_from_computed - reported) / reported;
        if (*c.power_rel_error > tolerance) c.ok = false;
    }
    return c;
}

// Everything a submission review needs in one record: both rule checks, the
// average power over the window, the efficiency it yields, and the
// consistency cross-check.
struct ComplianceReport {
    int level = 1;
    MeasurementWindow window;
    Verdict window_check;
    Verdict fraction_check;
    double avg_power_w = 0.0;
    double efficiency_mflops_per_w = 0.0;
    ConsistencyCheck consistency;

    bool ok() const { return window_check.ok && fraction_check.ok && consistency.ok; }
};

inline ComplianceReport compliance_report(const PowerTrace& trace, const RunRecord& run,
                                          const MeasurementWindow& w, int level,
                                          double tolerance = 0.01) {
    ComplianceReport r;
    r.level = level;
    r.window = w;
    r.window_check = validate_window(run, w, level);
    r.fraction_check = validate_fraction(run, level);
    r.avg_power_w = average_power_w(trace, w.w0_s, w.w1_s);
    r.efficiency_mflops_per_w = efficiency_mflops_per_w(run.performance_gflops, r.avg_power_w);
    r.consistency = consistency_check(run, r.efficiency_mflops_per_w, tolerance);
    return r;
}

} // namespace flopwatt
