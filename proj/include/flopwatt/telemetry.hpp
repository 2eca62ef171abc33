#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flopwatt/errors.hpp"

namespace flopwatt {

// One meter reading: seconds since the trace epoch, instantaneous watts.
struct PowerSample {
    double t_s;
    double power_w;
};

// Time series from a single power meter. Samples are strictly increasing in
// time with non-negative power; between samples the trace is read as the
// piecewise-linear interpolant. All samples share the trace's epoch.
struct PowerTrace {
    std::string meter_id;
    std::optional<std::string> epoch; // opaque epoch tag from the file header
    std::vector<PowerSample> samples;

    double t_begin() const { return samples.front().t_s; }
    double t_end() const { return samples.back().t_s; }
    double span_s() const { return t_end() - t_begin(); }
};

// Throws data_error unless the trace holds at least one finite sample,
// strictly increasing in time, with power >= 0.
inline void validate_trace(const PowerTrace& trace) {
    if (trace.samples.empty())
        throw data_error("trace '" + trace.meter_id + "' has no samples");
    double prev_t = -std::numeric_limits<double>::infinity();
    for (const PowerSample& s : trace.samples) {
        if (!std::isfinite(s.t_s) || !std::isfinite(s.power_w))
            throw data_error("trace '" + trace.meter_id + "' has a non-finite sample");
        if (s.power_w < 0.0)
            throw data_error("trace '" + trace.meter_id + "' has negative power " +
                             std::to_string(s.power_w) + " W at t=" + std::to_string(s.t_s));
        if (s.t_s == prev_t)
            throw data_error("trace '" + trace.meter_id + "' has duplicate timestamp t=" +
                             std::to_string(s.t_s));
        if (s.t_s < prev_t)
            throw data_error("trace '" + trace.meter_id + "' is not sorted by time");
        prev_t = s.t_s;
    }
}

// Shifts every timestamp by offset_s (meter clock vs. run-log clock
// reconciliation). Negative offsets are fine.
inline PowerTrace align(PowerTrace trace, double offset_s) {
    for (PowerSample& s : trace.samples) s.t_s += offset_s;
    return trace;
}

namespace detail {

// Tolerance used when checking that an interval lies inside the sampled
// support. Absorbs float jitter from window arithmetic like t0 + 0.1*T;
// intervals genuinely outside the support still fail.
inline double support_slack(const PowerTrace& trace) {
    return 1e-9 * std::max(1.0, std::abs(trace.span_s()));
}

} // namespace detail

// Piecewise-linear interpolation at time t. t must lie within the sampled
// support (up to a tiny slack); otherwise throws coverage_error.
inline double power_at(const PowerTrace& trace, double t) {
    if (trace.samples.empty()) throw coverage_error("power_at: trace has no samples");
    const auto& s = trace.samples;
    const double slack = detail::support_slack(trace);
    if (t < s.front().t_s - slack || t > s.back().t_s + slack)
        throw coverage_error("power_at: t=" + std::to_string(t) + " outside trace support [" +
                             std::to_string(s.front().t_s) + ", " + std::to_string(s.back().t_s) + "]");
    t = std::clamp(t, s.front().t_s, s.back().t_s);
    auto it = std::upper_bound(s.begin(), s.end(), t,
                               [](double v, const PowerSample& a) { return v < a.t_s; });
    if (it == s.begin()) return s.front().power_w;
    if (it == s.end()) return s.back().power_w;
    const PowerSample& b = *it;
    const PowerSample& a = *(it - 1);
    const double u = (t - a.t_s) / (b.t_s - a.t_s);
    return a.power_w + u * (b.power_w - a.power_w);
}

// Trapezoidal integral of the piecewise-linear interpolant over [t0, t1],
// in joules. Boundary values are interpolated. The interval must lie inside
// the sampled support; anything beyond it is a coverage_error, never a
// silent clamp.
inline double energy_j(const PowerTrace& trace, double t0, double t1) {
    if (!(t0 < t1)) throw domain_error("energy: t0 must be strictly less than t1");
    if (trace.samples.size() < 2)
        throw coverage_error("energy: trace '" + trace.meter_id + "' needs at least 2 samples");
    const auto& s = trace.samples;
    const double slack = detail::support_slack(trace);
    if (t0 < s.front().t_s - slack || t1 > s.back().t_s + slack)
        throw coverage_error("energy: interval [" + std::to_string(t0) + ", " + std::to_string(t1) +
                             "] outside trace support [" + std::to_string(s.front().t_s) + ", " +
                             std::to_string(s.back().t_s) + "]");
    t0 = std::clamp(t0, s.front().t_s, s.back().t_s);
    t1 = std::clamp(t1, s.front().t_s, s.back().t_s);

    // First sample strictly after t0.
    std::size_t i = static_cast<std::size_t>(
        std::upper_bound(s.begin(), s.end(), t0,
                         [](double v, const PowerSample& a) { return v < a.t_s; }) -
        s.begin());

    double cur_t = t0;
    double cur_p = power_at(trace, t0);
    double total = 0.0;
    while (i < s.size() && s[i].t_s < t1) {
        total += 0.5 * (cur_p + s[i].power_w) * (s[i].t_s - cur_t);
        cur_t = s[i].t_s;
        cur_p = s[i].power_w;
        ++i;
    }
    const double end_p = power_at(trace, t1);
    total += 0.5 * (cur_p + end_p) * (t1 - cur_t);
    return total;
}

// Average power over [t0, t1] in watts: energy / duration.
inline double average_power_w(const PowerTrace& trace, double t0, double t1) {
    return energy_j(trace, t0, t1) / (t1 - t0);
}

// Pointwise sum of the piecewise-linear interpolants of several traces,
// sampled at the union of all timestamps restricted to the intersection of
// their supports. All traces must share one epoch; declared epochs that
// disagree are a data_error, disjoint supports a coverage_error.
inline PowerTrace merge_traces(const std::vector<PowerTrace>& traces) {
    if (traces.empty()) throw domain_error("merge_traces: no traces given");
    for (const PowerTrace& t : traces) validate_trace(t);
    if (traces.size() == 1) return traces.front();

    std::optional<std::string> epoch;
    for (const PowerTrace& t : traces) {
        if (!t.epoch) continue;
        if (epoch && *epoch != *t.epoch)
            throw data_error("merge_traces: traces declare different epochs ('" + *epoch +
                             "' vs '" + *t.epoch + "')");
        epoch = t.epoch;
    }

    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const PowerTrace& t : traces) {
        lo = std::max(lo, t.t_begin());
        hi = std::min(hi, t.t_end());
    }
    if (!(lo < hi)) throw coverage_error("merge_traces: trace supports do not overlap");

    std::vector<double> ts{lo, hi};
    for (const PowerTrace& t : traces)
        for (const PowerSample& s : t.samples)
            if (s.t_s > lo && s.t_s < hi) ts.push_back(s.t_s);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    PowerTrace merged;
    merged.epoch = epoch;
    for (std::size_t k = 0; k < traces.size(); ++k) {
        if (k > 0) merged.meter_id += "+";
        merged.meter_id += traces[k].meter_id;
    }
    merged.samples.reserve(ts.size());
    for (double t : ts) {
        double p = 0.0;
        for (const PowerTrace& tr : traces) p += power_at(tr, t);
        merged.samples.push_back({t, p});
    }
    return merged;
}

} // namespace flopwatt
