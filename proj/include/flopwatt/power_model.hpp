#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "flopwatt/errors.hpp"
#include "flopwatt/telemetry.hpp"

namespace flopwatt {

// Fan power as a piecewise-linear function of compute load. Duty cycles are
// folded into the wattage: downstream math only ever needs watts.
struct FanCurvePoint {
    double load = 0.0; // fraction in [0, 1]
    double power_w = 0.0;
};

struct FanCurve {
    std::vector<FanCurvePoint> points;
};

inline void validate_fan_curve(const FanCurve& curve) {
    if (curve.points.empty()) throw data_error("fan curve: needs at least one point");
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const FanCurvePoint& p = curve.points[i];
        if (!std::isfinite(p.load) || p.load < 0.0 || p.load > 1.0)
            throw data_error("fan curve: load must be in [0, 1]");
        if (!std::isfinite(p.power_w) || p.power_w < 0.0)
            throw data_error("fan curve: power must be non-negative");
        if (i > 0) {
            if (!(curve.points[i - 1].load < p.load))
                throw data_error("fan curve: loads must be strictly increasing");
            if (p.power_w < curve.points[i - 1].power_w)
                throw data_error("fan curve: power must be non-decreasing in load");
        }
    }
}

// Linear interpolation between curve points, clamped to the end values
// outside the covered load range.
inline double fan_power_w(const FanCurve& curve, double load) {
    validate_fan_curve(curve);
    if (!std::isfinite(load) || load < 0.0 || load > 1.0)
        throw domain_error("fan_power: load must be in [0, 1]");
    const std::vector<FanCurvePoint>& pts = curve.points;
    if (load <= pts.front().load) return pts.front().power_w;
    if (load >= pts.back().load) return pts.back().power_w;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (load <= pts[i].load) {
            const FanCurvePoint& a = pts[i - 1];
            const FanCurvePoint& b = pts[i];
            const double f = (load - a.load) / (b.load - a.load);
            return a.power_w + f * (b.power_w - a.power_w);
        }
    }
    return pts.back().power_w; // unreachable
}

// Per-component wall-power budget of one node. Only counts and watts; which
// numbers go in is configuration, not a constant of this library.
struct ComponentPower {
    double cpu_w_each = 0.0;
    std::int64_t cpu_count = 0;
    double gpu_w_each = 0.0;
    std::int64_t gpu_count = 0;
    double memory_w = 0.0;
    double chipset_w = 0.0;
    double network_w = 0.0;
    double management_w = 0.0;
    double usb_w = 0.0;
    double disk_w = 0.0;
    double ethernet_w = 0.0;
    FanCurve fan;
};

inline void validate_component_power(const ComponentPower& m) {
    const double parts[] = {m.cpu_w_each, m.gpu_w_each,  m.memory_w, m.chipset_w, m.network_w,
                            m.management_w, m.usb_w,     m.disk_w,   m.ethernet_w};
    for (double w : parts)
        if (!std::isfinite(w) || w < 0.0)
            throw data_error("component power: all wattages must be non-negative");
    if (m.cpu_count < 0 || m.gpu_count < 0)
        throw data_error("component power: counts must be non-negative");
    validate_fan_curve(m.fan);
}

// Firmware/OS measures that remove a component's draw entirely: suspending
// the USB tree, powering down disks plus their controller, and disabling the
// onboard Ethernet ports.
struct SavingsToggles {
    bool usb_suspend = false;
    bool disk_off = false;
    bool ethernet_off = false;
};

inline double node_power_w(const ComponentPower& m, double load,
                           const SavingsToggles& toggles = {}) {
    validate_component_power(m);
    if (!std::isfinite(load) || load < 0.0 || load > 1.0)
        throw domain_error("node_power: load must be in [0, 1]");
    double total = m.cpu_w_each * static_cast<double>(m.cpu_count) +
                   m.gpu_w_each * static_cast<double>(m.gpu_count) + m.memory_w + m.chipset_w +
                   m.network_w + m.management_w;
    if (!toggles.usb_suspend) total += m.usb_w;
    if (!toggles.disk_off) total += m.disk_w;
    if (!toggles.ethernet_off) total += m.ethernet_w;
    total += fan_power_w(m.fan, load);
    return total;
}

// Shape parameters for a synthetic dense-solver power profile: a short ramp
// up from idle draw, a long plateau at full load, then a straight decline as
// the trailing factorization panels shrink.
struct HplTraceParams {
    double duration_s = 0.0;
    double plateau_w = 0.0;
    double tail_start = 1.0;  // fraction of duration where the decay begins
    double tail_end_w = 0.0;  // power at the very end of the run
    double ramp_duration_s = 0.0;
    double noise_amplitude_w = 0.0;
    std::uint64_t seed = 0;
};

inline void validate_hpl_params(const HplTraceParams& p) {
    if (!(p.duration_s > 0.0) || !std::isfinite(p.duration_s))
        throw domain_error("synth params: duration must be positive");
    if (!std::isfinite(p.plateau_w) || p.plateau_w < 0.0)
        throw domain_error("synth params: plateau power must be non-negative");
    if (!(p.tail_start >= 0.0 && p.tail_start <= 1.0))
        throw domain_error("synth params: tail_start must be in [0, 1]");
    if (!std::isfinite(p.tail_end_w) || p.tail_end_w < 0.0 || p.tail_end_w > p.plateau_w)
        throw domain_error("synth params: tail end power must be in [0, plateau]");
    if (!std::isfinite(p.ramp_duration_s) || p.ramp_duration_s < 0.0)
        throw domain_error("synth params: ramp duration must be non-negative");
    if (p.ramp_duration_s > p.tail_start * p.duration_s)
        throw domain_error("synth params: ramp must end before the tail starts");
    if (!std::isfinite(p.noise_amplitude_w) || p.noise_amplitude_w < 0.0)
        throw domain_error("synth params: noise amplitude must be non-negative");
}

namespace detail {

// Noise-free profile value at time t.
inline double hpl_profile_w(const HplTraceParams& p, double t) {
    const double tail_t = p.tail_start * p.duration_s;
    if (t < p.ramp_duration_s)
        return p.tail_end_w + (p.plateau_w - p.tail_end_w) * (t / p.ramp_duration_s);
    if (t <= tail_t || tail_t >= p.duration_s) return p.plateau_w;
    const double f = (t - tail_t) / (p.duration_s - tail_t);
    return p.plateau_w + (p.tail_end_w - p.plateau_w) * f;
}

// One uniform draw in [0, 1) using the top 53 bits of the engine output.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace detail

// Samples the profile on a regular dt grid with the shape breakpoints (ramp
// end, tail start, run end) always included, so the piecewise-linear
// interpolant of the result reproduces the profile exactly when noise is
// zero. Identical params give bitwise-identical traces.
inline PowerTrace synth_hpl_trace(const HplTraceParams& params, double dt_s) {
    validate_hpl_params(params);
    if (!(dt_s > 0.0) || !std::isfinite(dt_s))
        throw domain_error("synth: dt must be positive");
    if (dt_s > params.duration_s / 10.0)
        throw domain_error("synth: dt must be at most duration/10");

    std::vector<double> times;
    const std::int64_t steps = static_cast<std::int64_t>(params.duration_s / dt_s);
    times.reserve(static_cast<std::size_t>(steps) + 4);
    for (std::int64_t k = 0; k <= steps; ++k) times.push_back(static_cast<double>(k) * dt_s);
    times.push_back(params.duration_s);
    if (params.ramp_duration_s > 0.0) times.push_back(params.ramp_duration_s);
    const double tail_t = params.tail_start * params.duration_s;
    if (tail_t > 0.0 && tail_t < params.duration_s) times.push_back(tail_t);
    std::sort(times.begin(), times.end());
    // Drop grid points that collide with a breakpoint up to rounding jitter.
    const double snap = dt_s * 1e-9;
    std::vector<double> grid;
    grid.reserve(times.size());
    for (double t : times)
        if (grid.empty() || t - grid.back() > snap) grid.push_back(std::min(t, params.duration_s));

    std::mt19937_64 rng(params.seed);
    PowerTrace trace;
    trace.meter_id = "synth";
    trace.samples.reserve(grid.size());
    for (double t : grid) {
        double p = detail::hpl_profile_w(params, t);
        if (params.noise_amplitude_w > 0.0)
            p += (2.0 * detail::uniform01(rng) - 1.0) * params.noise_amplitude_w;
        // A meter never reports a negative draw; clip noise excursions.
        trace.samples.push_back({t, std::max(0.0, p)});
    }
    validate_trace(trace);
    return trace;
}

} // namespace flopwatt
