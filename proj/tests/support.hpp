#pragma once

// Shared test helpers: seeded generators and independent oracles that the
// suites compare the library against.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "flopwatt/telemetry.hpp"

namespace testsupport {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// Random piecewise-linear trace with n samples at strictly increasing times
// on [t0, t0 + span].
inline flopwatt::PowerTrace random_trace(std::mt19937_64& rng, std::size_t n, double t0,
                                         double span, double pmax = 500.0) {
    std::vector<double> times;
    times.reserve(n);
    times.push_back(t0);
    times.push_back(t0 + span);
    while (times.size() < n) times.push_back(uniform(rng, t0, t0 + span));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    flopwatt::PowerTrace trace;
    trace.meter_id = "random";
    trace.samples.reserve(times.size());
    for (double t : times) trace.samples.push_back({t, uniform(rng, 0.0, pmax)});
    return trace;
}

// Trapezoid integral computed straight off the sample list with per-segment
// clipping; written independently of the library's prefix-sum walk.
inline double oracle_energy(const flopwatt::PowerTrace& trace, double a, double b) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < trace.samples.size(); ++i) {
        const flopwatt::PowerSample& s0 = trace.samples[i];
        const flopwatt::PowerSample& s1 = trace.samples[i + 1];
        const double lo = std::max(s0.t_s, a);
        const double hi = std::min(s1.t_s, b);
        if (!(lo < hi)) continue;
        const double slope = (s1.power_w - s0.power_w) / (s1.t_s - s0.t_s);
        const double p_lo = s0.power_w + slope * (lo - s0.t_s);
        const double p_hi = s0.power_w + slope * (hi - s0.t_s);
        sum += 0.5 * (p_lo + p_hi) * (hi - lo);
    }
    return sum;
}

struct BruteWindow {
    double a = 0.0;
    double b = 0.0;
    double avg = 0.0;
};

// Exhaustive grid sweep over (start, end) pairs; the certificate the analytic
// optimizer has to beat or match.
inline BruteWindow brute_force_min_window(const flopwatt::PowerTrace& trace, double lo, double hi,
                                          double min_len, double step) {
    BruteWindow best;
    best.avg = std::numeric_limits<double>::infinity();
    const double eps = 1e-9 * (hi - lo);
    const auto consider = [&](double a, double b) {
        b = std::min(b, hi);
        if (!(b - a >= min_len - eps)) return;
        const double avg = oracle_energy(trace, a, b) / (b - a);
        if (avg < best.avg) best = {a, b, avg};
    };
    for (double a = lo; a <= hi - min_len + eps; a += step) {
        for (double b = std::min(a + min_len, hi); b <= hi + eps; b += step) consider(a, b);
        consider(a, hi); // the grid rarely lands on the region edge exactly
    }
    return best;
}

} // namespace testsupport
