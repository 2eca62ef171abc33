#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "flopwatt/errors.hpp"
#include "flopwatt/methodology.hpp"
#include "flopwatt/telemetry.hpp"

namespace flopwatt {

// One point of the window sweep: average power of the window starting here.
struct CurvePoint {
    double start_s;
    double avg_power_w;
};

// Outcome of the exploit-gap analysis of a level-1 measurement. fair is the
// full-runtime average (the level-3 value); best is the lowest average any
// rule-compliant level-1 window can reach; the gap is the relative power
// reduction window placement alone can fake.
struct WindowSweepResult {
    std::vector<CurvePoint> curve;
    MeasurementWindow best_window;
    double best_avg_power_w = 0.0;
    double fair_avg_power_w = 0.0;
    double exploit_gap = 0.0; // (fair - best) / fair, clamped at 0
};

namespace detail {

// Prefix-integral view of a trace restricted to [lo, hi]: evaluates the
// interpolant, its antiderivative and window averages in O(log n).
class TraceIntegral {
public:
    TraceIntegral(const PowerTrace& trace, double lo, double hi) {
        t_.push_back(lo);
        p_.push_back(power_at(trace, lo));
        for (const PowerSample& s : trace.samples)
            if (s.t_s > lo && s.t_s < hi) {
                t_.push_back(s.t_s);
                p_.push_back(s.power_w);
            }
        t_.push_back(hi);
        p_.push_back(power_at(trace, hi));

        const std::size_t n = t_.size();
        slope_.resize(n - 1);
        prefix_.resize(n);
        prefix_[0] = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double dt = t_[i + 1] - t_[i];
            slope_[i] = (p_[i + 1] - p_[i]) / dt;
            prefix_[i + 1] = prefix_[i] + 0.5 * (p_[i] + p_[i + 1]) * dt;
        }
    }

    std::size_t points() const { return t_.size(); }
    double lo() const { return t_.front(); }
    double hi() const { return t_.back(); }
    double time(std::size_t i) const { return t_[i]; }
    double power(std::size_t i) const { return p_[i]; }
    double prefix(std::size_t i) const { return prefix_[i]; }
    double slope(std::size_t i) const { return slope_[i]; } // of segment [t_i, t_i+1]

    // Segment index containing x (clamped to the last segment).
    std::size_t locate(double x) const {
        auto it = std::upper_bound(t_.begin(), t_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - t_.begin());
        if (i > 0) --i;
        return std::min(i, t_.size() - 2);
    }

    double value(double x) const {
        const std::size_t i = locate(x);
        return p_[i] + slope_[i] * (x - t_[i]);
    }

    // Antiderivative relative to lo().
    double integral(double x) const {
        const std::size_t i = locate(x);
        const double w = x - t_[i];
        return prefix_[i] + p_[i] * w + 0.5 * slope_[i] * w * w;
    }

    double avg(double a, double b) const { return (integral(b) - integral(a)) / (b - a); }

private:
    std::vector<double> t_, p_, slope_, prefix_;
};

struct BestWindow {
    double a = 0.0;
    double b = 0.0;
    double avg = std::numeric_limits<double>::infinity();
};

inline void consider_window(const TraceIntegral& f, double min_len, double a, double b,
                            BestWindow& best) {
    if (!std::isfinite(a) || !std::isfinite(b)) return;
    const double eps = 1e-9 * (f.hi() - f.lo());
    a = std::clamp(a, f.lo(), f.hi());
    b = std::clamp(b, f.lo(), f.hi());
    if (!(b - a >= min_len - eps)) return;
    const double avg = f.avg(a, b);
    if (avg < best.avg ||
        (avg == best.avg && (a < best.a || (a == best.a && b < best.b))))
        best = {a, b, avg};
}

// Real roots of A x^2 + B x + C, ascending. Spurious roots are harmless
// here: every root is range-checked and merely evaluated as a candidate.
inline int real_roots(double A, double B, double C, double out[2]) {
    if (A == 0.0) {
        if (B == 0.0) return 0;
        out[0] = -C / B;
        return 1;
    }
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0) return 0;
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (B + std::copysign(sq, B));
    double r0 = (q != 0.0) ? C / q : -B / (2.0 * A);
    double r1 = q / A;
    if (r0 > r1) std::swap(r0, r1);
    out[0] = r0;
    out[1] = r1;
    return (r0 == r1) ? 1 : 2;
}

// Stationary windows with the left edge fixed at a and the right edge
// interior to segment i: d/db avg(a,b) = 0 <=> p(b)(b-a) = F(b)-F(a).
inline void stationary_right_edge(const TraceIntegral& f, double min_len, double a, double Fa,
                                  std::size_t i, BestWindow& best) {
    const double s = f.slope(i);
    if (s == 0.0) return; // flat segment: covered by its endpoints
    const double u = f.time(i);
    const double D = u - a;
    double w[2];
    const int n = real_roots(0.5 * s, s * D, f.power(i) * D - f.prefix(i) + Fa, w);
    for (int k = 0; k < n; ++k) {
        const double b = u + w[k];
        if (w[k] > 0.0 && b < f.time(i + 1)) consider_window(f, min_len, a, b, best);
    }
}

// Mirror image: right edge fixed at b, left edge interior to segment j.
inline void stationary_left_edge(const TraceIntegral& f, double min_len, double b, double Fb,
                                 std::size_t j, BestWindow& best) {
    const double s = f.slope(j);
    if (s == 0.0) return;
    const double u = f.time(j);
    const double D = b - u;
    double w[2];
    const int n = real_roots(-0.5 * s, s * D, f.power(j) * D - Fb + f.prefix(j), w);
    for (int k = 0; k < n; ++k) {
        const double a = u + w[k];
        if (w[k] > 0.0 && a < f.time(j + 1)) consider_window(f, min_len, a, b, best);
    }
}

// Fully interior stationary windows: both edges strictly inside segments j
// and i, with p(a) = p(b) = avg(a,b).
inline void stationary_both_edges(const TraceIntegral& f, double min_len, std::size_t j,
                                  std::size_t i, BestWindow& best) {
    const double si = f.slope(i);
    if (si == 0.0) return; // p(b) constant: covered by the edge-anchored cases
    const double sj = f.slope(j);
    const double qi = f.power(i), qj = f.power(j);
    const double ui = f.time(i), uj = f.time(j);
    const double c0 = (qj - qi) / si, c1 = sj / si; // wb = c0 + c1*wa from p(a)=p(b)
    const double d0 = ui - uj + c0, d1 = c1 - 1.0;  // b-a  = d0 + d1*wa
    const double A = sj * d1 - 0.5 * si * c1 * c1 + 0.5 * sj;
    const double B = qj * d1 + sj * d0 - qi * c1 - si * c0 * c1 + qj;
    const double C = qj * d0 - f.prefix(i) - qi * c0 - 0.5 * si * c0 * c0 + f.prefix(j);
    double w[2];
    const int n = real_roots(A, B, C, w);
    for (int k = 0; k < n; ++k) {
        const double wa = w[k];
        const double wb = c0 + c1 * wa;
        if (!(wa > 0.0 && uj + wa < f.time(j + 1))) continue;
        if (!(wb > 0.0 && ui + wb < f.time(i + 1))) continue;
        consider_window(f, min_len, uj + wa, ui + wb, best);
    }
}

// Windows longer than min_len over the anchor index ranges: breakpoint pairs
// plus the stationary candidates anchored or contained there. stride > 1
// subsamples the anchors (used for very dense traces, then refined).
inline void search_window_pairs(const TraceIntegral& f, double min_len, std::size_t a0,
                                std::size_t a1, std::size_t b0, std::size_t b1,
                                std::size_t stride, BestWindow& best) {
    const std::size_t last = f.points() - 1;
    a1 = std::min(a1, last);
    b1 = std::min(b1, last);
    for (std::size_t ia = a0; ia <= a1; ia += stride) {
        const double a = f.time(ia);
        const double Fa = f.prefix(ia);
        for (std::size_t ib = std::max(ia, b0); ib <= b1; ib += stride) {
            consider_window(f, min_len, a, f.time(ib), best);
            if (ib < last) {
                stationary_right_edge(f, min_len, a, Fa, ib, best);
                if (ia < last) {
                    stationary_left_edge(f, min_len, f.time(ib + 1), f.prefix(ib + 1), ia, best);
                    stationary_both_edges(f, min_len, ia, ib, best);
                }
            }
        }
    }
}

// Global minimum-average window of length >= min_len inside [f.lo, f.hi].
//
// Candidates follow the stationarity structure of avg(a,b) on a piecewise-
// linear trace: minimal-length windows at breakpoint-aligned positions plus
// the interior vertices of the per-cell quadratic window energy, and longer
// windows anchored at breakpoints or at interior points where the edge power
// equals the window average. This enumeration is exact up to the anchor
// limit; denser traces fall back to subsampled anchors with local
// refinement around the best pair found.
inline BestWindow min_average_window(const TraceIntegral& f, double min_len) {
    const double lo = f.lo(), hi = f.hi();
    BestWindow best;
    consider_window(f, min_len, lo, lo + min_len, best);

    // Minimal-length windows: starts where either edge sits on a breakpoint.
    const double last_start = hi - min_len;
    std::vector<double> starts{lo, last_start};
    for (std::size_t i = 0; i < f.points(); ++i) {
        const double u = f.time(i);
        if (u >= lo && u <= last_start) starts.push_back(u);
        if (u - min_len >= lo && u - min_len <= last_start) starts.push_back(u - min_len);
    }
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
    for (double a : starts) consider_window(f, min_len, a, a + min_len, best);
    // Interior vertex of the quadratic window energy on each start cell:
    // d/da of the window energy is p(a+L) - p(a), linear on the cell.
    for (std::size_t k = 0; k + 1 < starts.size(); ++k) {
        const double s1 = starts[k], s2 = starts[k + 1];
        if (!(s2 > s1)) continue;
        const double d1 = f.value(s1 + min_len) - f.value(s1);
        const double d2 = f.value(s2 + min_len) - f.value(s2);
        if ((d1 < 0.0 && d2 > 0.0) || (d1 > 0.0 && d2 < 0.0)) {
            const double r = s1 + (s2 - s1) * d1 / (d1 - d2);
            consider_window(f, min_len, r, r + min_len, best);
        }
    }

    // Longer windows.
    const std::size_t m = f.points();
    constexpr std::size_t kExactAnchorLimit = 3000;
    if (m <= kExactAnchorLimit) {
        search_window_pairs(f, min_len, 0, m - 1, 0, m - 1, 1, best);
    } else {
        const std::size_t stride = (m + 1499) / 1500;
        search_window_pairs(f, min_len, 0, m - 1, 0, m - 1, stride, best);
        // Safety net at the default sweep resolution, then full-resolution
        // refinement around the best anchors found so far.
        for (std::size_t k = 0; k <= 1000; ++k) {
            const double a = lo + (last_start - lo) * static_cast<double>(k) / 1000.0;
            consider_window(f, min_len, a, a + min_len, best);
        }
        const std::size_t ia = f.locate(best.a);
        const std::size_t ib = f.locate(best.b);
        const std::size_t pad = 2 * stride;
        search_window_pairs(f, min_len, ia > pad ? ia - pad : 0, ia + pad,
                            ib > pad ? ib - pad : 0, ib + pad, 1, best);
    }
    return best;
}

inline void require_covers_run(const PowerTrace& trace, const RunRecord& run) {
    const double slack = support_slack(trace);
    if (run.t_start_s < trace.t_begin() - slack || run.t_end_s > trace.t_end() + slack)
        throw coverage_error("trace [" + std::to_string(trace.t_begin()) + ", " +
                             std::to_string(trace.t_end()) + "] does not cover the run [" +
                             std::to_string(run.t_start_s) + ", " + std::to_string(run.t_end_s) +
                             "]");
}

} // namespace detail

// Average power of the window [start, start + window_length] for every
// compliant level-1 start position on the step grid, plus the exact last
// compliant start. window_length must satisfy the level-1 minimum and fit
// inside the middle of the run.
inline std::vector<CurvePoint> efficiency_curve(const PowerTrace& trace, const RunRecord& run,
                                                double window_length_s, double step_s) {
    validate_run(run);
    detail::require_covers_run(trace, run);
    if (!(step_s > 0.0)) throw domain_error("efficiency_curve: step must be positive");
    const L1WindowBounds b = l1_window_bounds(run, level_rule(1));
    const double eps = 1e-9 * run.duration_s();
    if (window_length_s < b.min_len_s - eps)
        throw domain_error("efficiency_curve: window length below the level-1 minimum");
    if (window_length_s > b.hi_s - b.lo_s + eps)
        throw domain_error("efficiency_curve: window length exceeds the compliant region");

    const detail::TraceIntegral f(trace, b.lo_s, b.hi_s);
    const double len = std::min(window_length_s, b.hi_s - b.lo_s);
    const double last_start = b.hi_s - len;
    std::vector<CurvePoint> curve;
    for (std::size_t k = 0;; ++k) {
        const double a = b.lo_s + static_cast<double>(k) * step_s;
        if (a > last_start + eps) break;
        curve.push_back({a, f.avg(a, a + len)});
    }
    if (curve.empty() || curve.back().start_s < last_start - eps)
        curve.push_back({last_start, f.avg(last_start, b.hi_s)});
    return curve;
}

// The rule-compliant window with the lowest average power. For level 2/3
// that is the full runtime by definition; for level 1 the minimum over all
// windows inside the middle 80% with length >= 20% of it.
inline std::pair<MeasurementWindow, double> min_power_window(const PowerTrace& trace,
                                                             const RunRecord& run, int level) {
    validate_run(run);
    detail::require_covers_run(trace, run);
    const LevelRule rule = level_rule(level);
    if (rule.window_rule == WindowRule::full_runtime) {
        return {{run.t_start_s, run.t_end_s},
                average_power_w(trace, run.t_start_s, run.t_end_s)};
    }
    const L1WindowBounds b = l1_window_bounds(run, rule);
    const detail::TraceIntegral f(trace, b.lo_s, b.hi_s);
    const detail::BestWindow best = detail::min_average_window(f, b.min_len_s);
    return {{best.a, best.b}, best.avg};
}

// Full exploit analysis of a level-1 measurement: sweep curve (default step
// duration/1000), best compliant window, fair full-runtime average and the
// relative gap between them.
inline WindowSweepResult exploit_gap(const PowerTrace& trace, const RunRecord& run,
                                     double step_s = 0.0) {
    validate_run(run);
    detail::require_covers_run(trace, run);
    const double T = run.duration_s();
    if (step_s < 0.0) throw domain_error("exploit_gap: step must be positive");
    if (step_s == 0.0) step_s = T / 1000.0;

    const L1WindowBounds b = l1_window_bounds(run, level_rule(1));
    const detail::TraceIntegral f(trace, b.lo_s, b.hi_s);
    detail::BestWindow best = detail::min_average_window(f, b.min_len_s);

    WindowSweepResult r;
    r.curve = efficiency_curve(trace, run, b.min_len_s, step_s);
    // Fold the curve into the optimum so the published best is never above
    // any published curve entry, down to the last bit.
    for (const CurvePoint& c : r.curve)
        detail::consider_window(f, b.min_len_s, c.start_s, c.start_s + b.min_len_s, best);

    r.best_window = {best.a, best.b};
    r.best_avg_power_w = best.avg;
    r.fair_avg_power_w = average_power_w(trace, run.t_start_s, run.t_end_s);
    r.exploit_gap = r.fair_avg_power_w > 0.0
                        ? std::max(0.0, (r.fair_avg_power_w - r.best_avg_power_w) /
                                            r.fair_avg_power_w)
                        : 0.0;
    return r;
}

} // namespace flopwatt
