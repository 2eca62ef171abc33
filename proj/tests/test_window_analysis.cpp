#include <catch2/catch_amalgamated.hpp>

#include "flopwatt/window_analysis.hpp"
#include "support.hpp"

using namespace flopwatt;

namespace {

PowerTrace plateau_decay_trace() {
    // 100 W plateau, then linear decay to 50 W over the last 30 s.
    PowerTrace t;
    t.meter_id = "synthetic";
    t.samples = {{0.0, 100.0}, {70.0, 100.0}, {100.0, 50.0}};
    return t;
}

RunRecord run_100s() {
    RunRecord run;
    run.t_start_s = 0.0;
    run.t_end_s = 100.0;
    run.performance_gflops = 301500.0;
    run.nodes_measured = 2;
    run.nodes_total = 56;
    return run;
}

} // namespace

TEST_CASE("efficiency_curve sweeps compliant window starts") {
    const std::vector<CurvePoint> curve =
        efficiency_curve(plateau_decay_trace(), run_100s(), 16.0, 1.0);
    REQUIRE(curve.size() == 65);
    CHECK_THAT(curve.front().start_s, Catch::Matchers::WithinAbs(10.0, 1e-6));
    CHECK_THAT(curve.front().avg_power_w, Catch::Matchers::WithinAbs(100.0, 1e-9));
    CHECK_THAT(curve.back().start_s, Catch::Matchers::WithinAbs(74.0, 1e-6));
    CHECK_THAT(curve.back().avg_power_w, Catch::Matchers::WithinAbs(80.0, 1e-9));
    // the sweep never starts before the middle-80% boundary or runs past it
    for (const CurvePoint& p : curve) {
        CHECK(p.start_s >= 10.0 - 1e-6);
        CHECK(p.start_s <= 74.0 + 1e-6);
    }
}

TEST_CASE("efficiency_curve validates its arguments") {
    const PowerTrace t = plateau_decay_trace();
    const RunRecord run = run_100s();
    CHECK_THROWS_AS(efficiency_curve(t, run, 16.0, 0.0), domain_error);
    CHECK_THROWS_AS(efficiency_curve(t, run, 16.0, -1.0), domain_error);
    CHECK_THROWS_AS(efficiency_curve(t, run, 15.0, 1.0), domain_error);  // below the minimum
    CHECK_THROWS_AS(efficiency_curve(t, run, 81.0, 1.0), domain_error);  // longer than the region

    PowerTrace late = t;
    late.samples[0].t_s = 5.0; // support starts after the run
    RunRecord shifted = run;
    CHECK_THROWS_AS(efficiency_curve(late, shifted, 16.0, 1.0), coverage_error);
}

TEST_CASE("min_power_window finds the decay tail on the plateau trace") {
    const auto [w, avg] = min_power_window(plateau_decay_trace(), run_100s(), 1);
    CHECK_THAT(w.w0_s, Catch::Matchers::WithinAbs(74.0, 1e-6));
    CHECK_THAT(w.w1_s, Catch::Matchers::WithinAbs(90.0, 1e-6));
    CHECK_THAT(avg, Catch::Matchers::WithinAbs(80.0, 1e-9));
}

TEST_CASE("min_power_window for levels 2 and 3 is the full runtime") {
    for (int level : {2, 3}) {
        const auto [w, avg] = min_power_window(plateau_decay_trace(), run_100s(), level);
        CHECK(w.w0_s == 0.0);
        CHECK(w.w1_s == 100.0);
        CHECK_THAT(avg, Catch::Matchers::WithinAbs(92.5, 1e-9));
    }
}

TEST_CASE("exploit_gap quantifies the tail exploit") {
    const WindowSweepResult r = exploit_gap(plateau_decay_trace(), run_100s());
    CHECK_THAT(r.fair_avg_power_w, Catch::Matchers::WithinAbs(92.5, 1e-9));
    CHECK_THAT(r.best_avg_power_w, Catch::Matchers::WithinAbs(80.0, 1e-9));
    CHECK_THAT(r.exploit_gap, Catch::Matchers::WithinAbs(0.13513513513513514, 1e-9));
    CHECK(r.curve.size() == 641); // default step T/1000
    for (const CurvePoint& p : r.curve) CHECK(r.best_avg_power_w <= p.avg_power_w);
}

TEST_CASE("exploit_gap is invariant to the sweep step") {
    const PowerTrace t = plateau_decay_trace();
    const RunRecord run = run_100s();
    const WindowSweepResult a = exploit_gap(t, run, 0.1);
    const WindowSweepResult b = exploit_gap(t, run, 0.037);
    CHECK(a.best_window.w0_s == b.best_window.w0_s);
    CHECK(a.best_window.w1_s == b.best_window.w1_s);
    CHECK(a.best_avg_power_w == b.best_avg_power_w);
    CHECK(a.fair_avg_power_w == b.fair_avg_power_w);
    CHECK_THROWS_AS(exploit_gap(t, run, -0.5), domain_error);
}

TEST_CASE("the optimizer lands on interior vertices, not just breakpoints") {
    // V-shaped trace: the best window straddles the dip at t=50 and starts
    // at 42, which is no breakpoint of the trace.
    PowerTrace t;
    t.meter_id = "vee";
    t.samples = {{0.0, 100.0}, {50.0, 0.0}, {100.0, 100.0}};
    const auto [w, avg] = min_power_window(t, run_100s(), 1);
    CHECK_THAT(w.w0_s, Catch::Matchers::WithinAbs(42.0, 1e-9));
    CHECK_THAT(w.w1_s, Catch::Matchers::WithinAbs(58.0, 1e-9));
    CHECK_THAT(avg, Catch::Matchers::WithinAbs(8.0, 1e-9));

    const WindowSweepResult r = exploit_gap(t, run_100s());
    CHECK_THAT(r.fair_avg_power_w, Catch::Matchers::WithinAbs(50.0, 1e-9));
    CHECK_THAT(r.exploit_gap, Catch::Matchers::WithinAbs(0.84, 1e-9));
}

TEST_CASE("a strictly decaying trace pushes the window to the latest slot") {
    PowerTrace t;
    t.meter_id = "decay";
    t.samples = {{0.0, 100.0}, {100.0, 0.0}};
    const auto [w, avg] = min_power_window(t, run_100s(), 1);
    CHECK_THAT(w.w0_s, Catch::Matchers::WithinAbs(74.0, 1e-6));
    CHECK_THAT(w.w1_s, Catch::Matchers::WithinAbs(90.0, 1e-6));
    CHECK_THAT(avg, Catch::Matchers::WithinAbs(18.0, 1e-9));
}

TEST_CASE("a constant trace has no exploit gap") {
    PowerTrace t;
    t.meter_id = "flat";
    t.samples = {{0.0, 333.0}, {100.0, 333.0}};
    const WindowSweepResult r = exploit_gap(t, run_100s());
    // zero up to one rounding of the energy quotient
    CHECK_THAT(r.exploit_gap, Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(r.best_avg_power_w, Catch::Matchers::WithinAbs(333.0, 1e-9));
    for (const CurvePoint& p : r.curve)
        CHECK_THAT(p.avg_power_w, Catch::Matchers::WithinAbs(333.0, 1e-9));
}

TEST_CASE("optimizer matches a brute-force window sweep on random traces") {
    std::mt19937_64 rng(777001);
    for (int iter = 0; iter < 40; ++iter) {
        const auto n = static_cast<std::size_t>(testsupport::uniform_int(rng, 2, 25));
        const double t0 = testsupport::uniform(rng, -100.0, 100.0);
        const double span = testsupport::uniform(rng, 10.0, 400.0);
        const PowerTrace trace = testsupport::random_trace(rng, n, t0, span);

        RunRecord run;
        run.t_start_s = trace.t_begin();
        run.t_end_s = trace.t_end();
        run.performance_gflops = 1000.0;
        run.nodes_measured = 1;
        run.nodes_total = 1;

        const L1WindowBounds b = l1_window_bounds(run, level_rule(1));
        const auto [w, avg] = min_power_window(trace, run, 1);

        // the window is rule-compliant
        const double eps = 1e-6 * run.duration_s();
        CHECK(w.w0_s >= b.lo_s - eps);
        CHECK(w.w1_s <= b.hi_s + eps);
        CHECK(w.length_s() >= b.min_len_s - eps);

        // the reported average is the window's true average
        const double recomputed = average_power_w(trace, w.w0_s, w.w1_s);
        CHECK_THAT(avg, Catch::Matchers::WithinAbs(recomputed,
                                                   1e-9 * std::max(1.0, std::abs(recomputed))));

        // and no grid window beats it
        const testsupport::BruteWindow brute = testsupport::brute_force_min_window(
            trace, b.lo_s, b.hi_s, b.min_len_s, span / 400.0);
        CHECK(avg <= brute.avg + 1e-9 * std::max(1.0, std::abs(brute.avg)));

        // the gap is never negative
        const WindowSweepResult r = exploit_gap(trace, run, span / 100.0);
        CHECK(r.exploit_gap >= 0.0);
    }
}

TEST_CASE("dense traces fall back to subsampled anchors without losing the optimum") {
    // 5000 breakpoints exceeds the exact-search anchor limit.
    std::mt19937_64 rng(991);
    PowerTrace trace;
    trace.meter_id = "dense";
    const std::size_t n = 5000;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * 0.1;
        // slow sine-like envelope with a clear dip plus jitter
        const double base = 100.0 + 60.0 * std::cos(t / 40.0);
        trace.samples.push_back({t, base + testsupport::uniform(rng, 0.0, 3.0)});
    }
    RunRecord run;
    run.t_start_s = 0.0;
    run.t_end_s = static_cast<double>(n - 1) * 0.1;
    run.performance_gflops = 1000.0;
    run.nodes_measured = 1;
    run.nodes_total = 1;

    const L1WindowBounds b = l1_window_bounds(run, level_rule(1));
    const auto [w, avg] = min_power_window(trace, run, 1);
    const testsupport::BruteWindow brute = testsupport::brute_force_min_window(
        trace, b.lo_s, b.hi_s, b.min_len_s, run.duration_s() / 500.0);
    CHECK(avg <= brute.avg + 1e-9 * std::max(1.0, std::abs(brute.avg)));
    const double recomputed = average_power_w(trace, w.w0_s, w.w1_s);
    CHECK_THAT(avg,
               Catch::Matchers::WithinAbs(recomputed, 1e-9 * std::max(1.0, std::abs(recomputed))));
}

TEST_CASE("window analysis demands trace coverage of the run") {
    PowerTrace t;
    t.samples = {{10.0, 5.0}, {60.0, 5.0}};
    t.meter_id = "short";
    CHECK_THROWS_AS(min_power_window(t, run_100s(), 1), coverage_error);
    CHECK_THROWS_AS(exploit_gap(t, run_100s()), coverage_error);
}
