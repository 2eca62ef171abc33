#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "flopwatt/errors.hpp"

namespace flopwatt {

// One GPU board. Dual-chip boards expose each chip's memory and bandwidth
// separately; chips are the placement unit, boards the power unit. Memory
// and bandwidth use vendor GB = 1e9 bytes.
struct GpuSpec {
    std::string name;
    std::int64_t chips_per_board = 1;
    std::uint64_t memory_per_chip_bytes = 0;
    double bandwidth_per_chip_bytes_s = 0.0;
    double board_power_w = 0.0;
};

// A memory-bandwidth-bound kernel: sustained flops per byte moved, and the
// fraction of peak bandwidth it actually achieves.
struct KernelModel {
    double arithmetic_intensity_flops_per_byte = 0.0;
    double bandwidth_efficiency = 0.0;
};

// A 4-d lattice; the time extent nt shrinks as the simulated temperature
// rises. Storage cost per site is a caller-supplied model parameter.
struct LatticeJob {
    std::int64_t nx = 0;
    std::int64_t ny = 0;
    std::int64_t nz = 0;
    std::int64_t nt = 0;
    std::uint64_t bytes_per_site = 0;
};

struct NodeConfig {
    std::vector<GpuSpec> gpu_boards;
    std::string cpu;
    std::uint64_t host_memory_bytes = 0;
};

struct OperatingMode {
    std::string name; // "performance" or "efficiency"
    double performance_gflops = 0.0;
    double power_w = 0.0;
};

inline void validate_gpu(const GpuSpec& g) {
    if (g.chips_per_board < 1 || g.memory_per_chip_bytes == 0 ||
        !(g.bandwidth_per_chip_bytes_s > 0.0) || !(g.board_power_w > 0.0))
        throw data_error("gpu spec '" + g.name + "': all fields must be positive");
}

inline void validate_kernel(const KernelModel& k) {
    if (!(k.arithmetic_intensity_flops_per_byte > 0.0) ||
        !std::isfinite(k.arithmetic_intensity_flops_per_byte))
        throw data_error("kernel model: arithmetic intensity must be positive");
    if (!(k.bandwidth_efficiency > 0.0) || k.bandwidth_efficiency > 1.0)
        throw data_error("kernel model: bandwidth efficiency must be in (0, 1]");
}

inline void validate_node(const NodeConfig& node) {
    if (node.gpu_boards.empty()) throw data_error("node config: needs at least one GPU board");
    for (const GpuSpec& g : node.gpu_boards) validate_gpu(g);
}

inline void validate_job(const LatticeJob& job) {
    if (job.nx < 1 || job.ny < 1 || job.nz < 1 || job.nt < 1 || job.bytes_per_site == 0)
        throw data_error("lattice job: extents and bytes per site must be positive");
}

// Bandwidth roofline: a memory-bound kernel runs at achieved bandwidth times
// arithmetic intensity.
inline double kernel_perf_gflops(const GpuSpec& gpu, const KernelModel& k) {
    validate_gpu(gpu);
    validate_kernel(k);
    return gpu.bandwidth_per_chip_bytes_s * k.bandwidth_efficiency *
           k.arithmetic_intensity_flops_per_byte / 1e9;
}

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r))
        throw domain_error("lattice footprint overflows 64-bit bytes");
    return r;
}

// One placeable chip, unrolled from the board list.
struct Chip {
    std::size_t board = 0;
    std::uint64_t memory_bytes = 0;
    double bandwidth_bytes_s = 0.0;
};

inline std::vector<Chip> expand_chips(const NodeConfig& node) {
    std::vector<Chip> chips;
    for (std::size_t b = 0; b < node.gpu_boards.size(); ++b) {
        const GpuSpec& g = node.gpu_boards[b];
        for (std::int64_t c = 0; c < g.chips_per_board; ++c)
            chips.push_back({b, g.memory_per_chip_bytes, g.bandwidth_per_chip_bytes_s});
    }
    return chips;
}

} // namespace detail

inline std::uint64_t lattice_footprint_bytes(const LatticeJob& job) {
    validate_job(job);
    std::uint64_t r = detail::checked_mul(static_cast<std::uint64_t>(job.nx),
                                          static_cast<std::uint64_t>(job.ny));
    r = detail::checked_mul(r, static_cast<std::uint64_t>(job.nz));
    r = detail::checked_mul(r, static_cast<std::uint64_t>(job.nt));
    return detail::checked_mul(r, job.bytes_per_site);
}

enum class PlacementKind { single_chip, spread, infeasible };

struct Placement {
    PlacementKind kind = PlacementKind::infeasible;
    std::int64_t n_chips = 0;
    double predicted_gflops = 0.0;
};

// The lattice must fit in GPU memory; a job too big for one chip spreads
// over the fewest chips that hold it, paying a fixed communication penalty
// whenever more than one chip is involved.
inline Placement place_job(const LatticeJob& job, const NodeConfig& node, const KernelModel& k,
                           double multi_gpu_penalty = 0.2) {
    validate_node(node);
    validate_kernel(k);
    if (!(multi_gpu_penalty >= 0.0 && multi_gpu_penalty < 1.0))
        throw domain_error("place_job: penalty must be in [0, 1)");
    const std::uint64_t need = lattice_footprint_bytes(job);

    std::vector<detail::Chip> chips = detail::expand_chips(node);
    // Greedy: biggest-memory chips first, so n_chips is minimal.
    std::stable_sort(chips.begin(), chips.end(),
                     [](const detail::Chip& a, const detail::Chip& b) {
                         if (a.memory_bytes != b.memory_bytes) return a.memory_bytes > b.memory_bytes;
                         return a.bandwidth_bytes_s > b.bandwidth_bytes_s;
                     });
    std::uint64_t have = 0;
    double perf = 0.0;
    for (std::size_t i = 0; i < chips.size(); ++i) {
        have += chips[i].memory_bytes;
        perf += chips[i].bandwidth_bytes_s * k.bandwidth_efficiency *
                k.arithmetic_intensity_flops_per_byte / 1e9;
        if (have >= need) {
            Placement p;
            p.n_chips = static_cast<std::int64_t>(i + 1);
            p.kind = p.n_chips == 1 ? PlacementKind::single_chip : PlacementKind::spread;
            p.predicted_gflops = p.n_chips > 1 ? perf * (1.0 - multi_gpu_penalty) : perf;
            return p;
        }
    }
    return Placement{}; // exceeds total node GPU memory
}

// Outcome of packing independent jobs onto chips, one job per chip.
struct ThroughputReport {
    double total_gflops = 0.0;
    std::vector<std::int64_t> job_chip; // chip index per input job; -1 if queued
    std::int64_t unplaced = 0;
};

// First-fit decreasing: largest jobs claim chips first, each on the first
// free chip (inventory order) with enough memory. Chips run independent
// lattices in parallel, so occupied chips contribute their full roofline
// rate.
inline ThroughputReport node_throughput(const NodeConfig& node, const std::vector<LatticeJob>& jobs,
                                        const KernelModel& k) {
    validate_node(node);
    validate_kernel(k);
    const std::vector<detail::Chip> chips = detail::expand_chips(node);

    std::vector<std::size_t> order(jobs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<std::uint64_t> need(jobs.size());
    for (std::size_t i = 0; i < jobs.size(); ++i) need[i] = lattice_footprint_bytes(jobs[i]);
    std::stable_sort(order.begin(), order.end(),
                     [&need](std::size_t a, std::size_t b) { return need[a] > need[b]; });

    ThroughputReport report;
    report.job_chip.assign(jobs.size(), -1);
    std::vector<bool> busy(chips.size(), false);
    for (std::size_t j : order) {
        for (std::size_t c = 0; c < chips.size(); ++c) {
            if (busy[c] || chips[c].memory_bytes < need[j]) continue;
            busy[c] = true;
            report.job_chip[j] = static_cast<std::int64_t>(c);
            report.total_gflops += chips[c].bandwidth_bytes_s * k.bandwidth_efficiency *
                                   k.arithmetic_intensity_flops_per_byte / 1e9;
            break;
        }
        if (report.job_chip[j] < 0) ++report.unplaced;
    }
    return report;
}

// Picks the mode with the best flops per watt. Ratio ties go to the faster
// mode, then to the one named "performance", then to input order.
inline OperatingMode mode_select(const std::vector<OperatingMode>& modes) {
    if (modes.empty()) throw domain_error("mode_select: no modes given");
    for (const OperatingMode& m : modes)
        if (!(m.performance_gflops > 0.0) || !(m.power_w > 0.0))
            throw data_error("operating mode '" + m.name + "': performance and power must be positive");
    const OperatingMode* best = &modes.front();
    double best_ratio = best->performance_gflops / best->power_w;
    for (std::size_t i = 1; i < modes.size(); ++i) {
        const OperatingMode& m = modes[i];
        const double ratio = m.performance_gflops / m.power_w;
        const bool wins =
            ratio > best_ratio ||
            (ratio == best_ratio &&
             (m.performance_gflops > best->performance_gflops ||
              (m.performance_gflops == best->performance_gflops && m.name == "performance" &&
               best->name != "performance")));
        if (wins) {
            best = &m;
            best_ratio = ratio;
        }
    }
    return *best;
}

} // namespace flopwatt
