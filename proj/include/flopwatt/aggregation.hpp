#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "flopwatt/errors.hpp"

namespace flopwatt {

// Efficiency of one node from a single-node benchmark run.
struct NodeEfficiencySample {
    std::string node_id;
    double efficiency_mflops_per_w = 0.0;
};

// Spread of per-node efficiencies. The population standard deviation is the
// default spread measure; the sample (n-1) variant is carried alongside.
struct VariabilityStats {
    double mean = 0.0;
    double stddev = 0.0;        // population
    double stddev_sample = 0.0; // Bessel-corrected; 0 for n == 1
    double rel_stddev = 0.0;    // stddev / mean
    double min = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};

inline void validate_samples(const std::vector<NodeEfficiencySample>& samples) {
    if (samples.empty()) throw domain_error("node efficiency samples: empty input");
    for (const NodeEfficiencySample& s : samples)
        if (!(s.efficiency_mflops_per_w > 0.0) || !std::isfinite(s.efficiency_mflops_per_w))
            throw data_error("node '" + s.node_id + "': efficiency must be positive and finite");
}

inline VariabilityStats variability(const std::vector<NodeEfficiencySample>& samples) {
    validate_samples(samples);
    VariabilityStats v;
    v.n = samples.size();
    v.min = v.max = samples.front().efficiency_mflops_per_w;
    double sum = 0.0;
    for (const NodeEfficiencySample& s : samples) {
        sum += s.efficiency_mflops_per_w;
        v.min = std::min(v.min, s.efficiency_mflops_per_w);
        v.max = std::max(v.max, s.efficiency_mflops_per_w);
    }
    v.mean = sum / static_cast<double>(v.n);
    double ss = 0.0;
    for (const NodeEfficiencySample& s : samples) {
        const double d = s.efficiency_mflops_per_w - v.mean;
        ss += d * d;
    }
    v.stddev = std::sqrt(ss / static_cast<double>(v.n));
    v.stddev_sample = v.n > 1 ? std::sqrt(ss / static_cast<double>(v.n - 1)) : 0.0;
    v.rel_stddev = v.stddev / v.mean;
    return v;
}

// The k node ids whose efficiency is closest to the median efficiency,
// ordered by distance. The median is the lower-middle element for even n;
// distance ties go to the smaller node_id. Output does not depend on input
// order.
inline std::vector<std::string> select_representative_nodes(
    std::vector<NodeEfficiencySample> samples, std::size_t k) {
    validate_samples(samples);
    if (k < 1 || k > samples.size())
        throw domain_error("select_representative_nodes: need 1 <= k <= n");
    std::sort(samples.begin(), samples.end(),
              [](const NodeEfficiencySample& a, const NodeEfficiencySample& b) {
                  if (a.efficiency_mflops_per_w != b.efficiency_mflops_per_w)
                      return a.efficiency_mflops_per_w < b.efficiency_mflops_per_w;
                  return a.node_id < b.node_id;
              });
    const double median = samples[(samples.size() - 1) / 2].efficiency_mflops_per_w;
    std::sort(samples.begin(), samples.end(),
              [median](const NodeEfficiencySample& a, const NodeEfficiencySample& b) {
                  const double da = std::abs(a.efficiency_mflops_per_w - median);
                  const double db = std::abs(b.efficiency_mflops_per_w - median);
                  if (da != db) return da < db;
                  return a.node_id < b.node_id;
              });
    std::vector<std::string> ids;
    ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) ids.push_back(samples[i].node_id);
    return ids;
}

// Scales the power measured on a node subset up to the whole machine and
// adds the separately metered network gear:
//   (measured / nodes_measured) * nodes_total + network_power.
inline double extrapolate_power_w(double measured_avg_power_w, std::int64_t nodes_measured,
                                  std::int64_t nodes_total, double network_power_w) {
    if (nodes_measured < 1) throw domain_error("extrapolate_power: nodes_measured must be >= 1");
    if (measured_avg_power_w < 0.0 || nodes_total < 0 || network_power_w < 0.0)
        throw domain_error("extrapolate_power: inputs must be non-negative");
    return measured_avg_power_w / static_cast<double>(nodes_measured) *
               static_cast<double>(nodes_total) +
           network_power_w;
}

// Conservative relative error bound on the per-node scaling: the raw
// population spread, deliberately not shrunk by sqrt(n) — nodes share PSU
// batches and thermal zones, so they are not independent draws.
inline double extrapolation_uncertainty(const VariabilityStats& stats) {
    return stats.rel_stddev;
}

} // namespace flopwatt
