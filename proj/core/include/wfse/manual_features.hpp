#pragma once

#include <array>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "wfse/feature_matrix.hpp"
#include "wfse/trace.hpp"

namespace wfse {

// Hand-crafted summary-statistic representation. Fixed order:
//   [0]  total packet count
//   [1]  outgoing count
//   [2]  incoming count
//   [3]  outgoing fraction
//   [4]  trace duration (s)
//   [5..10]  inter-packet times, all packets: mean, std, p25, p50, p75, p90
//   [11..16] inter-packet times, outgoing only: same six statistics
//   [17..22] inter-packet times, incoming only: same six statistics
//   [23..24] burst count, outgoing / incoming
//   [25..26] mean burst size, outgoing / incoming
//   [27..28] max burst size, outgoing / incoming
//   [29..30] mean burst duration (s), outgoing / incoming
// Statistics over fewer than the required packets are 0, never NaN.
inline constexpr std::size_t kManualFeatureCount = 31;

using ManualFeatureVector = std::array<double, kManualFeatureCount>;

const std::array<std::string, kManualFeatureCount>& manual_feature_names();

struct Burst {
    Direction direction;
    std::size_t start = 0;  // index of first packet in the trace
    std::size_t length = 0; // packets in the run
    double duration = 0.0;  // last packet time - first packet time
};

// Maximal runs of equal-direction packets, in trace order. Lengths sum to
// the trace size.
std::vector<Burst> burst_segments(const Trace& trace);

ManualFeatureVector manual_features(const Trace& trace);

FeatureMatrix manual_feature_matrix(const TraceDataset& dataset);

// Percentile by linear interpolation between order statistics (inclusive
// rank p/100 * (n-1)); values need not be pre-sorted. Empty input yields 0.
double percentile(std::vector<double> values, double p);

// Per-column z-score transform. Fit only on training rows; columns with zero
// spread map to 0 so constant features cannot emit NaN.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Normalizer fit(const FeatureMatrix& train);
    void apply(FeatureMatrix& m) const;
};

// Header of feature names plus "label", then one row per trace.
void write_features_csv(std::ostream& out, const TraceDataset& dataset);

} // namespace wfse
