#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "wfse/feature_matrix.hpp"
#include "wfse/trace.hpp"

namespace wfse {

// Synthetic families with ground-truth error and information values, used to
// validate the estimators against quantities that are computable exactly.

struct Gaussian1DSpec {
    std::vector<double> means; // one per class, >= 2 classes
    double sigma = 1.0;
};

// Axis-aligned clusters with Uniform[-0.25, 0.25] coordinate noise. Centers
// sit gap apart with gap >= 1, so supports are disjoint and the ground truth
// is exact: error 0, information log2 C.
struct SeparatedClustersSpec {
    std::size_t num_classes = 2;
    std::size_t dim = 2;
    double gap = 10.0;
};

// Genuine traces: each class owns a distinct +-1 direction template over
// trace_len packets at unit inter-packet times; every sample flips each
// position independently with flip_prob. Position 0 stays Outgoing and is
// never flipped so every sample survives trace sanitization unchanged.
struct TemplateTracesSpec {
    std::size_t num_classes = 2;
    double flip_prob = 0.1;
    std::size_t trace_len = 16;
};

struct SynthSpec {
    std::variant<Gaussian1DSpec, SeparatedClustersSpec, TemplateTracesSpec> variant;
    std::size_t samples_per_class = 100;
    std::uint64_t seed = 0;
};

void validate(const SynthSpec& spec);

std::size_t synth_num_classes(const SynthSpec& spec);

struct SynthData {
    // Populated only by TemplateTraces; the other families are feature-space
    // constructions with no trace form.
    TraceDataset dataset;
    FeatureMatrix features;
};

// Deterministic given spec.seed; per-sample streams are derived from
// (seed, class, index) so results do not depend on generation order.
SynthData generate(const SynthSpec& spec);

struct OracleValue {
    double value = 0.0;
    double std_error = 0.0; // 0 when exact
    bool exact = true;      // false for Monte-Carlo fallbacks
};

// Ground-truth Bayes error. Gaussian1D with 2 classes: closed form
// Phi(-|mu1-mu2|/(2*sigma)); more classes fall back to Monte-Carlo with a
// reported standard error. SeparatedClusters: exactly 0. TemplateTraces:
// exact enumeration when trace_len <= 12, else Monte-Carlo (10^6 draws).
OracleValue oracle_ber(const SynthSpec& spec);

// Ground-truth label information in bits. Gaussian1D: adaptive Simpson
// quadrature over the mixture, tolerance 1e-6 nats. SeparatedClusters:
// exactly log2 C. TemplateTraces: enumeration / Monte-Carlo as oracle_ber.
OracleValue oracle_mi(const SynthSpec& spec);

} // namespace wfse
