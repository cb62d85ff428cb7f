#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "wfse/rng.hpp"
#include "wfse/trace.hpp"

namespace wfse {

// Trace-to-trace defense transforms. Every defense preserves the real-packet
// subsequence per direction: directions and relative order are untouched,
// constant-rate shifting may delay timestamps but never reorders them.

struct ConstantRateSpec {
    double rho_out = 0.04;          // seconds per outgoing slot
    double rho_in = 0.012;          // seconds per incoming slot
    std::int64_t pad_multiple = 50; // per-direction count padded to a multiple of this
};

struct FrontSpec {
    std::int64_t n_client = 1700; // max outgoing dummies
    std::int64_t n_server = 1700; // max incoming dummies
    double w_min = 1.0;           // Rayleigh scale window, seconds
    double w_max = 14.0;
};

struct MergeSpec {
    std::int64_t m = 1; // total traces per merge, target included
};

// Pre-defended datasets produced outside this toolkit; loaded via trace IO,
// never applied here.
struct ExternalSpec {
    std::string name;
};

struct DefenseSpec {
    std::variant<ConstantRateSpec, FrontSpec, MergeSpec, ExternalSpec> variant;
    std::uint64_t seed = 0;
};

// Throws ConfigError on out-of-range parameters.
void validate(const DefenseSpec& spec);

// Fixed per-direction slot grid at multiples of rho from time 0. Each real
// packet moves to the first free slot of its direction at or after its
// original time; every skipped slot gets a dummy; each direction is then
// tail-padded with dummies to the smallest positive multiple of pad_multiple.
// A direction with no real packets still emits pad_multiple dummies.
// Needs no randomness; rng is accepted for interface uniformity.
Trace apply_constant_rate(const Trace& trace, const ConstantRateSpec& spec, Rng& rng);

// Per side (client/outgoing first, then server/incoming): draw the Rayleigh
// scale w ~ Uniform[w_min, w_max], then the count n ~ UniformInt[1, N], then
// n dummy timestamps w*sqrt(-2*ln(1-u)). Dummies after the last real packet
// are dropped, so the post-drop count may reach 0.
Trace apply_front(const Trace& trace, const FrontSpec& spec, Rng& rng);

// Multiset union of all events. With decoys present the union is re-sorted by
// (time, direction, is_dummy) so equal-time runs carry no positional hint of
// which input contributed a packet; without decoys the target passes through
// unchanged. Output label = target label.
Trace merge_traces(const Trace& target, const std::vector<Trace>& decoys);

// 1 - 1/M: the floor on attacker error when the undefended problem is
// perfectly classifiable and each merge hides the target among M-1 decoys.
double merged_theoretical_error(std::int64_t m);

struct OverheadStats {
    double bandwidth_overhead = 0.0; // extra packets / real packets
    double latency_overhead = 0.0;   // summed per-packet delay, seconds
};

struct DefendedDataset {
    TraceDataset dataset;
    OverheadStats overhead;
};

// Applies the defense to every trace, in parallel, with per-trace seeds
// derived from (spec.seed, class label, ordinal within class) so the result
// is independent of thread count. Merge draws its M-1 decoys uniformly from
// the whole dataset, repetition allowed. External specs cannot be applied and
// raise ConfigError.
DefendedDataset apply_defense(const TraceDataset& dataset, const DefenseSpec& spec);

} // namespace wfse
