#include "wfse/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wfse/errors.hpp"
#include "wfse/parallel.hpp"

namespace wfse {

namespace {

void validate_constant_rate(const ConstantRateSpec& s) {
    if (!(s.rho_out > 0.0)) throw ConfigError("constant_rate: rho_out must be > 0");
    if (!(s.rho_in > 0.0)) throw ConfigError("constant_rate: rho_in must be > 0");
    if (s.pad_multiple < 1) throw ConfigError("constant_rate: pad_multiple must be >= 1");
}

void validate_front(const FrontSpec& s) {
    if (s.n_client < 1) throw ConfigError("front: n_client must be >= 1");
    if (s.n_server < 1) throw ConfigError("front: n_server must be >= 1");
    if (!(s.w_min > 0.0)) throw ConfigError("front: w_min must be > 0");
    if (!(s.w_max >= s.w_min)) throw ConfigError("front: w_max must be >= w_min");
}

void validate_merge(const MergeSpec& s) {
    if (s.m < 1) throw ConfigError("merge: M must be >= 1");
}

// One directional stream on the slot grid. Emits every slot from 0 through
// the padded length exactly once, real packets at their assigned slots.
void constant_rate_stream(const Trace& trace, Direction dir, double rho,
                          std::int64_t pad_multiple, std::vector<TraceEvent>& out) {
    std::int64_t next_free = 0;
    for (const TraceEvent& e : trace.events) {
        if (e.direction != dir) continue;
        // 1e-9 slack keeps packets landing exactly on a slot from being
        // pushed one slot late by floating-point drift in t/rho.
        auto wanted = static_cast<std::int64_t>(std::ceil(e.time / rho - 1e-9));
        const std::int64_t slot = std::max(next_free, wanted);
        for (std::int64_t d = next_free; d < slot; ++d)
            out.push_back({static_cast<double>(d) * rho, dir, true});
        out.push_back({static_cast<double>(slot) * rho, dir, false});
        next_free = slot + 1;
    }
    const std::int64_t count = std::max<std::int64_t>(next_free, 1);
    const std::int64_t target = (count + pad_multiple - 1) / pad_multiple * pad_multiple;
    for (std::int64_t d = next_free; d < target; ++d)
        out.push_back({static_cast<double>(d) * rho, dir, true});
}

} // namespace

void validate(const DefenseSpec& spec) {
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConstantRateSpec>)
                validate_constant_rate(v);
            else if constexpr (std::is_same_v<T, FrontSpec>)
                validate_front(v);
            else if constexpr (std::is_same_v<T, MergeSpec>)
                validate_merge(v);
        },
        spec.variant);
}

Trace apply_constant_rate(const Trace& trace, const ConstantRateSpec& spec,
                          [[maybe_unused]] Rng& rng) {
    validate_constant_rate(spec);
    std::vector<TraceEvent> out_stream;
    std::vector<TraceEvent> in_stream;
    constant_rate_stream(trace, Direction::Outgoing, spec.rho_out, spec.pad_multiple, out_stream);
    constant_rate_stream(trace, Direction::Incoming, spec.rho_in, spec.pad_multiple, in_stream);

    Trace result;
    result.label = trace.label;
    result.events.resize(out_stream.size() + in_stream.size());
    // std::merge keeps the outgoing stream first on time ties, so the order
    // is deterministic without encoding anything about the input.
    std::merge(out_stream.begin(), out_stream.end(), in_stream.begin(), in_stream.end(),
               result.events.begin(),
               [](const TraceEvent& a, const TraceEvent& b) { return a.time < b.time; });
    return result;
}

Trace apply_front(const Trace& trace, const FrontSpec& spec, Rng& rng) {
    validate_front(spec);
    if (trace.events.empty()) throw DataError("front: trace has no packets");
    const double last_real = trace.events.back().time;

    Trace result;
    result.label = trace.label;
    result.events = trace.events;

    const auto pad_side = [&](Direction dir, std::int64_t n_max) {
        const double w = rng.uniform(spec.w_min, spec.w_max);
        const auto n = rng.uniform_int(1, n_max);
        for (std::int64_t i = 0; i < n; ++i) {
            const double u = rng.uniform();
            const double t = w * std::sqrt(-2.0 * std::log1p(-u));
            if (t > last_real) continue;
            result.events.push_back({t, dir, true});
        }
    };
    pad_side(Direction::Outgoing, spec.n_client);
    pad_side(Direction::Incoming, spec.n_server);

    // Stable by time: real packets stay in input order ahead of same-time
    // dummies, so the real subsequence is byte-identical to the input.
    std::stable_sort(result.events.begin(), result.events.end(),
                     [](const TraceEvent& a, const TraceEvent& b) { return a.time < b.time; });
    return result;
}

Trace merge_traces(const Trace& target, const std::vector<Trace>& decoys) {
    if (decoys.empty()) return target;

    Trace result;
    result.label = target.label;
    std::size_t total = target.size();
    for (const Trace& d : decoys) total += d.size();
    result.events.reserve(total);
    result.events.insert(result.events.end(), target.events.begin(), target.events.end());
    for (const Trace& d : decoys)
        result.events.insert(result.events.end(), d.events.begin(), d.events.end());

    std::sort(result.events.begin(), result.events.end(),
              [](const TraceEvent& a, const TraceEvent& b) {
                  if (a.time != b.time) return a.time < b.time;
                  if (a.direction != b.direction) return a.direction == Direction::Outgoing;
                  return a.is_dummy < b.is_dummy;
              });
    return result;
}

double merged_theoretical_error(std::int64_t m) {
    if (m < 1) throw ConfigError("merged_theoretical_error: M must be >= 1");
    return 1.0 - 1.0 / static_cast<double>(m);
}

namespace {

// Delay summed over per-direction real packets; valid for padding defenses,
// where the defended real subsequence matches the input one-to-one.
double padding_latency(const Trace& original, const Trace& defended) {
    double total = 0.0;
    for (Direction dir : {Direction::Outgoing, Direction::Incoming}) {
        std::size_t oi = 0;
        for (const TraceEvent& e : defended.events) {
            if (e.is_dummy || e.direction != dir) continue;
            while (oi < original.events.size() && original.events[oi].direction != dir) ++oi;
            if (oi < original.events.size()) {
                total += e.time - original.events[oi].time;
                ++oi;
            }
        }
    }
    return total;
}

} // namespace

DefendedDataset apply_defense(const TraceDataset& dataset, const DefenseSpec& spec) {
    validate(spec);
    if (std::holds_alternative<ExternalSpec>(spec.variant))
        throw ConfigError("external defenses are ingested as pre-defended datasets, not applied");
    if (dataset.traces.empty()) throw DataError("apply_defense: empty dataset");

    // Ordinal within class, precomputed so per-trace seeds do not depend on
    // thread scheduling or the ordering of other classes.
    std::vector<std::uint64_t> ordinal(dataset.traces.size());
    {
        std::vector<std::uint64_t> counter(dataset.num_classes(), 0);
        for (std::size_t i = 0; i < dataset.traces.size(); ++i)
            ordinal[i] = counter[static_cast<std::size_t>(dataset.traces[i].label)]++;
    }

    DefendedDataset out;
    out.dataset.class_names = dataset.class_names;
    out.dataset.traces.resize(dataset.traces.size());

    parallel_for(dataset.traces.size(), [&](std::size_t i) {
        const Trace& t = dataset.traces[i];
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(t.label), ordinal[i]));
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, ConstantRateSpec>) {
                    out.dataset.traces[i] = apply_constant_rate(t, v, rng);
                } else if constexpr (std::is_same_v<T, FrontSpec>) {
                    out.dataset.traces[i] = apply_front(t, v, rng);
                } else if constexpr (std::is_same_v<T, MergeSpec>) {
                    std::vector<Trace> decoys;
                    for (std::int64_t d = 1; d < v.m; ++d)
                        decoys.push_back(dataset.traces[rng.index(dataset.traces.size())]);
                    out.dataset.traces[i] = merge_traces(t, decoys);
                }
            },
            spec.variant);
    });

    std::size_t real_total = 0;
    std::size_t defended_total = 0;
    for (const Trace& t : dataset.traces) real_total += t.size();
    for (const Trace& t : out.dataset.traces) defended_total += t.size();
    out.overhead.bandwidth_overhead =
        static_cast<double>(defended_total - real_total) / static_cast<double>(real_total);

    if (!std::holds_alternative<MergeSpec>(spec.variant)) {
        double latency = 0.0;
        for (std::size_t i = 0; i < dataset.traces.size(); ++i)
            latency += padding_latency(dataset.traces[i], out.dataset.traces[i]);
        out.overhead.latency_overhead = latency;
    }
    return out;
}

} // namespace wfse
