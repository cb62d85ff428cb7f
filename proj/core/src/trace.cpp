#include "wfse/trace.hpp"

#include <algorithm>

#include "wfse/errors.hpp"

namespace wfse {

const char* reject_reason_name(RejectReason r) {
    switch (r) {
        case RejectReason::EmptyTrace: return "EmptyTrace";
        case RejectReason::IncomingFirst: return "IncomingFirst";
    }
    return "?";
}

const char* rep_kind_name(RepKind k) {
    switch (k) {
        case RepKind::Directional: return "directional";
        case RepKind::Timing: return "timing";
    }
    return "?";
}

SanitizeResult sanitize(const Trace& trace) {
    if (trace.events.empty()) return RejectReason::EmptyTrace;

    Trace out;
    out.label = trace.label;
    out.events = trace.events;
    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const TraceEvent& a, const TraceEvent& b) { return a.time < b.time; });

    if (out.events.front().direction == Direction::Incoming)
        return RejectReason::IncomingFirst;

    const double base = out.events.front().time;
    if (base != 0.0) {
        for (auto& e : out.events) e.time -= base;
    }
    return out;
}

RepVector to_representation(const Trace& trace, RepKind kind, std::size_t length) {
    if (length == 0) throw ConfigError("representation length must be positive");

    RepVector rep;
    rep.kind = kind;
    rep.values.assign(length, 0.0);

    const std::size_t n = std::min(trace.events.size(), length);
    for (std::size_t i = 0; i < n; ++i) {
        const TraceEvent& e = trace.events[i];
        if (kind == RepKind::Directional) {
            rep.values[i] = static_cast<double>(dir_sign(e.direction));
        } else {
            // sign * timestamp; the leading outgoing packet at time 0 is +0
            rep.values[i] = static_cast<double>(dir_sign(e.direction)) * e.time;
        }
    }
    return rep;
}

std::vector<std::size_t> TraceDataset::per_class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (const Trace& t : traces) {
        if (t.label >= 0 && static_cast<std::size_t>(t.label) < counts.size())
            ++counts[static_cast<std::size_t>(t.label)];
    }
    return counts;
}

RepMatrix make_rep_matrix(const TraceDataset& dataset, RepKind kind, std::size_t length) {
    if (length == 0) throw ConfigError("representation length must be positive");

    RepMatrix m;
    m.kind = kind;
    m.length = length;
    m.rows = dataset.traces.size();
    m.values.resize(m.rows * length);
    m.labels.resize(m.rows);

    for (std::size_t i = 0; i < m.rows; ++i) {
        const RepVector rep = to_representation(dataset.traces[i], kind, length);
        std::copy(rep.values.begin(), rep.values.end(), m.values.begin() + i * length);
        m.labels[i] = dataset.traces[i].label;
    }
    return m;
}

} // namespace wfse
