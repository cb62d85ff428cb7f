#ifndef WFSE_TRACE_HPP
#define WFSE_TRACE_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace wfse {

enum class Direction : int { Outgoing = +1, Incoming = -1 };

inline int dir_sign(Direction d) { return static_cast<int>(d); }

/// One packet event. Packet sizes are deliberately absent: traffic is modeled
/// as fixed-size cells, so only the (time, sign) pair carries information.
struct TraceEvent {
    double time = 0.0;           ///< seconds relative to trace start, >= 0
    Direction direction = Direction::Outgoing;
    bool is_dummy = false;       ///< true for defense-injected padding

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// A page load: time-ordered packet events plus its class label.
/// Sanitized traces additionally guarantee: first event at time 0, first
/// event outgoing, events sorted by non-decreasing time.
struct Trace {
    std::vector<TraceEvent> events;
    int label = 0;

    std::size_t size() const { return events.size(); }
    double duration() const { return events.empty() ? 0.0 : events.back().time; }
};

enum class RejectReason { EmptyTrace, IncomingFirst };

const char* reject_reason_name(RejectReason r);

using SanitizeResult = std::variant<Trace, RejectReason>;

/// Stable-sorts events by time (input order kept for ties), re-bases times so
/// the first event sits at 0, and rejects empty traces or traces whose first
/// post-sort packet is incoming.
SanitizeResult sanitize(const Trace& trace);

enum class RepKind { Directional, Timing };

const char* rep_kind_name(RepKind k);

/// Fixed-length numeric encoding of a trace.
/// Directional: the packet sign sequence, zero-padded to length L.
/// Timing: sign * timestamp per packet; the first packet (outgoing, time 0
/// after sanitization) encodes as +0, and 0 is read back as outgoing.
struct RepVector {
    RepKind kind = RepKind::Directional;
    std::vector<double> values;   // length exactly L
};

inline constexpr std::size_t kDefaultRepLength = 5000;

/// Encodes the first min(|events|, L) packets; the remainder stays zero.
/// Throws ConfigError when L == 0.
RepVector to_representation(const Trace& trace, RepKind kind, std::size_t length);

/// A loaded, sanitized trace collection. Class labels are dense in [0, C).
struct TraceDataset {
    std::vector<Trace> traces;
    std::vector<std::string> class_names;   // index = label
    std::size_t rejected_empty = 0;         // dropped by sanitize
    std::size_t rejected_incoming_first = 0;

    std::size_t num_classes() const { return class_names.size(); }
    std::vector<std::size_t> per_class_counts() const;
};

/// Per-representation encoding of a whole dataset: row i of `values` is the
/// RepVector of trace i, flattened row-major (n rows, length columns).
struct RepMatrix {
    RepKind kind = RepKind::Directional;
    std::size_t length = 0;
    std::size_t rows = 0;
    std::vector<double> values;             // rows * length
    std::vector<int> labels;                // per row

    const double* row(std::size_t i) const { return values.data() + i * length; }
};

RepMatrix make_rep_matrix(const TraceDataset& dataset, RepKind kind, std::size_t length);

} // namespace wfse

#endif
