#include "wfse/manual_features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wfse/errors.hpp"

namespace wfse {

const std::array<std::string, kManualFeatureCount>& manual_feature_names() {
    static const std::array<std::string, kManualFeatureCount> names = {
        "total_count", "out_count", "in_count", "out_fraction", "duration",
        "ipt_all_mean", "ipt_all_std", "ipt_all_p25", "ipt_all_p50", "ipt_all_p75", "ipt_all_p90",
        "ipt_out_mean", "ipt_out_std", "ipt_out_p25", "ipt_out_p50", "ipt_out_p75", "ipt_out_p90",
        "ipt_in_mean", "ipt_in_std", "ipt_in_p25", "ipt_in_p50", "ipt_in_p75", "ipt_in_p90",
        "burst_count_out", "burst_count_in",
        "burst_size_mean_out", "burst_size_mean_in",
        "burst_size_max_out", "burst_size_max_in",
        "burst_duration_mean_out", "burst_duration_mean_in"};
    return names;
}

std::vector<Burst> burst_segments(const Trace& trace) {
    std::vector<Burst> bursts;
    const auto& ev = trace.events;
    std::size_t i = 0;
    while (i < ev.size()) {
        std::size_t j = i + 1;
        while (j < ev.size() && ev[j].direction == ev[i].direction) ++j;
        bursts.push_back({ev[i].direction, i, j - i, ev[j - 1].time - ev[i].time});
        i = j;
    }
    return bursts;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

namespace {

// mean, std (population), p25, p50, p75, p90; all 0 when no gaps exist.
void timing_stats(const std::vector<double>& gaps, double* out) {
    if (gaps.empty()) {
        std::fill(out, out + 6, 0.0);
        return;
    }
    const auto n = static_cast<double>(gaps.size());
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= n;
    double var = 0.0;
    for (double g : gaps) var += (g - mean) * (g - mean);
    var /= n;
    out[0] = mean;
    out[1] = std::sqrt(var);
    out[2] = percentile(gaps, 25.0);
    out[3] = percentile(gaps, 50.0);
    out[4] = percentile(gaps, 75.0);
    out[5] = percentile(gaps, 90.0);
}

std::vector<double> gaps_of(const std::vector<double>& times) {
    std::vector<double> gaps;
    if (times.size() < 2) return gaps;
    gaps.reserve(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) gaps.push_back(times[i] - times[i - 1]);
    return gaps;
}

} // namespace

ManualFeatureVector manual_features(const Trace& trace) {
    if (trace.events.empty()) throw DataError("manual_features: trace has no packets");
    ManualFeatureVector f{};

    std::vector<double> all_times, out_times, in_times;
    all_times.reserve(trace.size());
    for (const TraceEvent& e : trace.events) {
        all_times.push_back(e.time);
        (e.direction == Direction::Outgoing ? out_times : in_times).push_back(e.time);
    }

    f[0] = static_cast<double>(trace.size());
    f[1] = static_cast<double>(out_times.size());
    f[2] = static_cast<double>(in_times.size());
    f[3] = f[1] / f[0];
    f[4] = trace.duration();

    timing_stats(gaps_of(all_times), &f[5]);
    timing_stats(gaps_of(out_times), &f[11]);
    timing_stats(gaps_of(in_times), &f[17]);

    const auto bursts = burst_segments(trace);
    for (int d = 0; d < 2; ++d) {
        const Direction dir = d == 0 ? Direction::Outgoing : Direction::Incoming;
        double count = 0.0, size_sum = 0.0, size_max = 0.0, dur_sum = 0.0;
        for (const Burst& b : bursts) {
            if (b.direction != dir) continue;
            count += 1.0;
            size_sum += static_cast<double>(b.length);
            size_max = std::max(size_max, static_cast<double>(b.length));
            dur_sum += b.duration;
        }
        f[23 + d] = count;
        f[25 + d] = count > 0.0 ? size_sum / count : 0.0;
        f[27 + d] = size_max;
        f[29 + d] = count > 0.0 ? dur_sum / count : 0.0;
    }
    return f;
}

FeatureMatrix manual_feature_matrix(const TraceDataset& dataset) {
    FeatureMatrix m;
    m.kind = FeatureKind::ManualFeatures;
    m.dim = kManualFeatureCount;
    m.values.reserve(dataset.traces.size() * kManualFeatureCount);
    m.labels.reserve(dataset.traces.size());
    for (const Trace& t : dataset.traces) {
        const ManualFeatureVector f = manual_features(t);
        m.values.insert(m.values.end(), f.begin(), f.end());
        m.labels.push_back(t.label);
    }
    return m;
}

Normalizer Normalizer::fit(const FeatureMatrix& train) {
    if (train.rows() == 0) throw DataError("Normalizer::fit: empty matrix");
    Normalizer n;
    n.mean.assign(train.dim, 0.0);
    n.stddev.assign(train.dim, 0.0);
    const auto rows = static_cast<double>(train.rows());
    for (std::size_t i = 0; i < train.rows(); ++i) {
        const double* r = train.row(i);
        for (std::size_t j = 0; j < train.dim; ++j) n.mean[j] += r[j];
    }
    for (double& m : n.mean) m /= rows;
    for (std::size_t i = 0; i < train.rows(); ++i) {
        const double* r = train.row(i);
        for (std::size_t j = 0; j < train.dim; ++j) {
            const double d = r[j] - n.mean[j];
            n.stddev[j] += d * d;
        }
    }
    for (double& s : n.stddev) s = std::sqrt(s / rows);
    return n;
}

void Normalizer::apply(FeatureMatrix& m) const {
    if (m.dim != mean.size()) throw DataError("Normalizer::apply: dimension mismatch");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* r = m.row(i);
        for (std::size_t j = 0; j < m.dim; ++j)
            r[j] = stddev[j] > 0.0 ? (r[j] - mean[j]) / stddev[j] : 0.0;
    }
}

void write_features_csv(std::ostream& out, const TraceDataset& dataset) {
    const auto& names = manual_feature_names();
    for (std::size_t j = 0; j < names.size(); ++j) out << names[j] << ',';
    out << "label\n";
    char buf[40];
    for (const Trace& t : dataset.traces) {
        const ManualFeatureVector f = manual_features(t);
        for (double v : f) {
            std::snprintf(buf, sizeof buf, "%.10g", v);
            out << buf << ',';
        }
        out << t.label << '\n';
    }
}

} // namespace wfse
