#include "wfse/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "wfse/errors.hpp"
#include "wfse/manual_features.hpp"
#include "wfse/parallel.hpp"

namespace wfse {

double digamma(double x) {
    if (!(x > 0.0)) throw NumericalError("digamma: requires x > 0");
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli tail: -1/12x^2 +1/120x^4 -1/252x^6 +1/240x^8 -1/132x^10
    // +691/32760x^12; the next term is ~1e-12 at x=6.
    const double tail =
        inv2 * (-1.0 / 12.0 +
                inv2 * (1.0 / 120.0 +
                        inv2 * (-1.0 / 252.0 +
                                inv2 * (1.0 / 240.0 +
                                        inv2 * (-1.0 / 132.0 + inv2 * (691.0 / 32760.0))))));
    return result + std::log(x) - 0.5 * inv + tail;
}

double cover_hart_lower(double r, std::size_t num_classes) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("cover_hart_lower: R must be in [0, 1]");
    if (num_classes < 2) throw ConfigError("cover_hart_lower: need at least 2 classes");
    const auto c = static_cast<double>(num_classes);
    const double arg = std::max(0.0, 1.0 - c * r / (c - 1.0));
    return r / (1.0 + std::sqrt(arg));
}

double knn_error(const FeatureMatrix& train, const FeatureMatrix& test, std::size_t k,
                 KnnBackend backend) {
    if (train.dim != test.dim) throw DataError("knn_error: dimension mismatch");
    if (test.rows() == 0) throw DataError("knn_error: empty test set");
    if (k == 0 || k > train.rows())
        throw ConfigError("knn_error: need k in [1, " + std::to_string(train.rows()) + "]");

    int max_label = 0;
    for (int l : train.labels) max_label = std::max(max_label, l);

    const KnnIndex index(train.values, train.dim, backend);
    std::vector<std::uint8_t> wrong(test.rows(), 0);
    parallel_for(test.rows(), [&](std::size_t i) {
        const auto nn = index.nearest(test.row(i), k);
        std::vector<std::size_t> votes(static_cast<std::size_t>(max_label) + 1, 0);
        for (const auto& [d2, idx] : nn) ++votes[static_cast<std::size_t>(train.labels[idx])];
        std::size_t best = 0;
        for (std::size_t c = 1; c < votes.size(); ++c)
            if (votes[c] > votes[best]) best = c;
        wrong[i] = static_cast<int>(best) != test.labels[i] ? 1 : 0;
    });

    std::size_t errors = 0;
    for (std::uint8_t w : wrong) errors += w;
    return static_cast<double>(errors) / static_cast<double>(test.rows());
}

namespace {

std::map<int, std::size_t> class_counts(const std::vector<int>& labels) {
    std::map<int, std::size_t> counts;
    for (int l : labels) ++counts[l];
    return counts;
}

} // namespace

RossMi ross_mi(const FeatureMatrix& features, std::size_t k, KnnBackend backend) {
    const std::size_t n = features.rows();
    if (n == 0) throw DataError("ross_mi: empty matrix");
    if (k == 0) throw ConfigError("ross_mi: k must be >= 1");

    const auto counts = class_counts(features.labels);
    if (counts.size() < 2) throw DataError("ross_mi: need at least 2 classes");
    for (const auto& [label, count] : counts)
        if (count < 2)
            throw DataError("ross_mi: class " + std::to_string(label) + " has a single sample");

    // Same-class neighbor distances come from per-class indexes; the m_i
    // radius count runs over one global index.
    const KnnIndex global(features.values, features.dim, backend);
    std::map<int, KnnIndex> class_index;
    std::map<int, std::vector<std::uint32_t>> class_rows;
    for (const auto& [label, count] : counts) {
        std::vector<double> pts;
        pts.reserve(count * features.dim);
        auto& rows = class_rows[label];
        for (std::size_t i = 0; i < n; ++i) {
            if (features.labels[i] != label) continue;
            const double* r = features.row(i);
            pts.insert(pts.end(), r, r + features.dim);
            rows.push_back(static_cast<std::uint32_t>(i));
        }
        class_index.emplace(label, KnnIndex(std::move(pts), features.dim, backend));
    }
    std::vector<std::uint32_t> local_pos(n);
    for (const auto& [label, rows] : class_rows)
        for (std::uint32_t p = 0; p < rows.size(); ++p) local_pos[rows[p]] = p;

    RossMi out;
    out.k = k;
    std::vector<double> sample_term(n, 0.0);
    bool k_reduced = false;
    for (const auto& [label, count] : counts)
        if (count <= k) k_reduced = true;
    out.k_reduced = k_reduced;

    parallel_for(n, [&](std::size_t i) {
        const int label = features.labels[i];
        const std::size_t n_c = counts.at(label);
        const std::size_t k_i = std::min(k, n_c - 1);
        const auto nn = class_index.at(label).nearest(features.row(i), k_i, local_pos[i]);
        const double d2 = nn.back().first;
        const std::size_t m_i = global.count_within(features.row(i), d2,
                                                    static_cast<std::uint32_t>(i));
        sample_term[i] = digamma(static_cast<double>(k_i)) -
                         digamma(static_cast<double>(m_i)) -
                         digamma(static_cast<double>(n_c));
    });

    double mean_term = 0.0;
    for (double t : sample_term) mean_term += t;
    mean_term /= static_cast<double>(n);

    const double nats = digamma(static_cast<double>(n)) + mean_term;
    const double log2e = 1.0 / std::log(2.0);
    out.raw_bits = nats * log2e;
    const double cap = std::log2(static_cast<double>(counts.size()));
    out.bits = std::clamp(out.raw_bits, 0.0, cap);
    out.clamped = out.bits != out.raw_bits;
    return out;
}

namespace {

void check_halves(const FeatureMatrix& m, const EvalSplit& split) {
    for (const auto* half : {&split.e1, &split.e2}) {
        std::map<int, std::size_t> counts;
        for (std::size_t i : *half) {
            if (i >= m.rows()) throw DataError("eval split indexes past the matrix");
            ++counts[m.labels[i]];
        }
        for (const auto& [label, count] : counts)
            if (count < 2)
                throw DataError("class " + std::to_string(label) +
                                " has fewer than 2 rows in an evaluation half");
        if (counts.size() < 2) throw DataError("evaluation half holds fewer than 2 classes");
    }
}

bool wants_standardize(const FeatureMatrix& m, bool standardize_manual) {
    return standardize_manual && m.kind == FeatureKind::ManualFeatures;
}

} // namespace

BerEstimate estimate_ber(const std::vector<FeatureMatrix>& representations,
                         const EvalSplit& split, bool standardize_manual, KnnBackend backend) {
    if (representations.empty()) throw ConfigError("estimate_ber: no representations");
    BerEstimate out;
    for (const FeatureMatrix& rep : representations) {
        check_halves(rep, split);
        double errs[2];
        for (int dir = 0; dir < 2; ++dir) {
            FeatureMatrix train = select_rows(rep, dir == 0 ? split.e1 : split.e2);
            FeatureMatrix test = select_rows(rep, dir == 0 ? split.e2 : split.e1);
            if (wants_standardize(rep, standardize_manual)) {
                const Normalizer norm = Normalizer::fit(train);
                norm.apply(train);
                norm.apply(test);
            }
            errs[dir] = knn_error(train, test, 1, backend);
        }
        const double r = 0.5 * (errs[0] + errs[1]);

        std::map<int, std::size_t> seen;
        for (int l : rep.labels) ++seen[l];
        out.num_classes = seen.size();
        out.per_representation.push_back({rep.kind, r, cover_hart_lower(r, seen.size())});
    }
    for (const RepBer& r : out.per_representation) {
        out.knn_error = std::min(out.knn_error, r.knn_error);
        out.lower_bound = std::min(out.lower_bound, r.lower_bound);
    }
    return out;
}

MiEstimate estimate_mi(const std::vector<FeatureMatrix>& representations, const EvalSplit& split,
                       std::size_t k, bool standardize_manual, KnnBackend backend) {
    if (representations.empty()) throw ConfigError("estimate_mi: no representations");
    MiEstimate out;
    out.k = k;
    for (const FeatureMatrix& rep : representations) {
        check_halves(rep, split);
        double bits[2];
        bool clamped = false;
        bool reduced = false;
        for (int h = 0; h < 2; ++h) {
            FeatureMatrix half = select_rows(rep, h == 0 ? split.e1 : split.e2);
            if (wants_standardize(rep, standardize_manual)) {
                const Normalizer norm = Normalizer::fit(half);
                norm.apply(half);
            }
            const RossMi r = ross_mi(half, k, backend);
            bits[h] = r.bits;
            clamped = clamped || r.clamped;
            reduced = reduced || r.k_reduced;
        }
        out.per_representation.push_back({rep.kind, 0.5 * (bits[0] + bits[1]), clamped, reduced});
    }
    for (const RepMi& r : out.per_representation) out.bits = std::max(out.bits, r.bits);
    return out;
}

} // namespace wfse
