#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace wfse {

// Where a feature row came from; estimation runs report results per kind.
enum class FeatureKind { ManualFeatures, LearnedDirectional, LearnedTiming, Synthetic };

std::string feature_kind_name(FeatureKind kind);

// Dense row-major real matrix with one integer class label per row.
struct FeatureMatrix {
    FeatureKind kind = FeatureKind::ManualFeatures;
    std::size_t dim = 0;
    std::vector<double> values; // rows() * dim, row-major
    std::vector<int> labels;    // one per row

    std::size_t rows() const { return labels.size(); }
    const double* row(std::size_t i) const { return values.data() + i * dim; }
    double* row(std::size_t i) { return values.data() + i * dim; }
};

// Row subset in the given index order; labels follow rows.
FeatureMatrix select_rows(const FeatureMatrix& m, const std::vector<std::size_t>& indices);

} // namespace wfse
