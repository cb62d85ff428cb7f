#include "wfse/feature_matrix.hpp"

namespace wfse {

std::string feature_kind_name(FeatureKind kind) {
    switch (kind) {
    case FeatureKind::ManualFeatures: return "manual";
    case FeatureKind::LearnedDirectional: return "learned_directional";
    case FeatureKind::LearnedTiming: return "learned_timing";
    case FeatureKind::Synthetic: return "synthetic";
    }
    return "unknown";
}

FeatureMatrix select_rows(const FeatureMatrix& m, const std::vector<std::size_t>& indices) {
    FeatureMatrix out;
    out.kind = m.kind;
    out.dim = m.dim;
    out.values.reserve(indices.size() * m.dim);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        const double* r = m.row(i);
        out.values.insert(out.values.end(), r, r + m.dim);
        out.labels.push_back(m.labels[i]);
    }
    return out;
}

} // namespace wfse
