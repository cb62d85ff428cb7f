#pragma once

#include <cstddef>
#include <vector>

#include "wfse/feature_matrix.hpp"
#include "wfse/knn.hpp"

namespace wfse {

// psi(x) for x > 0, absolute error <= 1e-10. Upward recurrence to x >= 6,
// then the asymptotic series through the x^-12 term.
double digamma(double x);

// Fraction of test rows misclassified by a k-nearest-neighbor majority vote
// over train rows. Vote ties go to the lowest class index among the tied
// classes. Throws ConfigError when k exceeds the training size.
double knn_error(const FeatureMatrix& train, const FeatureMatrix& test, std::size_t k,
                 KnnBackend backend = KnnBackend::SpatialTree);

// R / (1 + sqrt(max(0, 1 - C*R/(C-1)))): Bayes-error lower bound from a
// nearest-neighbor error R over C classes. The sqrt argument clamps at 0 when
// finite-sample noise pushes R past (C-1)/C.
double cover_hart_lower(double r, std::size_t num_classes);

// Row indices of the two disjoint evaluation halves of one fold.
struct EvalSplit {
    std::vector<std::size_t> e1;
    std::vector<std::size_t> e2;
};

struct RepBer {
    FeatureKind kind;
    double knn_error;   // mean of E1->E2 and E2->E1, k=1
    double lower_bound; // cover_hart_lower of that mean
};

struct BerEstimate {
    double knn_error = 1.0;    // min over representations
    double lower_bound = 1.0;  // min over representations
    std::size_t num_classes = 0;
    std::vector<RepBer> per_representation;
};

struct RepMi {
    FeatureKind kind;
    double bits; // mean of the two half estimates, each clamped to [0, log2 C]
    bool clamped;
    bool k_reduced;
};

struct MiEstimate {
    double bits = 0.0; // max over representations
    std::size_t k = 0;
    std::vector<RepMi> per_representation;
};

struct RossMi {
    double bits = 0.0;     // clamped to [0, log2 C]
    double raw_bits = 0.0; // pre-clamp value
    bool clamped = false;
    bool k_reduced = false; // some class had fewer than k+1 samples
    std::size_t k = 0;
};

// Kraskov-style discrete-label mutual information. Per sample i with class
// count N_c: d_i = distance to the min(k, N_c-1)-th nearest same-class
// neighbor (ties by lowest index); m_i = points j != i of any class with
// dist(i,j) <= d_i, the non-strict comparison making m_i = k_i under perfect
// separation; estimate = psi(N) - <psi(N_c)> + <psi(k_i)> - <psi(m_i)> nats,
// converted to bits. Classes need >= 2 samples.
RossMi ross_mi(const FeatureMatrix& features, std::size_t k = 5,
               KnnBackend backend = KnnBackend::SpatialTree);

// Per representation: mean of knn_error(E1 train -> E2 test) and the reverse,
// k=1, then the Cover-Hart transform; the reported estimate takes the min
// over representations. Manual-feature matrices are z-scored with statistics
// fit on each direction's training half when standardize_manual is set.
// Throws DataError unless every class has >= 2 rows in each half.
BerEstimate estimate_ber(const std::vector<FeatureMatrix>& representations,
                         const EvalSplit& split, bool standardize_manual = true,
                         KnnBackend backend = KnnBackend::SpatialTree);

// Per representation: mean of ross_mi over the two halves evaluated
// separately; the reported estimate takes the max over representations.
// Manual-feature z-scoring fits on the half being evaluated.
MiEstimate estimate_mi(const std::vector<FeatureMatrix>& representations, const EvalSplit& split,
                       std::size_t k = 5, bool standardize_manual = true,
                       KnnBackend backend = KnnBackend::SpatialTree);

} // namespace wfse
