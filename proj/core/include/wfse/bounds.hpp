#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "wfse/estimators.hpp"

namespace wfse {

// -p*log2(p) - (1-p)*log2(1-p) with 0*log(0) = 0. p must be in [0, 1].
double binary_entropy(double p);

// Fano: max(0, log2 C - H(R) - R*log2(C-1)) bits of information that must
// survive when the Bayes error is R. Requires 0 <= R <= (C-1)/C.
double fano_lower(double r, std::size_t num_classes);

// Kovalevskij: min over integer k in [2, C] of
//   log2 C - log2 k - k*(k+1)*log2((k+1)/k)*(R - (k-1)/k),
// clamped to [0, log2 C]; the raw min exceeds log2 C at small R.
// Requires 0 <= R <= (C-1)/C.
double kovalevskij_upper(double r, std::size_t num_classes);

struct BoundRegionPoint {
    double r;
    double fano_bits;
    double kovalevskij_bits;
};

// Both bounds sampled on a uniform grid over R in [0, (C-1)/C], endpoints
// included.
struct BoundRegion {
    std::size_t num_classes = 0;
    std::vector<BoundRegionPoint> grid;
};

BoundRegion bound_region(std::size_t num_classes, std::size_t grid_points = 400);

// Columns r,fano_bits,kovalevskij_bits; deterministic %.10g formatting.
void write_bound_region_csv(std::ostream& out, const BoundRegion& region);

enum class ConsistencyKind { Consistent, MiBelowFano, MiAboveKovalevskij };

const char* consistency_kind_name(ConsistencyKind kind);

struct ConsistencyResult {
    ConsistencyKind kind = ConsistencyKind::Consistent;
    double gap_bits = 0.0; // distance outside the region, 0 when consistent
    double fano_bits = 0.0;
    double kovalevskij_bits = 0.0;
};

// Classifies an MI estimate against the bound region evaluated at a BER
// estimate. The BER is clamped into [0, (C-1)/C] first, since finite-sample
// estimates can spill past the uniform point.
ConsistencyResult check_consistency(double ber, double mi_bits, std::size_t num_classes);

// Aggregate form: the BER estimate's lower bound against the MI estimate.
ConsistencyResult check_consistency(const BerEstimate& ber, const MiEstimate& mi,
                                    std::size_t num_classes);

} // namespace wfse
