#include "wfse/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wfse/errors.hpp"

namespace wfse {

double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("binary_entropy: p must be in [0, 1]");
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
    return h;
}

namespace {

void check_ber_range(double r, std::size_t c, const char* who) {
    if (c < 2) throw ConfigError(std::string(who) + ": need at least 2 classes");
    const double top = (static_cast<double>(c) - 1.0) / static_cast<double>(c);
    if (!(r >= 0.0 && r <= top + 1e-12))
        throw ConfigError(std::string(who) + ": BER must be in [0, (C-1)/C]");
}

} // namespace

double fano_lower(double r, std::size_t num_classes) {
    check_ber_range(r, num_classes, "fano_lower");
    const auto c = static_cast<double>(num_classes);
    const double v = std::log2(c) - binary_entropy(std::min(r, 1.0)) -
                     (num_classes > 2 ? r * std::log2(c - 1.0) : 0.0);
    return std::max(0.0, v);
}

double kovalevskij_upper(double r, std::size_t num_classes) {
    check_ber_range(r, num_classes, "kovalevskij_upper");
    const auto c = static_cast<double>(num_classes);
    const double cap = std::log2(c);
    double best = cap;
    for (std::size_t ki = 2; ki <= num_classes; ++ki) {
        const auto k = static_cast<double>(ki);
        const double v =
            cap - std::log2(k) - k * (k + 1.0) * std::log2((k + 1.0) / k) * (r - (k - 1.0) / k);
        best = std::min(best, v);
    }
    return std::clamp(best, 0.0, cap);
}

BoundRegion bound_region(std::size_t num_classes, std::size_t grid_points) {
    if (num_classes < 2) throw ConfigError("bound_region: need at least 2 classes");
    if (grid_points < 2) throw ConfigError("bound_region: need at least 2 grid points");
    const double top =
        (static_cast<double>(num_classes) - 1.0) / static_cast<double>(num_classes);
    BoundRegion region;
    region.num_classes = num_classes;
    region.grid.reserve(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double r =
            top * static_cast<double>(i) / static_cast<double>(grid_points - 1);
        region.grid.push_back({r, fano_lower(r, num_classes), kovalevskij_upper(r, num_classes)});
    }
    return region;
}

void write_bound_region_csv(std::ostream& out, const BoundRegion& region) {
    out << "r,fano_bits,kovalevskij_bits\n";
    char buf[128];
    for (const BoundRegionPoint& p : region.grid) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", p.r, p.fano_bits,
                      p.kovalevskij_bits);
        out << buf;
    }
}

const char* consistency_kind_name(ConsistencyKind kind) {
    switch (kind) {
    case ConsistencyKind::Consistent: return "consistent";
    case ConsistencyKind::MiBelowFano: return "mi_below_fano";
    case ConsistencyKind::MiAboveKovalevskij: return "mi_above_kovalevskij";
    }
    return "unknown";
}

ConsistencyResult check_consistency(double ber, double mi_bits, std::size_t num_classes) {
    if (num_classes < 2) throw ConfigError("check_consistency: need at least 2 classes");
    const double top =
        (static_cast<double>(num_classes) - 1.0) / static_cast<double>(num_classes);
    const double r = std::clamp(ber, 0.0, top);

    ConsistencyResult res;
    res.fano_bits = fano_lower(r, num_classes);
    res.kovalevskij_bits = kovalevskij_upper(r, num_classes);
    if (mi_bits < res.fano_bits) {
        res.kind = ConsistencyKind::MiBelowFano;
        res.gap_bits = res.fano_bits - mi_bits;
    } else if (mi_bits > res.kovalevskij_bits) {
        res.kind = ConsistencyKind::MiAboveKovalevskij;
        res.gap_bits = mi_bits - res.kovalevskij_bits;
    }
    return res;
}

ConsistencyResult check_consistency(const BerEstimate& ber, const MiEstimate& mi,
                                    std::size_t num_classes) {
    return check_consistency(ber.lower_bound, mi.bits, num_classes);
}

} // namespace wfse
