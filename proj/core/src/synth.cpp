#include "wfse/synth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

#include "wfse/errors.hpp"
#include "wfse/parallel.hpp"
#include "wfse/rng.hpp"

namespace wfse {

namespace {

constexpr std::size_t kEnumerationMaxLen = 12; // 2^11 observable patterns
constexpr std::size_t kMonteCarloDraws = 1000000;
// Requested to 1e-9 so the summed per-segment slack stays well under the
// 1e-6 nats the header promises.
constexpr double kQuadratureTolNats = 1e-9;

double log2e() { return 1.0 / std::log(2.0); }

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void validate_gaussian(const Gaussian1DSpec& s) {
    if (s.means.size() < 2) throw ConfigError("gaussian1d: need at least 2 class means");
    if (!(s.sigma > 0.0)) throw ConfigError("gaussian1d: sigma must be > 0");
}

void validate_clusters(const SeparatedClustersSpec& s) {
    if (s.num_classes < 2) throw ConfigError("separated_clusters: need at least 2 classes");
    if (s.dim < 1) throw ConfigError("separated_clusters: dim must be >= 1");
    if (!(s.gap >= 1.0))
        throw ConfigError("separated_clusters: gap must be >= 1 to keep supports disjoint");
}

void validate_templates(const TemplateTracesSpec& s) {
    if (s.num_classes < 2) throw ConfigError("template_traces: need at least 2 classes");
    if (!(s.flip_prob >= 0.0 && s.flip_prob <= 0.5))
        throw ConfigError("template_traces: flip_prob must be in [0, 0.5]");
    if (s.trace_len < 2 || s.trace_len > 64)
        throw ConfigError("template_traces: trace_len must be in [2, 64]");
    const std::size_t informative = s.trace_len - 1;
    if (informative < 63 && (std::uint64_t(1) << informative) < s.num_classes)
        throw ConfigError("template_traces: 2^(trace_len-1) must be >= num_classes");
}

// Class templates as bit patterns over positions 1..len-1 (bit set means
// Incoming). Distinctness is guaranteed: small spaces are enumerated and
// shuffled, large ones redraw the rare collision.
std::vector<std::uint64_t> make_templates(const TemplateTracesSpec& s, std::uint64_t seed) {
    const std::size_t bits = s.trace_len - 1;
    Rng rng(derive_seed(seed, hash_tag("templates"), 0));
    std::vector<std::uint64_t> templates;
    if (bits <= 20) {
        std::vector<std::uint64_t> all(std::size_t(1) << bits);
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        rng.shuffle(all);
        templates.assign(all.begin(), all.begin() + static_cast<long>(s.num_classes));
        return templates;
    }
    const std::uint64_t mask = (std::uint64_t(1) << bits) - 1;
    while (templates.size() < s.num_classes) {
        const std::uint64_t t = rng.next_u64() & mask;
        if (std::find(templates.begin(), templates.end(), t) == templates.end())
            templates.push_back(t);
    }
    return templates;
}

std::string class_name(std::size_t c) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "class_%03zu", c);
    return buf;
}

// p^flips * (1-p)^(keeps) for every flip count, so likelihoods are table
// lookups in the enumeration and Monte-Carlo loops.
struct FlipTable {
    std::vector<double> p_pow;
    std::vector<double> q_pow;

    FlipTable(double p, std::size_t bits) : p_pow(bits + 1), q_pow(bits + 1) {
        p_pow[0] = q_pow[0] = 1.0;
        for (std::size_t j = 1; j <= bits; ++j) {
            p_pow[j] = p_pow[j - 1] * p;
            q_pow[j] = q_pow[j - 1] * (1.0 - p);
        }
    }

    double likelihood(std::size_t flips, std::size_t bits) const {
        return p_pow[flips] * q_pow[bits - flips];
    }
};

} // namespace

void validate(const SynthSpec& spec) {
    if (spec.samples_per_class < 1) throw ConfigError("synth: samples_per_class must be >= 1");
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Gaussian1DSpec>)
                validate_gaussian(v);
            else if constexpr (std::is_same_v<T, SeparatedClustersSpec>)
                validate_clusters(v);
            else
                validate_templates(v);
        },
        spec.variant);
}

std::size_t synth_num_classes(const SynthSpec& spec) {
    return std::visit(
        [](const auto& v) -> std::size_t {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Gaussian1DSpec>)
                return v.means.size();
            else
                return v.num_classes;
        },
        spec.variant);
}

SynthData generate(const SynthSpec& spec) {
    validate(spec);
    const std::size_t c_count = synth_num_classes(spec);
    const std::size_t n = c_count * spec.samples_per_class;

    SynthData data;
    data.features.kind = FeatureKind::Synthetic;

    if (const auto* g = std::get_if<Gaussian1DSpec>(&spec.variant)) {
        data.features.dim = 1;
        data.features.values.resize(n);
        data.features.labels.resize(n);
        for (std::size_t c = 0; c < c_count; ++c)
            for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
                Rng rng(derive_seed(spec.seed, c, i));
                const std::size_t row = c * spec.samples_per_class + i;
                data.features.values[row] = rng.normal(g->means[c], g->sigma);
                data.features.labels[row] = static_cast<int>(c);
            }
        return data;
    }

    if (const auto* s = std::get_if<SeparatedClustersSpec>(&spec.variant)) {
        data.features.dim = s->dim;
        data.features.values.resize(n * s->dim);
        data.features.labels.resize(n);
        for (std::size_t c = 0; c < c_count; ++c) {
            const std::size_t axis = c % s->dim;
            const double center = static_cast<double>(c + 1) * s->gap;
            for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
                Rng rng(derive_seed(spec.seed, c, i));
                const std::size_t row = c * spec.samples_per_class + i;
                double* out = data.features.values.data() + row * s->dim;
                for (std::size_t j = 0; j < s->dim; ++j)
                    out[j] = (j == axis ? center : 0.0) + rng.uniform(-0.25, 0.25);
                data.features.labels[row] = static_cast<int>(c);
            }
        }
        return data;
    }

    const auto& t = std::get<TemplateTracesSpec>(spec.variant);
    const auto templates = make_templates(t, spec.seed);
    const std::size_t bits = t.trace_len - 1;

    data.features.dim = t.trace_len;
    data.features.values.resize(n * t.trace_len);
    data.features.labels.resize(n);
    data.dataset.traces.resize(n);
    for (std::size_t c = 0; c < c_count; ++c) data.dataset.class_names.push_back(class_name(c));

    for (std::size_t c = 0; c < c_count; ++c)
        for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
            Rng rng(derive_seed(spec.seed, c, i));
            const std::size_t row = c * spec.samples_per_class + i;
            Trace& trace = data.dataset.traces[row];
            trace.label = static_cast<int>(c);
            trace.events.resize(t.trace_len);
            trace.events[0] = {0.0, Direction::Outgoing, false};
            double* feat = data.features.values.data() + row * t.trace_len;
            feat[0] = 1.0;
            for (std::size_t b = 0; b < bits; ++b) {
                bool incoming = (templates[c] >> b) & 1;
                if (rng.uniform() < t.flip_prob) incoming = !incoming;
                trace.events[b + 1] = {static_cast<double>(b + 1),
                                       incoming ? Direction::Incoming : Direction::Outgoing,
                                       false};
                feat[b + 1] = incoming ? -1.0 : 1.0;
            }
            data.features.labels[row] = static_cast<int>(c);
        }
    return data;
}

namespace {

// Integrand of the label-information integral for a 1-D Gaussian mixture,
// in nats: sum_c (1/C) f_c(x) ln(f_c(x) / mix(x)).
double gaussian_mi_integrand(const Gaussian1DSpec& g, double x) {
    const auto c_count = static_cast<double>(g.means.size());
    const double inv_two_var = 1.0 / (2.0 * g.sigma * g.sigma);
    const double norm = 1.0 / (g.sigma * std::sqrt(2.0 * 3.14159265358979323846));
    double mix = 0.0;
    std::vector<double> dens(g.means.size());
    for (std::size_t c = 0; c < g.means.size(); ++c) {
        const double d = x - g.means[c];
        dens[c] = norm * std::exp(-d * d * inv_two_var);
        mix += dens[c] / c_count;
    }
    double total = 0.0;
    for (double f : dens)
        if (f > 0.0 && mix > 0.0) total += f / c_count * std::log(f / mix);
    return total;
}

template <typename F>
double adaptive_simpson(const F& f, double a, double m, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, m, b, fa, fm, fb, whole, tol, 48);
}

struct McAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;
};

// Deterministic Monte-Carlo: fixed chunk layout with per-chunk seeds and an
// index-order reduction, so thread count never changes the answer.
template <typename PerDraw>
McAccumulator monte_carlo(std::uint64_t seed, std::uint64_t purpose, const PerDraw& per_draw) {
    constexpr std::size_t kChunks = 64;
    constexpr std::size_t kPerChunk = kMonteCarloDraws / kChunks;
    std::vector<McAccumulator> acc(kChunks);
    parallel_for(kChunks, [&](std::size_t chunk) {
        Rng rng(derive_seed(seed, purpose, chunk));
        McAccumulator& a = acc[chunk];
        for (std::size_t i = 0; i < kPerChunk; ++i) {
            const double v = per_draw(rng);
            a.sum += v;
            a.sum_sq += v * v;
            a.n += 1;
        }
    });
    McAccumulator total;
    for (const McAccumulator& a : acc) {
        total.sum += a.sum;
        total.sum_sq += a.sum_sq;
        total.n += a.n;
    }
    return total;
}

OracleValue mc_result(const McAccumulator& a) {
    const auto n = static_cast<double>(a.n);
    const double mean = a.sum / n;
    const double var = std::max(0.0, a.sum_sq / n - mean * mean);
    return {mean, std::sqrt(var / n), false};
}

// Likelihood of an observed flip-pattern under every class, as flip counts
// against each template.
std::vector<double> template_likelihoods(const std::vector<std::uint64_t>& templates,
                                         std::uint64_t x, const FlipTable& table,
                                         std::size_t bits) {
    std::vector<double> lik(templates.size());
    for (std::size_t c = 0; c < templates.size(); ++c)
        lik[c] = table.likelihood(static_cast<std::size_t>(std::popcount(templates[c] ^ x)), bits);
    return lik;
}

} // namespace

OracleValue oracle_ber(const SynthSpec& spec) {
    validate(spec);

    if (const auto* g = std::get_if<Gaussian1DSpec>(&spec.variant)) {
        if (g->means.size() == 2) {
            const double z = -std::abs(g->means[1] - g->means[0]) / (2.0 * g->sigma);
            return {std_normal_cdf(z), 0.0, true};
        }
        // No closed form for 3+ overlapping components; sample the exact
        // maximum-posterior classifier instead.
        const auto& means = g->means;
        const double sigma = g->sigma;
        const auto acc = monte_carlo(spec.seed, hash_tag("oracle_ber"), [&](Rng& rng) {
            const auto c = static_cast<std::size_t>(rng.index(means.size()));
            const double x = rng.normal(means[c], sigma);
            std::size_t best = 0;
            for (std::size_t j = 1; j < means.size(); ++j)
                if (std::abs(x - means[j]) < std::abs(x - means[best])) best = j;
            return best == c ? 0.0 : 1.0;
        });
        return mc_result(acc);
    }

    if (std::holds_alternative<SeparatedClustersSpec>(spec.variant)) return {0.0, 0.0, true};

    const auto& t = std::get<TemplateTracesSpec>(spec.variant);
    const auto templates = make_templates(t, spec.seed);
    const std::size_t bits = t.trace_len - 1;
    const FlipTable table(t.flip_prob, bits);
    const auto c_count = static_cast<double>(t.num_classes);

    if (t.trace_len <= kEnumerationMaxLen) {
        double correct = 0.0;
        for (std::uint64_t x = 0; x < (std::uint64_t(1) << bits); ++x) {
            const auto lik = template_likelihoods(templates, x, table, bits);
            correct += *std::max_element(lik.begin(), lik.end()) / c_count;
        }
        return {1.0 - correct, 0.0, true};
    }

    const auto acc = monte_carlo(spec.seed, hash_tag("oracle_ber"), [&](Rng& rng) {
        const auto c = static_cast<std::size_t>(rng.index(templates.size()));
        std::uint64_t x = templates[c];
        for (std::size_t b = 0; b < bits; ++b)
            if (rng.uniform() < t.flip_prob) x ^= std::uint64_t(1) << b;
        const auto lik = template_likelihoods(templates, x, table, bits);
        std::size_t best = 0;
        for (std::size_t j = 1; j < lik.size(); ++j)
            if (lik[j] > lik[best]) best = j;
        return best == c ? 0.0 : 1.0;
    });
    return mc_result(acc);
}

OracleValue oracle_mi(const SynthSpec& spec) {
    validate(spec);

    if (const auto* g = std::get_if<Gaussian1DSpec>(&spec.variant)) {
        const auto [lo_it, hi_it] = std::minmax_element(g->means.begin(), g->means.end());
        const double a = *lo_it - 10.0 * g->sigma;
        const double b = *hi_it + 10.0 * g->sigma;
        const double nats =
            integrate([&](double x) { return gaussian_mi_integrand(*g, x); }, a, b,
                      kQuadratureTolNats);
        return {nats * log2e(), 0.0, true};
    }

    if (const auto* s = std::get_if<SeparatedClustersSpec>(&spec.variant))
        return {std::log2(static_cast<double>(s->num_classes)), 0.0, true};

    const auto& t = std::get<TemplateTracesSpec>(spec.variant);
    const auto templates = make_templates(t, spec.seed);
    const std::size_t bits = t.trace_len - 1;
    const FlipTable table(t.flip_prob, bits);
    const auto c_count = static_cast<double>(t.num_classes);

    if (t.trace_len <= kEnumerationMaxLen) {
        double bits_total = 0.0;
        for (std::uint64_t x = 0; x < (std::uint64_t(1) << bits); ++x) {
            const auto lik = template_likelihoods(templates, x, table, bits);
            double mix = 0.0;
            for (double l : lik) mix += l / c_count;
            for (double l : lik)
                if (l > 0.0) bits_total += l / c_count * std::log2(l / mix);
        }
        return {bits_total, 0.0, true};
    }

    const auto acc = monte_carlo(spec.seed, hash_tag("oracle_mi"), [&](Rng& rng) {
        const auto c = static_cast<std::size_t>(rng.index(templates.size()));
        std::uint64_t x = templates[c];
        for (std::size_t b = 0; b < bits; ++b)
            if (rng.uniform() < t.flip_prob) x ^= std::uint64_t(1) << b;
        const auto lik = template_likelihoods(templates, x, table, bits);
        double mix = 0.0;
        for (double l : lik) mix += l / c_count;
        return std::log2(lik[c] / mix);
    });
    return mc_result(acc);
}

} // namespace wfse
