#include "wfse/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <utility>

#include "wfse/errors.hpp"
#include "wfse/log.hpp"
#include "wfse/manual_features.hpp"
#include "wfse/rng.hpp"

#include "layer_json.hpp"

namespace wfse {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void config_fail(const std::string& ctx, const std::string& what) {
    throw ConfigError(ctx + ": " + what);
}

void check_keys(const json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) config_fail(ctx, "unknown key \"" + it.key() + "\"");
    }
}

// Missing keys and JSON nulls both mean "use the default".
const json* find(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return nullptr;
    return &*it;
}

double double_field(const json& j, const std::string& ctx, const char* key, double def) {
    const json* f = find(j, key);
    if (!f) return def;
    if (!f->is_number()) config_fail(ctx, std::string(key) + " must be a number");
    return f->get<double>();
}

bool bool_field(const json& j, const std::string& ctx, const char* key, bool def) {
    const json* f = find(j, key);
    if (!f) return def;
    if (!f->is_boolean()) config_fail(ctx, std::string(key) + " must be a boolean");
    return f->get<bool>();
}

std::string string_field(const json& j, const std::string& ctx, const char* key,
                         const std::string& def) {
    const json* f = find(j, key);
    if (!f) return def;
    if (!f->is_string()) config_fail(ctx, std::string(key) + " must be a string");
    return f->get<std::string>();
}

std::int64_t int_field(const json& j, const std::string& ctx, const char* key, std::int64_t def,
                       std::int64_t min_value) {
    const json* f = find(j, key);
    if (!f) return def;
    if (!f->is_number_integer() && !f->is_number_unsigned())
        config_fail(ctx, std::string(key) + " must be an integer");
    const std::int64_t v = f->get<std::int64_t>();
    if (v < min_value)
        config_fail(ctx, std::string(key) + " must be >= " + std::to_string(min_value));
    return v;
}

std::size_t size_field(const json& j, const std::string& ctx, const char* key, std::size_t def,
                       std::int64_t min_value) {
    return static_cast<std::size_t>(
        int_field(j, ctx, key, static_cast<std::int64_t>(def), min_value));
}

std::uint64_t u64_field(const json& j, const std::string& ctx, const char* key,
                        std::uint64_t def) {
    const json* f = find(j, key);
    if (!f) return def;
    if (f->is_number_unsigned()) return f->get<std::uint64_t>();
    if (f->is_number_integer() && f->get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(f->get<std::int64_t>());
    config_fail(ctx, std::string(key) + " must be a non-negative integer");
}

RepKind rep_kind_from_string(const std::string& s, const std::string& ctx) {
    if (s == "directional") return RepKind::Directional;
    if (s == "timing") return RepKind::Timing;
    config_fail(ctx, "unknown representation \"" + s + "\"");
}

KnnBackend backend_from_string(const std::string& s, const std::string& ctx) {
    if (s == "brute_force") return KnnBackend::BruteForce;
    if (s == "spatial_tree") return KnnBackend::SpatialTree;
    config_fail(ctx, "unknown backend \"" + s + "\"");
}

const char* backend_name(KnnBackend b) {
    return b == KnnBackend::BruteForce ? "brute_force" : "spatial_tree";
}

} // namespace

std::optional<DefenseSpec> defense_spec_from_json(const json& j, std::uint64_t master_seed) {
    const std::string ctx = "config.defense";
    if (!j.is_object()) config_fail(ctx, "must be an object");
    const json* kindp = find(j, "kind");
    if (!kindp || !kindp->is_string()) config_fail(ctx, "kind is required");
    const std::string kind = kindp->get<std::string>();
    if (kind == "none") {
        check_keys(j, ctx, {"kind"});
        return std::nullopt;
    }

    DefenseSpec spec;
    spec.seed = u64_field(j, ctx, "seed", derive_seed(master_seed, hash_tag("defense"), 0));
    if (kind == "constant_rate") {
        check_keys(j, ctx, {"kind", "seed", "rho_out", "rho_in", "pad_multiple"});
        ConstantRateSpec s;
        s.rho_out = double_field(j, ctx, "rho_out", s.rho_out);
        s.rho_in = double_field(j, ctx, "rho_in", s.rho_in);
        s.pad_multiple = int_field(j, ctx, "pad_multiple", s.pad_multiple, 1);
        spec.variant = s;
    } else if (kind == "front") {
        check_keys(j, ctx, {"kind", "seed", "n_client", "n_server", "w_min", "w_max"});
        FrontSpec s;
        s.n_client = int_field(j, ctx, "n_client", s.n_client, 1);
        s.n_server = int_field(j, ctx, "n_server", s.n_server, 1);
        s.w_min = double_field(j, ctx, "w_min", s.w_min);
        s.w_max = double_field(j, ctx, "w_max", s.w_max);
        spec.variant = s;
    } else if (kind == "merge") {
        check_keys(j, ctx, {"kind", "seed", "m"});
        MergeSpec s;
        s.m = int_field(j, ctx, "m", s.m, 1);
        spec.variant = s;
    } else if (kind == "external") {
        check_keys(j, ctx, {"kind", "name"});
        ExternalSpec s;
        s.name = string_field(j, ctx, "name", "");
        if (s.name.empty()) config_fail(ctx, "external defense needs a name");
        spec.variant = s;
    } else {
        config_fail(ctx, "unknown kind \"" + kind + "\"");
    }
    validate(spec);
    return spec;
}

ordered_json defense_spec_to_json(const std::optional<DefenseSpec>& d) {
    ordered_json j;
    if (!d) {
        j["kind"] = "none";
        return j;
    }
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantRateSpec>) {
                j["kind"] = "constant_rate";
                j["rho_out"] = s.rho_out;
                j["rho_in"] = s.rho_in;
                j["pad_multiple"] = s.pad_multiple;
            } else if constexpr (std::is_same_v<T, FrontSpec>) {
                j["kind"] = "front";
                j["n_client"] = s.n_client;
                j["n_server"] = s.n_server;
                j["w_min"] = s.w_min;
                j["w_max"] = s.w_max;
            } else if constexpr (std::is_same_v<T, MergeSpec>) {
                j["kind"] = "merge";
                j["m"] = s.m;
            } else {
                j["kind"] = "external";
                j["name"] = s.name;
            }
        },
        d->variant);
    if (!std::holds_alternative<ExternalSpec>(d->variant)) j["seed"] = d->seed;
    return j;
}

SynthSpec synth_spec_from_json(const json& j) {
    const std::string ctx = "synth";
    if (!j.is_object()) config_fail(ctx, "must be a JSON object");
    const json* kindp = find(j, "kind");
    if (!kindp || !kindp->is_string()) config_fail(ctx, "kind is required");
    const std::string kind = kindp->get<std::string>();

    SynthSpec spec;
    spec.samples_per_class = size_field(j, ctx, "samples_per_class", spec.samples_per_class, 1);
    spec.seed = u64_field(j, ctx, "seed", spec.seed);
    if (kind == "gaussian_1d") {
        check_keys(j, ctx, {"kind", "samples_per_class", "seed", "means", "sigma"});
        Gaussian1DSpec s;
        const json* means = find(j, "means");
        if (!means || !means->is_array()) config_fail(ctx, "means must be an array");
        for (const json& m : *means) {
            if (!m.is_number()) config_fail(ctx, "means entries must be numbers");
            s.means.push_back(m.get<double>());
        }
        s.sigma = double_field(j, ctx, "sigma", s.sigma);
        spec.variant = s;
    } else if (kind == "separated_clusters") {
        check_keys(j, ctx, {"kind", "samples_per_class", "seed", "num_classes", "dim", "gap"});
        SeparatedClustersSpec s;
        s.num_classes = size_field(j, ctx, "num_classes", s.num_classes, 2);
        s.dim = size_field(j, ctx, "dim", s.dim, 1);
        s.gap = double_field(j, ctx, "gap", s.gap);
        spec.variant = s;
    } else if (kind == "template_traces") {
        check_keys(j, ctx,
                   {"kind", "samples_per_class", "seed", "num_classes", "flip_prob", "trace_len"});
        TemplateTracesSpec s;
        s.num_classes = size_field(j, ctx, "num_classes", s.num_classes, 2);
        s.flip_prob = double_field(j, ctx, "flip_prob", s.flip_prob);
        s.trace_len = size_field(j, ctx, "trace_len", s.trace_len, 2);
        spec.variant = s;
    } else {
        config_fail(ctx, "unknown kind \"" + kind + "\"");
    }
    validate(spec);
    return spec;
}

ordered_json synth_spec_to_json(const SynthSpec& spec) {
    ordered_json j;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Gaussian1DSpec>) {
                j["kind"] = "gaussian_1d";
                j["means"] = s.means;
                j["sigma"] = s.sigma;
            } else if constexpr (std::is_same_v<T, SeparatedClustersSpec>) {
                j["kind"] = "separated_clusters";
                j["num_classes"] = s.num_classes;
                j["dim"] = s.dim;
                j["gap"] = s.gap;
            } else {
                j["kind"] = "template_traces";
                j["num_classes"] = s.num_classes;
                j["flip_prob"] = s.flip_prob;
                j["trace_len"] = s.trace_len;
            }
        },
        spec.variant);
    j["samples_per_class"] = spec.samples_per_class;
    j["seed"] = spec.seed;
    return j;
}

namespace {

EmbeddingConfig embedding_from_json(const json& j) {
    const std::string ctx = "config.embedding";
    if (!j.is_object()) config_fail(ctx, "must be an object");
    check_keys(j, ctx, {"layers", "learning_rate", "batch_size", "epochs", "momentum"});
    EmbeddingConfig cfg;
    if (const json* layers = find(j, "layers")) {
        try {
            cfg.layers = layers_from_json(*layers);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            config_fail(ctx, std::string("bad layer list: ") + e.what());
        }
        if (cfg.layers.empty()) config_fail(ctx, "layer list is empty");
    }
    cfg.learning_rate = double_field(j, ctx, "learning_rate", cfg.learning_rate);
    if (!(cfg.learning_rate > 0.0)) config_fail(ctx, "learning_rate must be > 0");
    cfg.batch_size = size_field(j, ctx, "batch_size", cfg.batch_size, 1);
    cfg.epochs = size_field(j, ctx, "epochs", cfg.epochs, 1);
    cfg.momentum = double_field(j, ctx, "momentum", cfg.momentum);
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
        config_fail(ctx, "momentum must be in [0, 1)");
    return cfg;
}

EstimatorSettings estimator_from_json(const json& j) {
    const std::string ctx = "config.estimator";
    if (!j.is_object()) config_fail(ctx, "must be an object");
    check_keys(j, ctx, {"k_mi", "standardize_manual", "backend"});
    EstimatorSettings s;
    s.k_mi = size_field(j, ctx, "k_mi", s.k_mi, 1);
    s.standardize_manual = bool_field(j, ctx, "standardize_manual", s.standardize_manual);
    s.backend = backend_from_string(string_field(j, ctx, "backend", backend_name(s.backend)), ctx);
    return s;
}

// ---- run support ----

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

RepMatrix take_rows(const RepMatrix& m, const std::vector<std::size_t>& rows) {
    RepMatrix out;
    out.kind = m.kind;
    out.length = m.length;
    out.rows = rows.size();
    out.values.resize(rows.size() * m.length);
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* src = m.row(rows[i]);
        std::copy(src, src + m.length, out.values.begin() + static_cast<long>(i * m.length));
        out.labels.push_back(m.labels[rows[i]]);
    }
    return out;
}

const char* embed_seed_tag(RepKind kind) {
    return kind == RepKind::Directional ? "embed_directional" : "embed_timing";
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double pop_std_of(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

AggregateStat aggregate_of(const std::vector<double>& v) {
    AggregateStat a;
    a.mean = mean_of(v);
    a.has_std = v.size() >= 2;
    if (a.has_std) a.stddev = pop_std_of(v, a.mean);
    return a;
}

ordered_json consistency_to_json(const ConsistencyResult& c) {
    ordered_json j;
    j["status"] = consistency_kind_name(c.kind);
    j["gap_bits"] = c.gap_bits;
    j["fano_bits"] = c.fano_bits;
    j["kovalevskij_bits"] = c.kovalevskij_bits;
    return j;
}

ordered_json aggregate_to_json(const AggregateStat& a) {
    ordered_json j;
    j["mean"] = a.mean;
    if (a.has_std)
        j["std"] = a.stddev;
    else
        j["std"] = nullptr;
    return j;
}

} // namespace

RunConfig run_config_from_json(const json& j) {
    const std::string ctx = "config";
    if (!j.is_object()) config_fail(ctx, "top level must be a JSON object");
    check_keys(j, ctx,
               {"dataset", "output", "seed", "rep_length", "folds", "fold_subset",
                "representations", "include_manual_features", "baseline_classifier_error",
                "defense", "embedding", "estimator"});

    RunConfig cfg;
    cfg.dataset_root = string_field(j, ctx, "dataset", "");
    cfg.output = string_field(j, ctx, "output", cfg.output.string());
    cfg.seed = u64_field(j, ctx, "seed", cfg.seed);
    cfg.rep_length = size_field(j, ctx, "rep_length", cfg.rep_length, 1);
    cfg.num_folds = size_field(j, ctx, "folds", cfg.num_folds, 2);

    if (const json* fs = find(j, "fold_subset")) {
        if (!fs->is_array()) config_fail(ctx, "fold_subset must be an array");
        cfg.fold_subset.clear();
        for (const json& f : *fs) {
            if (!f.is_number_integer() && !f.is_number_unsigned())
                config_fail(ctx, "fold_subset entries must be integers");
            const std::int64_t v = f.get<std::int64_t>();
            if (v < 0 || static_cast<std::size_t>(v) >= cfg.num_folds)
                config_fail(ctx, "fold_subset entry " + std::to_string(v) + " out of range");
            cfg.fold_subset.push_back(static_cast<std::size_t>(v));
        }
        std::vector<std::size_t> sorted = cfg.fold_subset;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            config_fail(ctx, "fold_subset has duplicates");
    }

    if (const json* reps = find(j, "representations")) {
        if (!reps->is_array()) config_fail(ctx, "representations must be an array");
        cfg.representations.clear();
        for (const json& r : *reps) {
            if (!r.is_string()) config_fail(ctx, "representations entries must be strings");
            const RepKind k = rep_kind_from_string(r.get<std::string>(), ctx);
            for (RepKind seen : cfg.representations)
                if (seen == k) config_fail(ctx, "duplicate representation");
            cfg.representations.push_back(k);
        }
    }

    cfg.include_manual_features =
        bool_field(j, ctx, "include_manual_features", cfg.include_manual_features);
    cfg.baseline_classifier_error =
        bool_field(j, ctx, "baseline_classifier_error", cfg.baseline_classifier_error);
    if (cfg.representations.empty() && !cfg.include_manual_features)
        config_fail(ctx, "at least one representation is required");

    if (const json* d = find(j, "defense")) cfg.defense = defense_spec_from_json(*d, cfg.seed);
    if (const json* e = find(j, "embedding")) cfg.embedding = embedding_from_json(*e);
    if (const json* s = find(j, "estimator")) cfg.estimator = estimator_from_json(*s);
    return cfg;
}

ordered_json run_config_to_json(const RunConfig& cfg) {
    ordered_json j;
    j["dataset"] = cfg.dataset_root.string();
    j["output"] = cfg.output.string();
    j["seed"] = cfg.seed;
    j["rep_length"] = cfg.rep_length;
    j["folds"] = cfg.num_folds;
    j["fold_subset"] = cfg.fold_subset;
    ordered_json reps = ordered_json::array();
    for (RepKind k : cfg.representations) reps.push_back(rep_kind_name(k));
    j["representations"] = reps;
    j["include_manual_features"] = cfg.include_manual_features;
    j["baseline_classifier_error"] = cfg.baseline_classifier_error;
    j["defense"] = defense_spec_to_json(cfg.defense);
    ordered_json emb;
    emb["layers"] = layers_to_json(cfg.embedding.layers);
    emb["learning_rate"] = cfg.embedding.learning_rate;
    emb["batch_size"] = cfg.embedding.batch_size;
    emb["epochs"] = cfg.embedding.epochs;
    emb["momentum"] = cfg.embedding.momentum;
    j["embedding"] = emb;
    ordered_json est;
    est["k_mi"] = cfg.estimator.k_mi;
    est["standardize_manual"] = cfg.estimator.standardize_manual;
    est["backend"] = backend_name(cfg.estimator.backend);
    j["estimator"] = est;
    return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

EstimateReport run_estimation(const RunConfig& cfg, const TraceDataset& dataset) {
    Stopwatch total;
    if (cfg.representations.empty() && !cfg.include_manual_features)
        throw ConfigError("run: at least one representation is required");
    if (cfg.rep_length == 0) throw ConfigError("run: rep_length must be >= 1");

    EstimateReport report;
    report.config = cfg;

    // Defense first, on the whole dataset: splits must see the defended
    // geometry, and per-trace seeds keep the result fold-independent.
    const TraceDataset* data = &dataset;
    TraceDataset defended_storage;
    if (cfg.defense && !std::holds_alternative<ExternalSpec>(cfg.defense->variant)) {
        Stopwatch sw;
        DefendedDataset dd = apply_defense(dataset, *cfg.defense);
        report.timing.defense_seconds = sw.seconds();
        report.overhead = dd.overhead;
        defended_storage = std::move(dd.dataset);
        data = &defended_storage;
        log_info("defense applied: bandwidth overhead " +
                 fmt_double(report.overhead->bandwidth_overhead) + ", latency " +
                 fmt_double(report.overhead->latency_overhead) + "s");
    } else if (cfg.defense) {
        log_info("external defense \"" + std::get<ExternalSpec>(cfg.defense->variant).name +
                 "\": input is treated as already defended");
    }

    const std::size_t num_classes = data->num_classes();
    report.num_classes = num_classes;
    report.class_names = data->class_names;
    report.rejected_empty = data->rejected_empty;
    report.rejected_incoming_first = data->rejected_incoming_first;

    const SplitPlan plan =
        make_folds(*data, cfg.num_folds, derive_seed(cfg.seed, hash_tag("split"), 0));
    report.dropped_by_split = plan.dropped_samples;

    std::vector<std::size_t> selected = cfg.fold_subset;
    if (selected.empty()) {
        selected.resize(cfg.num_folds);
        for (std::size_t f = 0; f < cfg.num_folds; ++f) selected[f] = f;
    }

    // Encode each trace once; folds take row subsets.
    std::vector<std::pair<RepKind, RepMatrix>> full_reps;
    for (RepKind kind : cfg.representations)
        full_reps.emplace_back(kind, make_rep_matrix(*data, kind, cfg.rep_length));
    FeatureMatrix manual_full;
    if (cfg.include_manual_features) {
        Stopwatch sw;
        manual_full = manual_feature_matrix(*data);
        report.timing.embed_seconds += sw.seconds();
    }

    const double ber_cap =
        static_cast<double>(num_classes - 1) / static_cast<double>(num_classes);
    std::string first_error;

    for (std::size_t f : selected) {
        FoldResult fr;
        fr.fold_index = f;
        try {
            const FoldSplit& fs = plan.folds[f];
            std::vector<std::size_t> eval_rows = fs.e1;
            eval_rows.insert(eval_rows.end(), fs.e2.begin(), fs.e2.end());

            // No estimator may see a training sample.
            std::vector<std::size_t> train_sorted = fs.train;
            std::sort(train_sorted.begin(), train_sorted.end());
            for (std::size_t row : eval_rows)
                if (std::binary_search(train_sorted.begin(), train_sorted.end(), row))
                    throw DataError("internal: fold " + std::to_string(f) +
                                    " evaluation row " + std::to_string(row) +
                                    " is also a training row");

            EvalSplit es;
            es.e1.resize(fs.e1.size());
            es.e2.resize(fs.e2.size());
            for (std::size_t i = 0; i < fs.e1.size(); ++i) es.e1[i] = i;
            for (std::size_t i = 0; i < fs.e2.size(); ++i) es.e2[i] = fs.e1.size() + i;

            std::vector<FeatureMatrix> reps;
            std::vector<std::pair<bool, double>> baselines;
            for (const auto& [kind, full] : full_reps) {
                EmbeddingConfig ec = cfg.embedding;
                ec.seed = derive_seed(cfg.seed, f, hash_tag(embed_seed_tag(kind)));
                Stopwatch train_sw;
                const RepMatrix train_m = take_rows(full, fs.train);
                const EmbeddingModel model = train_embedding(train_m, ec);
                report.timing.train_seconds += train_sw.seconds();

                Stopwatch embed_sw;
                const RepMatrix eval_m = take_rows(full, eval_rows);
                reps.push_back(embed(model, eval_m));
                double baseline = 0.0;
                if (cfg.baseline_classifier_error) {
                    const std::vector<int> pred = classify(model, eval_m);
                    std::size_t wrong = 0;
                    for (std::size_t i = 0; i < pred.size(); ++i)
                        if (pred[i] != eval_m.labels[i]) ++wrong;
                    baseline = static_cast<double>(wrong) / static_cast<double>(pred.size());
                }
                baselines.emplace_back(cfg.baseline_classifier_error, baseline);
                report.timing.embed_seconds += embed_sw.seconds();
            }
            if (cfg.include_manual_features) {
                reps.push_back(select_rows(manual_full, eval_rows));
                baselines.emplace_back(false, 0.0);
            }

            Stopwatch est_sw;
            const BerEstimate ber = estimate_ber(reps, es, cfg.estimator.standardize_manual,
                                                 cfg.estimator.backend);
            const MiEstimate mi = estimate_mi(reps, es, cfg.estimator.k_mi,
                                              cfg.estimator.standardize_manual,
                                              cfg.estimator.backend);
            report.timing.estimate_seconds += est_sw.seconds();

            for (std::size_t i = 0; i < reps.size(); ++i) {
                FoldRepResult rr;
                rr.kind = reps[i].kind;
                rr.knn_error = ber.per_representation[i].knn_error;
                rr.ber_lower = ber.per_representation[i].lower_bound;
                rr.mi_bits = mi.per_representation[i].bits;
                rr.mi_clamped = mi.per_representation[i].clamped;
                rr.mi_k_reduced = mi.per_representation[i].k_reduced;
                rr.has_baseline = baselines[i].first;
                rr.baseline_error = baselines[i].second;
                fr.representations.push_back(rr);
            }
            fr.ber_knn = ber.knn_error;
            fr.ber_lower = std::min(ber.lower_bound, ber_cap);
            fr.mi_bits = mi.bits;
            fr.consistency = check_consistency(fr.ber_lower, fr.mi_bits, num_classes);
            log_info("fold " + std::to_string(f) + ": ber_knn=" + fmt_double(fr.ber_knn) +
                     " ber_lower=" + fmt_double(fr.ber_lower) +
                     " mi_bits=" + fmt_double(fr.mi_bits) + " consistency=" +
                     consistency_kind_name(fr.consistency.kind));
        } catch (const std::exception& e) {
            fr.failed = true;
            fr.error = e.what();
            if (first_error.empty()) first_error = e.what();
            log_warn("fold " + std::to_string(f) + " failed: " + fr.error);
        }
        report.folds.push_back(std::move(fr));
    }

    std::vector<double> knns, lowers, mis;
    for (const FoldResult& fr : report.folds) {
        if (fr.failed) continue;
        knns.push_back(fr.ber_knn);
        lowers.push_back(fr.ber_lower);
        mis.push_back(fr.mi_bits);
    }
    if (knns.empty())
        throw DataError("all folds failed; first error: " + first_error);
    report.folds_used = knns.size();
    report.ber_knn = aggregate_of(knns);
    report.ber_lower = aggregate_of(lowers);
    report.mi_bits = aggregate_of(mis);

    const FoldResult* first_ok = nullptr;
    for (const FoldResult& fr : report.folds)
        if (!fr.failed) {
            first_ok = &fr;
            break;
        }
    for (std::size_t i = 0; i < first_ok->representations.size(); ++i) {
        RepAggregate ra;
        ra.kind = first_ok->representations[i].kind;
        std::size_t n = 0;
        for (const FoldResult& fr : report.folds) {
            if (fr.failed) continue;
            ra.knn_error_mean += fr.representations[i].knn_error;
            ra.ber_lower_mean += fr.representations[i].ber_lower;
            ra.mi_bits_mean += fr.representations[i].mi_bits;
            ++n;
        }
        ra.knn_error_mean /= static_cast<double>(n);
        ra.ber_lower_mean /= static_cast<double>(n);
        ra.mi_bits_mean /= static_cast<double>(n);
        report.per_representation.push_back(ra);
    }

    report.consistency =
        check_consistency(report.ber_lower.mean, report.mi_bits.mean, num_classes);
    report.timing.total_seconds = total.seconds();
    return report;
}

EstimateReport run_estimation(const RunConfig& cfg) {
    if (cfg.dataset_root.empty()) throw ConfigError("run: dataset path is required");
    const TraceDataset dataset = load_dataset(cfg.dataset_root);
    return run_estimation(cfg, dataset);
}

nlohmann::ordered_json report_to_json(const EstimateReport& report) {
    ordered_json j;
    j["version"] = report.version;
    j["config"] = run_config_to_json(report.config);

    ordered_json ds;
    ds["num_classes"] = report.num_classes;
    ds["classes"] = report.class_names;
    ds["rejected_empty"] = report.rejected_empty;
    ds["rejected_incoming_first"] = report.rejected_incoming_first;
    ds["dropped_by_split"] = report.dropped_by_split;
    j["dataset"] = ds;

    if (report.overhead) {
        ordered_json oh;
        oh["bandwidth"] = report.overhead->bandwidth_overhead;
        oh["latency_seconds"] = report.overhead->latency_overhead;
        j["overhead"] = oh;
    } else {
        j["overhead"] = nullptr;
    }

    ordered_json folds = ordered_json::array();
    for (const FoldResult& fr : report.folds) {
        ordered_json fj;
        fj["fold"] = fr.fold_index;
        fj["failed"] = fr.failed;
        if (fr.failed) {
            fj["error"] = fr.error;
            folds.push_back(fj);
            continue;
        }
        ordered_json reps = ordered_json::array();
        for (const FoldRepResult& rr : fr.representations) {
            ordered_json rj;
            rj["representation"] = feature_kind_name(rr.kind);
            rj["knn_error"] = rr.knn_error;
            rj["ber_lower"] = rr.ber_lower;
            rj["mi_bits"] = rr.mi_bits;
            rj["mi_clamped"] = rr.mi_clamped;
            rj["mi_k_reduced"] = rr.mi_k_reduced;
            if (rr.has_baseline) rj["baseline_error"] = rr.baseline_error;
            reps.push_back(rj);
        }
        fj["representations"] = reps;
        fj["ber_knn"] = fr.ber_knn;
        fj["ber_lower"] = fr.ber_lower;
        fj["mi_bits"] = fr.mi_bits;
        fj["consistency"] = consistency_to_json(fr.consistency);
        folds.push_back(fj);
    }
    j["folds"] = folds;

    ordered_json agg;
    agg["folds_used"] = report.folds_used;
    agg["ber_knn"] = aggregate_to_json(report.ber_knn);
    agg["ber_lower"] = aggregate_to_json(report.ber_lower);
    agg["mi_bits"] = aggregate_to_json(report.mi_bits);
    ordered_json pr = ordered_json::array();
    for (const RepAggregate& ra : report.per_representation) {
        ordered_json rj;
        rj["representation"] = feature_kind_name(ra.kind);
        rj["knn_error_mean"] = ra.knn_error_mean;
        rj["ber_lower_mean"] = ra.ber_lower_mean;
        rj["mi_bits_mean"] = ra.mi_bits_mean;
        pr.push_back(rj);
    }
    agg["per_representation"] = pr;
    agg["consistency"] = consistency_to_json(report.consistency);
    j["aggregates"] = agg;

    ordered_json t;
    t["defense_seconds"] = report.timing.defense_seconds;
    t["train_seconds"] = report.timing.train_seconds;
    t["embed_seconds"] = report.timing.embed_seconds;
    t["estimate_seconds"] = report.timing.estimate_seconds;
    t["total_seconds"] = report.timing.total_seconds;
    j["timing"] = t;
    return j;
}

std::string csv_from_report_json(const json& report) {
    const bool with_baseline =
        report.at("config").at("baseline_classifier_error").get<bool>();
    std::string csv = "fold,representation,knn_error,ber_lower,mi_bits";
    if (with_baseline) csv += ",baseline_error";
    csv += "\n";
    for (const json& fj : report.at("folds")) {
        if (fj.at("failed").get<bool>()) continue;
        const std::string fold = std::to_string(fj.at("fold").get<std::size_t>());
        for (const json& rj : fj.at("representations")) {
            csv += fold;
            csv += ',';
            csv += rj.at("representation").get<std::string>();
            csv += ',';
            csv += fmt_double(rj.at("knn_error").get<double>());
            csv += ',';
            csv += fmt_double(rj.at("ber_lower").get<double>());
            csv += ',';
            csv += fmt_double(rj.at("mi_bits").get<double>());
            if (with_baseline) {
                csv += ',';
                if (rj.contains("baseline_error"))
                    csv += fmt_double(rj.at("baseline_error").get<double>());
            }
            csv += '\n';
        }
    }
    return csv;
}

std::string report_csv(const EstimateReport& report) {
    return csv_from_report_json(report_to_json(report));
}

void emit_report(const EstimateReport& report, const std::filesystem::path& json_path) {
    if (report.folds.empty()) throw DataError("emit_report: report has no folds");

    const ordered_json j = report_to_json(report);
    const std::string csv = csv_from_report_json(j);
    std::filesystem::path csv_path = json_path;
    csv_path.replace_extension(".csv");

    {
        std::ofstream out(json_path, std::ios::binary);
        if (!out) throw DataError("cannot write report: " + json_path.string());
        out << j.dump(2) << "\n";
    }
    {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw DataError("cannot write report: " + csv_path.string());
        out << csv;
    }
    log_info("report written: " + json_path.string() + ", " + csv_path.string());
}

namespace {

struct Verify {
    double tol;
    ReportCheck check;

    bool fail(const std::string& what) {
        check.ok = false;
        check.detail = what;
        return false;
    }

    bool close(double a, double b, const std::string& what) {
        if (std::abs(a - b) <= tol) return true;
        return fail(what + ": stored " + fmt_double(b) + ", recomputed " + fmt_double(a));
    }
};

} // namespace

ReportCheck verify_report_json(const json& report, double tol) {
    Verify v{tol, {}};
    try {
        const std::size_t num_classes = report.at("dataset").at("num_classes").get<std::size_t>();
        if (num_classes < 2) {
            v.fail("dataset.num_classes must be >= 2");
            return v.check;
        }
        const double cap =
            static_cast<double>(num_classes - 1) / static_cast<double>(num_classes);

        std::vector<double> knns, lowers, mis;
        std::vector<std::vector<double>> rep_knn, rep_lower, rep_mi;
        std::vector<std::string> rep_names;

        for (const json& fj : report.at("folds")) {
            if (fj.at("failed").get<bool>()) continue;
            const std::string fold = std::to_string(fj.at("fold").get<std::size_t>());
            double min_knn = 1.0, min_lower = 1.0, max_mi = 0.0;
            bool first = true;
            std::vector<std::string> names;
            std::vector<double> knn_vals, lower_vals, mi_vals;
            for (const json& rj : fj.at("representations")) {
                const double kerr = rj.at("knn_error").get<double>();
                const double lower = rj.at("ber_lower").get<double>();
                const double mi = rj.at("mi_bits").get<double>();
                if (first || kerr < min_knn) min_knn = kerr;
                if (first || lower < min_lower) min_lower = lower;
                if (first || mi > max_mi) max_mi = mi;
                first = false;
                names.push_back(rj.at("representation").get<std::string>());
                knn_vals.push_back(kerr);
                lower_vals.push_back(lower);
                mi_vals.push_back(mi);
            }
            if (first) {
                v.fail("fold " + fold + ": no representations");
                return v.check;
            }
            min_lower = std::min(min_lower, cap);
            if (!v.close(min_knn, fj.at("ber_knn").get<double>(), "fold " + fold + " ber_knn"))
                return v.check;
            if (!v.close(min_lower, fj.at("ber_lower").get<double>(),
                         "fold " + fold + " ber_lower"))
                return v.check;
            if (!v.close(max_mi, fj.at("mi_bits").get<double>(), "fold " + fold + " mi_bits"))
                return v.check;

            const ConsistencyResult c = check_consistency(
                fj.at("ber_lower").get<double>(), fj.at("mi_bits").get<double>(), num_classes);
            const json& cj = fj.at("consistency");
            if (cj.at("status").get<std::string>() != consistency_kind_name(c.kind)) {
                v.fail("fold " + fold + " consistency status: stored " +
                       cj.at("status").get<std::string>() + ", recomputed " +
                       consistency_kind_name(c.kind));
                return v.check;
            }
            if (!v.close(c.gap_bits, cj.at("gap_bits").get<double>(),
                         "fold " + fold + " consistency gap_bits"))
                return v.check;

            if (rep_names.empty()) {
                rep_names = names;
                rep_knn.assign(names.size(), {});
                rep_lower.assign(names.size(), {});
                rep_mi.assign(names.size(), {});
            } else if (rep_names != names) {
                v.fail("fold " + fold + ": representation list differs between folds");
                return v.check;
            }
            for (std::size_t i = 0; i < names.size(); ++i) {
                rep_knn[i].push_back(knn_vals[i]);
                rep_lower[i].push_back(lower_vals[i]);
                rep_mi[i].push_back(mi_vals[i]);
            }
            knns.push_back(fj.at("ber_knn").get<double>());
            lowers.push_back(fj.at("ber_lower").get<double>());
            mis.push_back(fj.at("mi_bits").get<double>());
        }

        if (knns.empty()) {
            v.fail("no successful folds");
            return v.check;
        }
        const json& agg = report.at("aggregates");
        if (agg.at("folds_used").get<std::size_t>() != knns.size()) {
            v.fail("aggregates.folds_used: stored " +
                   std::to_string(agg.at("folds_used").get<std::size_t>()) + ", recomputed " +
                   std::to_string(knns.size()));
            return v.check;
        }

        const auto check_stat = [&](const char* name, const std::vector<double>& vals) {
            const AggregateStat a = aggregate_of(vals);
            const json& sj = agg.at(name);
            if (!v.close(a.mean, sj.at("mean").get<double>(),
                         std::string("aggregates.") + name + ".mean"))
                return false;
            if (a.has_std != !sj.at("std").is_null())
                return v.fail(std::string("aggregates.") + name +
                              ".std presence does not match fold count");
            if (a.has_std &&
                !v.close(a.stddev, sj.at("std").get<double>(),
                         std::string("aggregates.") + name + ".std"))
                return false;
            return true;
        };
        if (!check_stat("ber_knn", knns)) return v.check;
        if (!check_stat("ber_lower", lowers)) return v.check;
        if (!check_stat("mi_bits", mis)) return v.check;

        const json& pr = agg.at("per_representation");
        if (pr.size() != rep_names.size()) {
            v.fail("aggregates.per_representation: stored " + std::to_string(pr.size()) +
                   " entries, recomputed " + std::to_string(rep_names.size()));
            return v.check;
        }
        for (std::size_t i = 0; i < rep_names.size(); ++i) {
            const json& rj = pr.at(i);
            const std::string where =
                "aggregates.per_representation[" + rep_names[i] + "]";
            if (rj.at("representation").get<std::string>() != rep_names[i]) {
                v.fail(where + ": representation order differs from folds");
                return v.check;
            }
            if (!v.close(mean_of(rep_knn[i]), rj.at("knn_error_mean").get<double>(),
                         where + ".knn_error_mean"))
                return v.check;
            if (!v.close(mean_of(rep_lower[i]), rj.at("ber_lower_mean").get<double>(),
                         where + ".ber_lower_mean"))
                return v.check;
            if (!v.close(mean_of(rep_mi[i]), rj.at("mi_bits_mean").get<double>(),
                         where + ".mi_bits_mean"))
                return v.check;
        }

        const ConsistencyResult c =
            check_consistency(agg.at("ber_lower").at("mean").get<double>(),
                              agg.at("mi_bits").at("mean").get<double>(), num_classes);
        const json& cj = agg.at("consistency");
        if (cj.at("status").get<std::string>() != consistency_kind_name(c.kind)) {
            v.fail("aggregates.consistency status: stored " +
                   cj.at("status").get<std::string>() + ", recomputed " +
                   consistency_kind_name(c.kind));
            return v.check;
        }
        if (!v.close(c.gap_bits, cj.at("gap_bits").get<double>(),
                     "aggregates.consistency gap_bits"))
            return v.check;
    } catch (const json::exception& e) {
        v.fail(std::string("malformed report: ") + e.what());
    }
    return v.check;
}

} // namespace wfse
