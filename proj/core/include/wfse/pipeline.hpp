#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wfse/bounds.hpp"
#include "wfse/defenses.hpp"
#include "wfse/embedding.hpp"
#include "wfse/estimators.hpp"
#include "wfse/knn.hpp"
#include "wfse/split.hpp"
#include "wfse/synth.hpp"
#include "wfse/trace_io.hpp"

namespace wfse {

inline constexpr char kToolVersion[] = "0.1.0";

struct EstimatorSettings {
    std::size_t k_mi = 5;
    bool standardize_manual = true;
    KnnBackend backend = KnnBackend::SpatialTree;
};

// Everything one estimation run depends on. A parsed config plus the master
// seed fully determines the report, file timestamps aside.
struct RunConfig {
    std::filesystem::path dataset_root;
    std::filesystem::path output = "report.json";
    std::uint64_t seed = 0;
    std::size_t rep_length = kDefaultRepLength;
    std::size_t num_folds = 5;
    std::vector<std::size_t> fold_subset; // empty = run every fold
    std::vector<RepKind> representations = {RepKind::Directional, RepKind::Timing};
    bool include_manual_features = false;
    bool baseline_classifier_error = false;
    std::optional<DefenseSpec> defense; // nullopt = estimate the input as-is
    EmbeddingConfig embedding;          // its seed field is ignored; fold seeds derive from `seed`
    EstimatorSettings estimator;
};

// Accepts a partial object; absent keys keep their defaults. A defense block
// without a seed gets one derived from the master seed, so the echoed config
// pins it. Unknown defense kinds, bad enum strings, or non-object input throw
// ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

// Defense block shared by run configs and the defend subcommand.
// {"kind": "none"} yields nullopt. A block without a seed gets
// derive_seed(master_seed, hash("defense"), 0) so reruns reproduce.
std::optional<DefenseSpec> defense_spec_from_json(const nlohmann::json& j,
                                                  std::uint64_t master_seed);
nlohmann::ordered_json defense_spec_to_json(const std::optional<DefenseSpec>& spec);

// {"kind": "gaussian_1d" | "separated_clusters" | "template_traces", ...}
// plus samples_per_class and seed. Validated before returning.
SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json synth_spec_to_json(const SynthSpec& spec);

// One representation's estimates on one fold.
struct FoldRepResult {
    FeatureKind kind = FeatureKind::ManualFeatures;
    double knn_error = 0.0;
    double ber_lower = 0.0;
    double mi_bits = 0.0;
    bool mi_clamped = false;
    bool mi_k_reduced = false;
    bool has_baseline = false;   // learned representations only
    double baseline_error = 0.0; // classifier-head error on the held-out fold
};

struct FoldResult {
    std::size_t fold_index = 0;
    bool failed = false;
    std::string error; // what() of the exception that sank the fold
    std::vector<FoldRepResult> representations;
    double ber_knn = 0.0;   // min over representations
    double ber_lower = 0.0; // min over representations, capped at (C-1)/C
    double mi_bits = 0.0;   // max over representations
    ConsistencyResult consistency;
};

struct AggregateStat {
    double mean = 0.0;
    double stddev = 0.0; // population std over folds
    bool has_std = false; // false with fewer than two successful folds
};

struct RepAggregate {
    FeatureKind kind = FeatureKind::ManualFeatures;
    double knn_error_mean = 0.0;
    double ber_lower_mean = 0.0;
    double mi_bits_mean = 0.0;
};

struct TimingBreakdown {
    double defense_seconds = 0.0;
    double train_seconds = 0.0;
    double embed_seconds = 0.0; // representation construction, manual features included
    double estimate_seconds = 0.0;
    double total_seconds = 0.0;
};

struct EstimateReport {
    std::string version = kToolVersion;
    RunConfig config; // echo with resolved seeds
    std::size_t num_classes = 0;
    std::vector<std::string> class_names;
    std::size_t rejected_empty = 0;
    std::size_t rejected_incoming_first = 0;
    std::size_t dropped_by_split = 0;
    std::optional<OverheadStats> overhead; // absent when no defense was applied
    std::vector<FoldResult> folds;
    std::size_t folds_used = 0; // successful folds behind the aggregates
    AggregateStat ber_knn;
    AggregateStat ber_lower;
    AggregateStat mi_bits;
    std::vector<RepAggregate> per_representation;
    ConsistencyResult consistency; // aggregate means against the bound region
    TimingBreakdown timing;
};

// Full run over an already loaded dataset: optional defense applied once,
// stratified folds, per-(fold, representation) embedding training with seeds
// derived from (master seed, fold, representation), estimation on the two
// held-out halves only. A fold that throws is recorded as failed and the run
// continues; zero successful folds is an error. The estimation sets are
// asserted disjoint from the training rows before any estimator runs.
EstimateReport run_estimation(const RunConfig& cfg, const TraceDataset& dataset);

// Loads cfg.dataset_root first. External defense specs mark data as already
// defended elsewhere: the traces are used as-is and no overhead is reported.
EstimateReport run_estimation(const RunConfig& cfg);

nlohmann::ordered_json report_to_json(const EstimateReport& report);

// One row per successful fold and representation:
// fold,representation,knn_error,ber_lower,mi_bits[,baseline_error]
// The trailing column appears only when the run recorded baselines; manual
// rows leave it empty. Numbers print with %.10g.
std::string report_csv(const EstimateReport& report);

// Writes the JSON report to `json_path` and the CSV next to it with the
// extension swapped to .csv. Byte-stable for equal reports. Throws DataError
// when the report has no folds.
void emit_report(const EstimateReport& report, const std::filesystem::path& json_path);

struct ReportCheck {
    bool ok = true;
    std::string detail; // first mismatch, empty when ok
};

// Recomputes every derived number in a report JSON from its per-fold rows:
// per-fold min/max over representations, aggregate mean/std, per-
// representation means, consistency verdicts. Catches hand-edited or stale
// aggregate blocks.
ReportCheck verify_report_json(const nlohmann::json& report, double tol = 1e-9);

// Rebuilds the CSV from a report JSON; byte-identical to the file emit_report
// wrote for the same report.
std::string csv_from_report_json(const nlohmann::json& report);

} // namespace wfse
