#include "wfse/split.hpp"

#include <algorithm>

#include "wfse/errors.hpp"
#include "wfse/log.hpp"
#include "wfse/rng.hpp"

namespace wfse {

SplitPlan make_folds(const TraceDataset& dataset, std::size_t num_folds, std::uint64_t seed) {
    if (num_folds < 2) throw ConfigError("make_folds: need at least 2 folds");
    if (dataset.traces.empty()) throw DataError("make_folds: empty dataset");

    const std::size_t c_count = dataset.num_classes();
    std::vector<std::vector<std::size_t>> by_class(c_count);
    for (std::size_t i = 0; i < dataset.traces.size(); ++i)
        by_class[static_cast<std::size_t>(dataset.traces[i].label)].push_back(i);

    SplitPlan plan;
    plan.folds.resize(num_folds);
    const std::size_t unit = 2 * num_folds;

    for (std::size_t c = 0; c < c_count; ++c) {
        auto& rows = by_class[c];
        if (rows.size() < unit) {
            const std::string name =
                c < dataset.class_names.size() ? dataset.class_names[c] : std::to_string(c);
            throw DataError("make_folds: class '" + name + "' has " +
                            std::to_string(rows.size()) + " samples, needs " +
                            std::to_string(unit));
        }
        Rng rng(derive_seed(seed, c, 0));
        rng.shuffle(rows);

        const std::size_t usable = rows.size() / unit * unit;
        plan.dropped_samples += rows.size() - usable;
        const std::size_t chunk = usable / num_folds;
        const std::size_t half = chunk / 2;

        for (std::size_t f = 0; f < num_folds; ++f) {
            const std::size_t base = f * chunk;
            for (std::size_t j = 0; j < half; ++j) plan.folds[f].e1.push_back(rows[base + j]);
            for (std::size_t j = half; j < chunk; ++j) plan.folds[f].e2.push_back(rows[base + j]);
            for (std::size_t g = 0; g < num_folds; ++g) {
                if (g == f) continue;
                for (std::size_t j = 0; j < chunk; ++j)
                    plan.folds[f].train.push_back(rows[g * chunk + j]);
            }
        }
    }

    if (plan.dropped_samples > 0)
        log_info("split: dropped " + std::to_string(plan.dropped_samples) +
                 " sample(s) to keep folds stratified");
    return plan;
}

} // namespace wfse
