#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "wfse/embedding.hpp"
#include "wfse/errors.hpp"
#include "wfse/synth.hpp"

using namespace wfse;

namespace {

std::vector<LayerSpec> tiny_layers() {
    return {ConvLayerSpec{4, 4, 2}, ReluLayerSpec{}, GlobalAvgPoolLayerSpec{},
            DenseLayerSpec{8}, ReluLayerSpec{}};
}

EmbeddingConfig tiny_config(std::uint64_t seed = 5, std::size_t epochs = 30) {
    EmbeddingConfig cfg;
    cfg.layers = tiny_layers();
    cfg.learning_rate = 0.05;
    cfg.batch_size = 16;
    cfg.epochs = epochs;
    cfg.seed = seed;
    return cfg;
}

// 3 classes of noise-free direction templates: linearly separable, so the
// tiny network should drive training error to zero.
RepMatrix template_matrix(RepKind kind = RepKind::Directional, std::size_t per_class = 8,
                          std::uint64_t seed = 21) {
    SynthSpec spec;
    spec.variant = TemplateTracesSpec{3, 0.0, 12};
    spec.samples_per_class = per_class;
    spec.seed = seed;
    return make_rep_matrix(generate(spec).dataset, kind, 12);
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_SUITE("embedding") {

TEST_CASE("shape inference rejects invalid architectures") {
    const RepMatrix data = template_matrix();
    const auto with_layers = [&](std::vector<LayerSpec> layers) {
        EmbeddingConfig cfg = tiny_config();
        cfg.layers = std::move(layers);
        return cfg;
    };
    CHECK_THROWS_AS(train_embedding(data, with_layers({})), ConfigError);
    // Kernel longer than the 12-sample input.
    CHECK_THROWS_AS(train_embedding(data, with_layers({ConvLayerSpec{4, 13, 1},
                                                       GlobalAvgPoolLayerSpec{}})),
                    ConfigError);
    // Conv after flatten has no channel structure to slide over.
    CHECK_THROWS_AS(train_embedding(data, with_layers({FlattenLayerSpec{}, ConvLayerSpec{}})),
                    ConfigError);
    // Dense before any flatten or pool.
    CHECK_THROWS_AS(train_embedding(data, with_layers({ConvLayerSpec{4, 4, 2},
                                                       DenseLayerSpec{8}})),
                    ConfigError);
    // Architecture must end flat.
    CHECK_THROWS_AS(train_embedding(data, with_layers({ConvLayerSpec{4, 4, 2}})), ConfigError);
    // A 1-wide feature layer cannot feed the estimators.
    CHECK_THROWS_AS(train_embedding(data, with_layers({GlobalAvgPoolLayerSpec{},
                                                       DenseLayerSpec{1}})),
                    ConfigError);

    EmbeddingConfig cfg = tiny_config();
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_embedding(data, cfg), ConfigError);
    cfg = tiny_config();
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(train_embedding(data, cfg), ConfigError);
    cfg = tiny_config();
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(train_embedding(data, cfg), ConfigError);
    cfg = tiny_config();
    cfg.batch_size = data.rows + 1; // fewer samples than one batch
    CHECK_THROWS_AS(train_embedding(data, cfg), DataError);
    CHECK_THROWS_AS(train_embedding(RepMatrix{}, tiny_config()), DataError);
}

TEST_CASE("training is bitwise deterministic in the seed") {
    const RepMatrix data = template_matrix();
    const EmbeddingModel a = train_embedding(data, tiny_config(5, 4));
    const EmbeddingModel b = train_embedding(data, tiny_config(5, 4));
    const EmbeddingModel c = train_embedding(data, tiny_config(6, 4));

    REQUIRE(a.params.size() == b.params.size());
    for (std::size_t i = 0; i < a.params.size(); ++i) {
        CHECK(a.params[i].weights == b.params[i].weights);
        CHECK(a.params[i].bias == b.params[i].bias);
    }
    CHECK(a.head.weights == b.head.weights);
    CHECK(a.loss_history == b.loss_history);
    CHECK(a.params[0].weights != c.params[0].weights);
}

TEST_CASE("loss falls and the head separates the templates") {
    const RepMatrix data = template_matrix();
    const EmbeddingModel model = train_embedding(data, tiny_config(5, 80));
    CHECK(model.trained);
    REQUIRE(model.loss_history.size() == 80);
    CHECK(model.loss_history.back() < model.loss_history.front());
    CHECK(model.loss_history.back() < 0.2);

    const std::vector<int> predicted = classify(model, data);
    REQUIRE(predicted.size() == data.rows);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.rows; ++i)
        if (predicted[i] == data.labels[i]) ++correct;
    CHECK(correct == data.rows);
}

TEST_CASE("embed emits one feature row per input row") {
    const RepMatrix data = template_matrix();
    const EmbeddingModel model = train_embedding(data, tiny_config(5, 4));
    CHECK(model.feature_dim() == 8);

    const FeatureMatrix f = embed(model, data);
    CHECK(f.kind == FeatureKind::LearnedDirectional);
    CHECK(f.dim == 8);
    CHECK(f.rows() == data.rows);
    CHECK(f.labels == data.labels);

    RepMatrix wrong_kind = data;
    wrong_kind.kind = RepKind::Timing;
    CHECK_THROWS_AS(embed(model, wrong_kind), DataError);

    RepMatrix wrong_len = template_matrix();
    wrong_len.length = 6;
    wrong_len.values.resize(wrong_len.rows * 6);
    CHECK_THROWS_AS(embed(model, wrong_len), DataError);

    EmbeddingModel untrained;
    CHECK_THROWS_AS(embed(untrained, data), DataError);
    CHECK_THROWS_AS(classify(untrained, data), DataError);
}

TEST_CASE("timing inputs are rescaled by the training peak") {
    const RepMatrix timing = template_matrix(RepKind::Timing);
    double peak = 0.0;
    for (double v : timing.values) peak = std::max(peak, std::abs(v));
    REQUIRE(peak > 0.0);

    const EmbeddingModel model = train_embedding(timing, tiny_config(5, 4));
    CHECK(model.input_kind == RepKind::Timing);
    CHECK(model.input_scale == 1.0 / peak);
    CHECK(embed(model, timing).kind == FeatureKind::LearnedTiming);

    const EmbeddingModel directional = train_embedding(template_matrix(), tiny_config(5, 4));
    CHECK(directional.input_scale == 1.0);
}

TEST_CASE("parameter access round-trips and moves the loss") {
    const RepMatrix data = template_matrix();
    EmbeddingModel model = train_embedding(data, tiny_config(5, 4));
    const std::size_t count = parameter_count(model);
    CHECK(count > 0);

    const double before = loss_on_batch(model, data);
    const double kept = get_parameter(model, 3);
    set_parameter(model, 3, kept + 0.5);
    CHECK(get_parameter(model, 3) == kept + 0.5);
    CHECK(loss_on_batch(model, data) != before);
    set_parameter(model, 3, kept);
    CHECK(loss_on_batch(model, data) == before);

    CHECK_THROWS_AS((void)get_parameter(model, count), ConfigError);
    CHECK_THROWS_AS(set_parameter(model, count, 0.0), ConfigError);

    const std::vector<double> grads = parameter_gradients(model, data);
    CHECK(grads.size() == count);
}

TEST_CASE("analytic gradients match finite differences") {
    RepMatrix data = template_matrix(RepKind::Directional, 3); // 9 rows
    EmbeddingConfig cfg = tiny_config(5, 2);
    cfg.batch_size = 8;
    const EmbeddingModel model = train_embedding(data, cfg);
    RepMatrix batch = data;
    batch.rows = 6;
    batch.values.resize(6 * batch.length);
    batch.labels.resize(6);
    CHECK(gradient_check(model, batch, 40, 1) <= 1e-4);
}

TEST_CASE("models round-trip through disk") {
    const auto dir = std::filesystem::temp_directory_path() / "wfse_test_model";
    std::filesystem::create_directories(dir);
    const auto path = dir / "model.bin";

    const RepMatrix data = template_matrix();
    const EmbeddingModel model = train_embedding(data, tiny_config(5, 6));
    save_model(path, model);

    const EmbeddingModel loaded = load_model(path);
    CHECK(loaded.trained);
    CHECK(loaded.input_kind == model.input_kind);
    CHECK(loaded.input_length == model.input_length);
    CHECK(loaded.num_classes == model.num_classes);
    CHECK(loaded.input_scale == model.input_scale);
    CHECK(loaded.loss_history == model.loss_history);
    CHECK(loaded.feature_dim() == model.feature_dim());

    // Tensors are stored as float32, so saving the loaded model again must
    // reproduce the file byte for byte.
    const auto path2 = dir / "model2.bin";
    save_model(path2, loaded);
    CHECK(file_bytes(path) == file_bytes(path2));

    // Features agree to float32 precision.
    const FeatureMatrix a = embed(model, data);
    const FeatureMatrix b = embed(loaded, data);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i)
        CHECK(b.values[i] == doctest::Approx(a.values[i]).epsilon(1e-5));

    // Tampered header.
    std::ofstream bad(dir / "bad.bin", std::ios::binary);
    bad << "NOT-A-MODEL\n{}\n";
    bad.close();
    CHECK_THROWS_AS(load_model(dir / "bad.bin"), DataError);
    CHECK_THROWS_AS(load_model(dir / "missing.bin"), DataError);

    std::filesystem::remove_all(dir);
}

} // TEST_SUITE
