#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "wfse/feature_matrix.hpp"
#include "wfse/trace.hpp"

namespace wfse {

// Small 1-D network trained with softmax cross-entropy; the activations of
// its last configured layer are the learned trace representation. The C-way
// classifier head is appended at training time and never part of the layer
// list below.

struct ConvLayerSpec {
    std::size_t channels = 32;
    std::size_t kernel = 8;
    std::size_t stride = 4;
};
struct ReluLayerSpec {};
struct GlobalAvgPoolLayerSpec {};
struct FlattenLayerSpec {};
struct DenseLayerSpec {
    std::size_t units = 128;
};

using LayerSpec = std::variant<ConvLayerSpec, ReluLayerSpec, GlobalAvgPoolLayerSpec,
                               FlattenLayerSpec, DenseLayerSpec>;

// conv(32,k8,s4) relu conv(64,k8,s4) relu gap dense(128) relu
std::vector<LayerSpec> default_embedding_layers();

struct EmbeddingConfig {
    std::vector<LayerSpec> layers = default_embedding_layers();
    double learning_rate = 0.002;
    std::size_t batch_size = 128;
    std::size_t epochs = 40;
    double momentum = 0.9;
    std::uint64_t seed = 0;
};

struct LayerTensors {
    std::vector<double> weights;
    std::vector<double> bias;
};

struct EmbeddingModel {
    EmbeddingConfig config; // layer list excludes the classifier head
    RepKind input_kind = RepKind::Directional;
    std::size_t input_length = 0;
    std::size_t num_classes = 0;
    double input_scale = 1.0; // timing inputs scale by 1/max|value| of the training split
    bool trained = false;
    std::vector<LayerTensors> params; // one entry per config layer; empty tensors when parameterless
    LayerTensors head;                // dense(num_classes) classifier
    std::vector<double> loss_history; // per-epoch mean cross-entropy, nats

    std::size_t feature_dim() const;
};

// Exactly cfg.epochs epochs of mini-batch momentum SGD over a per-epoch
// seeded shuffle; the trailing partial batch is trained on. Training is one
// deterministic stream: equal seeds and data give bit-identical tensors.
// Weights start Glorot-uniform from the seed, biases zero. A non-finite
// batch loss aborts with NumericalError naming (epoch, batch).
EmbeddingModel train_embedding(const RepMatrix& train, const EmbeddingConfig& cfg);

// Rows of last-layer activations, labels carried over from the input. Never
// reads labels to compute features. Parallelizes over rows. Throws DataError
// when the representation kind or length differs from training.
FeatureMatrix embed(const EmbeddingModel& model, const RepMatrix& data);

// Classifier-head argmax per row; ties go to the lowest class index. The
// head is a training artifact, but its held-out error is a useful ceiling
// check for the estimators that consume the embedding.
std::vector<int> classify(const EmbeddingModel& model, const RepMatrix& data);

// Mean cross-entropy of the current parameters on a batch, and its analytic
// parameter gradient, flattened in parameter order (per-layer weights then
// bias, classifier head last). Exposed so gradient verification can be run
// against perturbed copies.
double loss_on_batch(const EmbeddingModel& model, const RepMatrix& batch);
std::vector<double> parameter_gradients(const EmbeddingModel& model, const RepMatrix& batch);
std::size_t parameter_count(const EmbeddingModel& model);
double get_parameter(const EmbeddingModel& model, std::size_t flat_index);
void set_parameter(EmbeddingModel& model, std::size_t flat_index, double value);

// Max relative gap between analytic and central finite-difference gradients
// (step 1e-4) over at least num_samples randomly chosen parameters;
// relative gap = |a - f| / max(|a|, |f|, 1e-8). Keep the batch small.
double gradient_check(const EmbeddingModel& model, const RepMatrix& batch,
                      std::size_t num_samples = 200, std::uint64_t seed = 1);

// Versioned container: header line, one-line JSON metadata (architecture,
// input kind and length, scale, hyperparameters, loss history), then raw
// little-endian float32 tensors in parameter order.
inline constexpr char kModelFormatTag[] = "WFSE-EMB-1";

void save_model(const std::filesystem::path& path, const EmbeddingModel& model);
EmbeddingModel load_model(const std::filesystem::path& path);

} // namespace wfse
