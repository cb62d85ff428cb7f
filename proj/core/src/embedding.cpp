#include "wfse/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "layer_json.hpp"
#include "wfse/errors.hpp"
#include "wfse/parallel.hpp"
#include "wfse/rng.hpp"

namespace wfse {

std::vector<LayerSpec> default_embedding_layers() {
    return {ConvLayerSpec{32, 8, 4}, ReluLayerSpec{}, ConvLayerSpec{64, 8, 4}, ReluLayerSpec{},
            GlobalAvgPoolLayerSpec{}, DenseLayerSpec{128}, ReluLayerSpec{}};
}

namespace {

struct Shape {
    std::size_t channels = 1;
    std::size_t length = 1;
    bool flat = false;

    std::size_t size() const { return channels * length; }
};

// Shapes before and after every layer; [0] is the raw input, one channel of
// input_length samples. Throws ConfigError on any impossible stacking.
std::vector<Shape> infer_shapes(const std::vector<LayerSpec>& layers, std::size_t input_length) {
    if (layers.empty()) throw ConfigError("embedding: empty layer list");
    if (input_length == 0) throw ConfigError("embedding: zero input length");
    std::vector<Shape> shapes;
    shapes.push_back({1, input_length, false});
    for (const LayerSpec& layer : layers) {
        const Shape& in = shapes.back();
        std::visit(
            [&](const auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, ConvLayerSpec>) {
                    if (l.channels < 1 || l.kernel < 1 || l.stride < 1)
                        throw ConfigError("conv: channels, kernel and stride must be >= 1");
                    if (in.flat) throw ConfigError("conv: needs channel-shaped input");
                    if (in.length < l.kernel)
                        throw ConfigError("conv: input length " + std::to_string(in.length) +
                                          " shorter than kernel " + std::to_string(l.kernel));
                    shapes.push_back(
                        {l.channels, (in.length - l.kernel) / l.stride + 1, false});
                } else if constexpr (std::is_same_v<T, ReluLayerSpec>) {
                    shapes.push_back(in);
                } else if constexpr (std::is_same_v<T, GlobalAvgPoolLayerSpec>) {
                    if (in.flat) throw ConfigError("global average pool: needs channel-shaped input");
                    shapes.push_back({in.channels, 1, true});
                } else if constexpr (std::is_same_v<T, FlattenLayerSpec>) {
                    shapes.push_back({in.size(), 1, true});
                } else {
                    if (l.units < 1) throw ConfigError("dense: units must be >= 1");
                    if (!in.flat)
                        throw ConfigError("dense: needs a flat input; flatten or pool first");
                    shapes.push_back({l.units, 1, true});
                }
            },
            layer);
    }
    if (!shapes.back().flat)
        throw ConfigError("embedding: architecture must end in a flat feature layer");
    return shapes;
}

struct TensorDims {
    std::size_t weights = 0;
    std::size_t bias = 0;
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
};

TensorDims layer_dims(const LayerSpec& layer, const Shape& in) {
    TensorDims d;
    if (const auto* c = std::get_if<ConvLayerSpec>(&layer)) {
        d.weights = c->channels * in.channels * c->kernel;
        d.bias = c->channels;
        d.fan_in = in.channels * c->kernel;
        d.fan_out = c->channels * c->kernel;
    } else if (const auto* dn = std::get_if<DenseLayerSpec>(&layer)) {
        d.weights = dn->units * in.size();
        d.bias = dn->units;
        d.fan_in = in.size();
        d.fan_out = dn->units;
    }
    return d;
}

void glorot_fill(std::vector<double>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w) v = rng.uniform(-limit, limit);
}

void conv_forward(const ConvLayerSpec& l, const Shape& in, const Shape& out,
                  const LayerTensors& t, const double* x, double* y) {
    for (std::size_t o = 0; o < out.channels; ++o)
        for (std::size_t pos = 0; pos < out.length; ++pos) {
            double acc = t.bias[o];
            const std::size_t base = pos * l.stride;
            for (std::size_t i = 0; i < in.channels; ++i) {
                const double* xrow = x + i * in.length + base;
                const double* wrow = t.weights.data() + (o * in.channels + i) * l.kernel;
                for (std::size_t j = 0; j < l.kernel; ++j) acc += wrow[j] * xrow[j];
            }
            y[o * out.length + pos] = acc;
        }
}

void conv_backward(const ConvLayerSpec& l, const Shape& in, const Shape& out,
                   const LayerTensors& t, const double* x, const double* dy, double* dx,
                   LayerTensors& grad) {
    std::fill(dx, dx + in.size(), 0.0);
    for (std::size_t o = 0; o < out.channels; ++o)
        for (std::size_t pos = 0; pos < out.length; ++pos) {
            const double g = dy[o * out.length + pos];
            grad.bias[o] += g;
            const std::size_t base = pos * l.stride;
            for (std::size_t i = 0; i < in.channels; ++i) {
                const double* xrow = x + i * in.length + base;
                double* dxrow = dx + i * in.length + base;
                const std::size_t w0 = (o * in.channels + i) * l.kernel;
                for (std::size_t j = 0; j < l.kernel; ++j) {
                    grad.weights[w0 + j] += g * xrow[j];
                    dxrow[j] += g * t.weights[w0 + j];
                }
            }
        }
}

void dense_forward(const Shape& in, const Shape& out, const LayerTensors& t, const double* x,
                   double* y) {
    for (std::size_t o = 0; o < out.size(); ++o) {
        double acc = t.bias[o];
        const double* wrow = t.weights.data() + o * in.size();
        for (std::size_t i = 0; i < in.size(); ++i) acc += wrow[i] * x[i];
        y[o] = acc;
    }
}

void dense_backward(const Shape& in, const Shape& out, const LayerTensors& t, const double* x,
                    const double* dy, double* dx, LayerTensors& grad) {
    std::fill(dx, dx + in.size(), 0.0);
    for (std::size_t o = 0; o < out.size(); ++o) {
        const double g = dy[o];
        grad.bias[o] += g;
        const double* wrow = t.weights.data() + o * in.size();
        double* grow = grad.weights.data() + o * in.size();
        for (std::size_t i = 0; i < in.size(); ++i) {
            grow[i] += g * x[i];
            dx[i] += g * wrow[i];
        }
    }
}

// Activation buffers plus the full forward/backward pass for one sample.
// One Engine per thread; parameters are read-only during forward passes.
struct Engine {
    const std::vector<LayerSpec>& layers;
    const std::vector<Shape>& shapes;
    std::size_t num_classes;
    Shape head_out;
    std::vector<std::vector<double>> act;
    std::vector<std::vector<double>> dact;
    std::vector<double> logits;
    std::vector<double> probs;
    std::vector<double> dlogits;

    Engine(const std::vector<LayerSpec>& layers_, const std::vector<Shape>& shapes_,
           std::size_t num_classes_)
        : layers(layers_), shapes(shapes_), num_classes(num_classes_),
          head_out{num_classes_, 1, true} {
        act.resize(shapes.size());
        dact.resize(shapes.size());
        for (std::size_t s = 0; s < shapes.size(); ++s) {
            act[s].resize(shapes[s].size());
            dact[s].resize(shapes[s].size());
        }
        logits.resize(num_classes);
        probs.resize(num_classes);
        dlogits.resize(num_classes);
    }

    void forward_features(const std::vector<LayerTensors>& params, const double* x,
                          double scale) {
        for (std::size_t i = 0; i < shapes[0].size(); ++i) act[0][i] = x[i] * scale;
        for (std::size_t s = 0; s < layers.size(); ++s) {
            const Shape& in = shapes[s];
            const Shape& out = shapes[s + 1];
            std::visit(
                [&](const auto& l) {
                    using T = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<T, ConvLayerSpec>) {
                        conv_forward(l, in, out, params[s], act[s].data(), act[s + 1].data());
                    } else if constexpr (std::is_same_v<T, ReluLayerSpec>) {
                        for (std::size_t i = 0; i < out.size(); ++i)
                            act[s + 1][i] = std::max(0.0, act[s][i]);
                    } else if constexpr (std::is_same_v<T, GlobalAvgPoolLayerSpec>) {
                        for (std::size_t c = 0; c < in.channels; ++c) {
                            double acc = 0.0;
                            for (std::size_t p = 0; p < in.length; ++p)
                                acc += act[s][c * in.length + p];
                            act[s + 1][c] = acc / static_cast<double>(in.length);
                        }
                    } else if constexpr (std::is_same_v<T, FlattenLayerSpec>) {
                        act[s + 1] = act[s];
                    } else {
                        dense_forward(in, out, params[s], act[s].data(), act[s + 1].data());
                    }
                },
                layers[s]);
        }
    }

    // Returns the sample's cross-entropy in nats and fills dlogits with
    // softmax(logits) - onehot(label).
    double loss_head(const LayerTensors& head, int label) {
        dense_forward(shapes.back(), head_out, head, act.back().data(), logits.data());
        const double m = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            probs[c] = std::exp(logits[c] - m);
            z += probs[c];
        }
        for (std::size_t c = 0; c < num_classes; ++c) probs[c] /= z;
        const double loss = std::log(z) + m - logits[static_cast<std::size_t>(label)];
        for (std::size_t c = 0; c < num_classes; ++c)
            dlogits[c] = probs[c] - (static_cast<std::size_t>(label) == c ? 1.0 : 0.0);
        return loss;
    }

    void backward(const std::vector<LayerTensors>& params, const LayerTensors& head,
                  std::vector<LayerTensors>& grads, LayerTensors& head_grad) {
        dense_backward(shapes.back(), head_out, head, act.back().data(), dlogits.data(),
                       dact.back().data(), head_grad);
        for (std::size_t s = layers.size(); s-- > 0;) {
            const Shape& in = shapes[s];
            const Shape& out = shapes[s + 1];
            std::visit(
                [&](const auto& l) {
                    using T = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<T, ConvLayerSpec>) {
                        conv_backward(l, in, out, params[s], act[s].data(), dact[s + 1].data(),
                                      dact[s].data(), grads[s]);
                    } else if constexpr (std::is_same_v<T, ReluLayerSpec>) {
                        for (std::size_t i = 0; i < in.size(); ++i)
                            dact[s][i] = act[s][i] > 0.0 ? dact[s + 1][i] : 0.0;
                    } else if constexpr (std::is_same_v<T, GlobalAvgPoolLayerSpec>) {
                        for (std::size_t c = 0; c < in.channels; ++c) {
                            const double g =
                                dact[s + 1][c] / static_cast<double>(in.length);
                            for (std::size_t p = 0; p < in.length; ++p)
                                dact[s][c * in.length + p] = g;
                        }
                    } else if constexpr (std::is_same_v<T, FlattenLayerSpec>) {
                        dact[s] = dact[s + 1];
                    } else {
                        dense_backward(in, out, params[s], act[s].data(), dact[s + 1].data(),
                                       dact[s].data(), grads[s]);
                    }
                },
                layers[s]);
        }
    }
};

std::vector<LayerTensors> make_tensors(const std::vector<LayerSpec>& layers,
                                       const std::vector<Shape>& shapes) {
    std::vector<LayerTensors> tensors(layers.size());
    for (std::size_t s = 0; s < layers.size(); ++s) {
        const TensorDims d = layer_dims(layers[s], shapes[s]);
        tensors[s].weights.assign(d.weights, 0.0);
        tensors[s].bias.assign(d.bias, 0.0);
    }
    return tensors;
}

void check_input(const EmbeddingModel& model, const RepMatrix& data, const char* who) {
    if (data.kind != model.input_kind)
        throw DataError(std::string(who) + ": representation kind differs from training");
    if (data.length != model.input_length)
        throw DataError(std::string(who) + ": representation length differs from training");
}

double timing_scale(const RepMatrix& m) {
    double peak = 0.0;
    for (double v : m.values) peak = std::max(peak, std::abs(v));
    return peak > 0.0 ? 1.0 / peak : 1.0;
}

template <typename Fn>
void for_each_tensor(const EmbeddingModel& model, Fn&& fn) {
    for (const LayerTensors& t : model.params) {
        if (!t.weights.empty()) fn(t.weights);
        if (!t.bias.empty()) fn(t.bias);
    }
    fn(model.head.weights);
    fn(model.head.bias);
}

template <typename Fn>
void for_each_tensor(EmbeddingModel& model, Fn&& fn) {
    for (LayerTensors& t : model.params) {
        if (!t.weights.empty()) fn(t.weights);
        if (!t.bias.empty()) fn(t.bias);
    }
    fn(model.head.weights);
    fn(model.head.bias);
}

} // namespace

std::size_t EmbeddingModel::feature_dim() const {
    return head.weights.empty() ? 0 : head.weights.size() / num_classes;
}

EmbeddingModel train_embedding(const RepMatrix& train, const EmbeddingConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("embedding: epochs must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("embedding: learning rate must be > 0");
    if (cfg.batch_size < 1) throw ConfigError("embedding: batch size must be >= 1");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
        throw ConfigError("embedding: momentum must be in [0, 1)");

    const std::size_t n = train.rows;
    if (n == 0) throw DataError("embedding: empty training split");
    if (n < cfg.batch_size) throw DataError("embedding: fewer samples than one batch");

    int max_label = 0;
    std::set<int> distinct;
    for (int l : train.labels) {
        if (l < 0) throw DataError("embedding: negative label");
        max_label = std::max(max_label, l);
        distinct.insert(l);
    }
    if (distinct.size() < 2) throw DataError("embedding: need at least 2 classes");
    const auto num_classes = static_cast<std::size_t>(max_label) + 1;

    const std::vector<Shape> shapes = infer_shapes(cfg.layers, train.length);
    if (shapes.back().size() < 2) throw ConfigError("embedding: feature dimension must be >= 2");

    EmbeddingModel model;
    model.config = cfg;
    model.input_kind = train.kind;
    model.input_length = train.length;
    model.num_classes = num_classes;
    model.input_scale = train.kind == RepKind::Timing ? timing_scale(train) : 1.0;
    model.params = make_tensors(cfg.layers, shapes);
    model.head.weights.assign(num_classes * shapes.back().size(), 0.0);
    model.head.bias.assign(num_classes, 0.0);

    Rng init_rng(derive_seed(cfg.seed, hash_tag("init"), 0));
    for (std::size_t s = 0; s < cfg.layers.size(); ++s) {
        const TensorDims d = layer_dims(cfg.layers[s], shapes[s]);
        if (d.weights > 0) glorot_fill(model.params[s].weights, d.fan_in, d.fan_out, init_rng);
    }
    glorot_fill(model.head.weights, shapes.back().size(), num_classes, init_rng);

    std::vector<LayerTensors> grads = make_tensors(cfg.layers, shapes);
    LayerTensors head_grad{std::vector<double>(model.head.weights.size(), 0.0),
                           std::vector<double>(model.head.bias.size(), 0.0)};
    std::vector<LayerTensors> velocity = make_tensors(cfg.layers, shapes);
    LayerTensors head_velocity{std::vector<double>(model.head.weights.size(), 0.0),
                               std::vector<double>(model.head.bias.size(), 0.0)};

    Engine engine(cfg.layers, shapes, num_classes);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    const auto update = [&](std::vector<double>& w, std::vector<double>& v,
                            const std::vector<double>& g, double inv_batch) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = cfg.momentum * v[i] - cfg.learning_rate * g[i] * inv_batch;
            w[i] += v[i];
        }
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, hash_tag("shuffle"), epoch));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            const auto batch_n = static_cast<double>(stop - start);

            for (LayerTensors& g : grads) {
                std::fill(g.weights.begin(), g.weights.end(), 0.0);
                std::fill(g.bias.begin(), g.bias.end(), 0.0);
            }
            std::fill(head_grad.weights.begin(), head_grad.weights.end(), 0.0);
            std::fill(head_grad.bias.begin(), head_grad.bias.end(), 0.0);

            double batch_loss = 0.0;
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t row = order[b];
                engine.forward_features(model.params, train.row(row), model.input_scale);
                batch_loss += engine.loss_head(model.head, train.labels[row]);
                engine.backward(model.params, model.head, grads, head_grad);
            }
            batch_loss /= batch_n;
            if (!std::isfinite(batch_loss))
                throw NumericalError("embedding: non-finite loss at epoch " +
                                     std::to_string(epoch) + ", batch " +
                                     std::to_string(batch_index));
            epoch_loss += batch_loss * batch_n;

            const double inv_batch = 1.0 / batch_n;
            for (std::size_t s = 0; s < model.params.size(); ++s) {
                if (model.params[s].weights.empty()) continue;
                update(model.params[s].weights, velocity[s].weights, grads[s].weights, inv_batch);
                update(model.params[s].bias, velocity[s].bias, grads[s].bias, inv_batch);
            }
            update(model.head.weights, head_velocity.weights, head_grad.weights, inv_batch);
            update(model.head.bias, head_velocity.bias, head_grad.bias, inv_batch);
        }
        model.loss_history.push_back(epoch_loss / static_cast<double>(n));
    }

    model.trained = true;
    return model;
}

FeatureMatrix embed(const EmbeddingModel& model, const RepMatrix& data) {
    if (!model.trained) throw DataError("embed: model is not trained");
    check_input(model, data, "embed");
    const std::vector<Shape> shapes = infer_shapes(model.config.layers, model.input_length);

    FeatureMatrix out;
    out.kind = model.input_kind == RepKind::Directional ? FeatureKind::LearnedDirectional
                                                        : FeatureKind::LearnedTiming;
    out.dim = shapes.back().size();
    out.values.resize(data.rows * out.dim);
    out.labels = data.labels;

    parallel_for(data.rows, [&](std::size_t i) {
        Engine engine(model.config.layers, shapes, model.num_classes);
        engine.forward_features(model.params, data.row(i), model.input_scale);
        std::copy(engine.act.back().begin(), engine.act.back().end(),
                  out.values.begin() + static_cast<long>(i * out.dim));
    });
    return out;
}

std::vector<int> classify(const EmbeddingModel& model, const RepMatrix& data) {
    if (!model.trained) throw DataError("classify: model is not trained");
    check_input(model, data, "classify");
    const std::vector<Shape> shapes = infer_shapes(model.config.layers, model.input_length);

    std::vector<int> out(data.rows, 0);
    parallel_for(data.rows, [&](std::size_t i) {
        Engine engine(model.config.layers, shapes, model.num_classes);
        engine.forward_features(model.params, data.row(i), model.input_scale);
        dense_forward(shapes.back(), engine.head_out, model.head, engine.act.back().data(),
                      engine.logits.data());
        std::size_t best = 0;
        for (std::size_t c = 1; c < model.num_classes; ++c)
            if (engine.logits[c] > engine.logits[best]) best = c;
        out[i] = static_cast<int>(best);
    });
    return out;
}

double loss_on_batch(const EmbeddingModel& model, const RepMatrix& batch) {
    check_input(model, batch, "loss_on_batch");
    if (batch.rows == 0) throw DataError("loss_on_batch: empty batch");
    const std::vector<Shape> shapes = infer_shapes(model.config.layers, model.input_length);
    Engine engine(model.config.layers, shapes, model.num_classes);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.rows; ++i) {
        engine.forward_features(model.params, batch.row(i), model.input_scale);
        total += engine.loss_head(model.head, batch.labels[i]);
    }
    return total / static_cast<double>(batch.rows);
}

std::vector<double> parameter_gradients(const EmbeddingModel& model, const RepMatrix& batch) {
    check_input(model, batch, "parameter_gradients");
    if (batch.rows == 0) throw DataError("parameter_gradients: empty batch");
    const std::vector<Shape> shapes = infer_shapes(model.config.layers, model.input_length);
    Engine engine(model.config.layers, shapes, model.num_classes);

    std::vector<LayerTensors> grads = make_tensors(model.config.layers, shapes);
    LayerTensors head_grad{std::vector<double>(model.head.weights.size(), 0.0),
                           std::vector<double>(model.head.bias.size(), 0.0)};
    for (std::size_t i = 0; i < batch.rows; ++i) {
        engine.forward_features(model.params, batch.row(i), model.input_scale);
        engine.loss_head(model.head, batch.labels[i]);
        engine.backward(model.params, model.head, grads, head_grad);
    }

    std::vector<double> flat;
    const double inv = 1.0 / static_cast<double>(batch.rows);
    for (const LayerTensors& g : grads) {
        for (double v : g.weights) flat.push_back(v * inv);
        for (double v : g.bias) flat.push_back(v * inv);
    }
    for (double v : head_grad.weights) flat.push_back(v * inv);
    for (double v : head_grad.bias) flat.push_back(v * inv);
    return flat;
}

std::size_t parameter_count(const EmbeddingModel& model) {
    std::size_t count = 0;
    for_each_tensor(model, [&](const std::vector<double>& t) { count += t.size(); });
    return count;
}

double get_parameter(const EmbeddingModel& model, std::size_t flat_index) {
    double value = 0.0;
    std::size_t offset = 0;
    for_each_tensor(model, [&](const std::vector<double>& t) {
        if (flat_index >= offset && flat_index < offset + t.size())
            value = t[flat_index - offset];
        offset += t.size();
    });
    if (flat_index >= offset) throw ConfigError("get_parameter: index out of range");
    return value;
}

void set_parameter(EmbeddingModel& model, std::size_t flat_index, double value) {
    std::size_t offset = 0;
    bool done = false;
    for_each_tensor(model, [&](std::vector<double>& t) {
        if (flat_index >= offset && flat_index < offset + t.size()) {
            t[flat_index - offset] = value;
            done = true;
        }
        offset += t.size();
    });
    if (!done) throw ConfigError("set_parameter: index out of range");
}

double gradient_check(const EmbeddingModel& model, const RepMatrix& batch,
                      std::size_t num_samples, std::uint64_t seed) {
    const std::vector<double> analytic = parameter_gradients(model, batch);
    const std::size_t total = analytic.size();

    std::vector<std::size_t> indices(total);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (total > num_samples) {
        Rng rng(seed);
        rng.shuffle(indices);
        indices.resize(num_samples);
    }

    EmbeddingModel probe = model;
    const double h = 1e-4;
    double worst = 0.0;
    for (std::size_t idx : indices) {
        const double w0 = get_parameter(probe, idx);
        set_parameter(probe, idx, w0 + h);
        const double up = loss_on_batch(probe, batch);
        set_parameter(probe, idx, w0 - h);
        const double down = loss_on_batch(probe, batch);
        set_parameter(probe, idx, w0);
        const double fd = (up - down) / (2.0 * h);
        const double rel =
            std::abs(analytic[idx] - fd) / std::max({std::abs(analytic[idx]), std::abs(fd), 1e-8});
        worst = std::max(worst, rel);
    }
    return worst;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "model files store little-endian float32 tensors");

void write_tensor(std::ofstream& out, const std::vector<double>& t) {
    if (t.empty()) return;
    std::vector<float> f(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) f[i] = static_cast<float>(t[i]);
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(float)));
}

void read_tensor(std::ifstream& in, std::vector<double>& t) {
    if (t.empty()) return;
    std::vector<float> f(t.size());
    in.read(reinterpret_cast<char*>(f.data()),
            static_cast<std::streamsize>(f.size() * sizeof(float)));
    if (!in) throw DataError("model file truncated inside a tensor");
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(f[i]);
}

} // namespace

void save_model(const std::filesystem::path& path, const EmbeddingModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file " + path.string());

    nlohmann::ordered_json meta;
    meta["layers"] = layers_to_json(model.config.layers);
    meta["learning_rate"] = model.config.learning_rate;
    meta["batch_size"] = model.config.batch_size;
    meta["epochs"] = model.config.epochs;
    meta["momentum"] = model.config.momentum;
    meta["seed"] = model.config.seed;
    meta["input_kind"] = rep_kind_name(model.input_kind);
    meta["input_length"] = model.input_length;
    meta["num_classes"] = model.num_classes;
    meta["input_scale"] = model.input_scale;
    meta["trained"] = model.trained;
    meta["loss_history"] = model.loss_history;

    out << kModelFormatTag << '\n' << meta.dump() << '\n';
    for_each_tensor(model, [&](const std::vector<double>& t) { write_tensor(out, t); });
    if (!out) throw DataError("short write to model file " + path.string());
}

EmbeddingModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file " + path.string());

    std::string tag;
    std::getline(in, tag);
    if (tag != kModelFormatTag)
        throw DataError("model file " + path.string() + ": unexpected header '" + tag + "'");

    std::string meta_line;
    std::getline(in, meta_line);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_line);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file " + path.string() + ": bad metadata: " + e.what());
    }

    EmbeddingModel model;
    model.config.layers = layers_from_json(meta.at("layers"));
    model.config.learning_rate = meta.at("learning_rate").get<double>();
    model.config.batch_size = meta.at("batch_size").get<std::size_t>();
    model.config.epochs = meta.at("epochs").get<std::size_t>();
    model.config.momentum = meta.at("momentum").get<double>();
    model.config.seed = meta.at("seed").get<std::uint64_t>();
    const std::string kind = meta.at("input_kind").get<std::string>();
    if (kind == rep_kind_name(RepKind::Directional))
        model.input_kind = RepKind::Directional;
    else if (kind == rep_kind_name(RepKind::Timing))
        model.input_kind = RepKind::Timing;
    else
        throw DataError("model file: unknown input kind '" + kind + "'");
    model.input_length = meta.at("input_length").get<std::size_t>();
    model.num_classes = meta.at("num_classes").get<std::size_t>();
    model.input_scale = meta.at("input_scale").get<double>();
    model.trained = meta.at("trained").get<bool>();
    model.loss_history = meta.at("loss_history").get<std::vector<double>>();
    if (model.num_classes < 2) throw DataError("model file: fewer than 2 classes");

    const std::vector<Shape> shapes = infer_shapes(model.config.layers, model.input_length);
    model.params = make_tensors(model.config.layers, shapes);
    model.head.weights.assign(model.num_classes * shapes.back().size(), 0.0);
    model.head.bias.assign(model.num_classes, 0.0);

    for_each_tensor(model, [&](std::vector<double>& t) { read_tensor(in, t); });
    in.peek();
    if (!in.eof()) throw DataError("model file " + path.string() + ": trailing bytes");
    return model;
}

} // namespace wfse
