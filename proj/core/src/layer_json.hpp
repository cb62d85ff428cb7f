#pragma once

#include <nlohmann/json.hpp>

#include "wfse/embedding.hpp"
#include "wfse/errors.hpp"

namespace wfse {

inline nlohmann::ordered_json layer_to_json(const LayerSpec& layer) {
    nlohmann::ordered_json j;
    std::visit(
        [&](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, ConvLayerSpec>) {
                j["type"] = "conv";
                j["channels"] = l.channels;
                j["kernel"] = l.kernel;
                j["stride"] = l.stride;
            } else if constexpr (std::is_same_v<T, ReluLayerSpec>) {
                j["type"] = "relu";
            } else if constexpr (std::is_same_v<T, GlobalAvgPoolLayerSpec>) {
                j["type"] = "gap";
            } else if constexpr (std::is_same_v<T, FlattenLayerSpec>) {
                j["type"] = "flatten";
            } else {
                j["type"] = "dense";
                j["units"] = l.units;
            }
        },
        layer);
    return j;
}

inline LayerSpec layer_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "conv")
        return ConvLayerSpec{j.at("channels").get<std::size_t>(),
                             j.at("kernel").get<std::size_t>(),
                             j.at("stride").get<std::size_t>()};
    if (type == "relu") return ReluLayerSpec{};
    if (type == "gap") return GlobalAvgPoolLayerSpec{};
    if (type == "flatten") return FlattenLayerSpec{};
    if (type == "dense") return DenseLayerSpec{j.at("units").get<std::size_t>()};
    throw ConfigError("unknown layer type '" + type + "'");
}

inline nlohmann::ordered_json layers_to_json(const std::vector<LayerSpec>& layers) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const LayerSpec& l : layers) arr.push_back(layer_to_json(l));
    return arr;
}

inline std::vector<LayerSpec> layers_from_json(const nlohmann::json& arr) {
    if (!arr.is_array()) throw ConfigError("layer list must be a JSON array");
    std::vector<LayerSpec> layers;
    for (const auto& j : arr) layers.push_back(layer_from_json(j));
    return layers;
}

} // namespace wfse
