#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "deer/net.hpp"

namespace deer {

// Model container written by `train` and consumed by `eval`. JSON, one file
// per model, versioned so the layout can evolve without breaking old runs:
//
//   {
//     "format_version": 1,
//     "model_kind":     "deer" | "mcdp" | "ensemble",
//     "attributes":     ["arousal", ...],     // head order
//     "input_dim":      8,
//     "hidden":         [128, 128],
//     "output_dim":     12,                   // 4N evidential, N point
//     "dropout_rate":   0.3,
//     "members":        [[...], ...],         // flat row-major params,
//                                             // per layer W then b
//     "config":         { ... }               // resolved run config echo
//   }

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    std::string model_kind;
    std::vector<std::string> attributes;
    MlpShape shape;
    double dropout_rate = 0.0;
    std::vector<std::vector<double>> members;
    nlohmann::json config = nlohmann::json::object();

    Mlp mlp(std::size_t member = 0) const {
        return Mlp{shape, dropout_rate, members.at(member)};
    }

    std::vector<Mlp> mlps() const {
        std::vector<Mlp> out;
        out.reserve(members.size());
        for (std::size_t j = 0; j < members.size(); ++j) out.push_back(mlp(j));
        return out;
    }
};

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    nlohmann::json doc;
    doc["format_version"] = kCheckpointVersion;
    doc["model_kind"] = ckpt.model_kind;
    doc["attributes"] = ckpt.attributes;
    doc["input_dim"] = ckpt.shape.input;
    doc["hidden"] = ckpt.shape.hidden;
    doc["output_dim"] = ckpt.shape.output;
    doc["dropout_rate"] = ckpt.dropout_rate;
    doc["members"] = ckpt.members;
    doc["config"] = ckpt.config;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        const int version = doc.at("format_version").get<int>();
        if (version != kCheckpointVersion)
            throw std::runtime_error("unsupported checkpoint format_version " +
                                     std::to_string(version));
        Checkpoint ckpt;
        ckpt.model_kind = doc.at("model_kind").get<std::string>();
        if (ckpt.model_kind != "deer" && ckpt.model_kind != "mcdp" &&
            ckpt.model_kind != "ensemble")
            throw std::runtime_error("unknown model_kind '" + ckpt.model_kind + "'");
        ckpt.attributes = doc.at("attributes").get<std::vector<std::string>>();
        ckpt.shape.input = doc.at("input_dim").get<std::size_t>();
        ckpt.shape.hidden = doc.at("hidden").get<std::vector<std::size_t>>();
        ckpt.shape.output = doc.at("output_dim").get<std::size_t>();
        ckpt.dropout_rate = doc.at("dropout_rate").get<double>();
        ckpt.members = doc.at("members").get<std::vector<std::vector<double>>>();
        if (doc.contains("config")) ckpt.config = doc.at("config");
        if (ckpt.members.empty())
            throw std::runtime_error("checkpoint holds no parameter sets");
        for (const auto& m : ckpt.members)
            if (m.size() != ckpt.shape.param_count())
                throw std::runtime_error("parameter count does not match layer shapes");
        const std::size_t n = ckpt.attributes.size();
        const std::size_t expected =
            ckpt.model_kind == "deer" ? 4 * n : n;
        if (ckpt.shape.output != expected)
            throw std::runtime_error("output width inconsistent with model_kind");
        return ckpt;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("checkpoint '" + path + "' is malformed: " + e.what());
    }
}

}  // namespace deer
