#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>

#include "abrlab/lstm.hpp"

namespace abrlab {

// Checkpoints are versioned JSON: {"format": 1, "kind": ..., tensors as
// row-major flat arrays with explicit shapes}. The same container carries
// predictor and policy models.

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> data;
    data.reserve(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    j["data"] = std::move(data);
    return j;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw std::runtime_error("checkpoint: tensor size mismatch");
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++];
    return m;
}

inline nlohmann::json lstm_weights_to_json(const LstmWeights& w) {
    nlohmann::json j;
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        const std::string p = "layer" + std::to_string(i) + ".";
        j[p + "wx"] = matrix_to_json(w.layers[i].wx);
        j[p + "wh"] = matrix_to_json(w.layers[i].wh);
        j[p + "b"] = matrix_to_json(w.layers[i].b);
    }
    j["head.w"] = matrix_to_json(w.head_w);
    j["head.b"] = w.head_b;
    return j;
}

inline LstmWeights lstm_weights_from_json(const nlohmann::json& j, const std::vector<int>& sizes,
                                          int input_dim) {
    LstmWeights w;
    int in = input_dim;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const std::string p = "layer" + std::to_string(i) + ".";
        LstmLayerWeights l;
        l.wx = matrix_from_json(j.at(p + "wx"));
        l.wh = matrix_from_json(j.at(p + "wh"));
        l.b = matrix_from_json(j.at(p + "b"));
        if (l.wx.rows() != 4 * sizes[i] || l.wx.cols() != in || l.wh.cols() != sizes[i])
            throw std::runtime_error("checkpoint: layer " + std::to_string(i) + " shape mismatch");
        w.layers.push_back(std::move(l));
        in = sizes[i];
    }
    w.head_w = matrix_from_json(j.at("head.w"));
    w.head_b = j.at("head.b").get<double>();
    return w;
}

}  // namespace detail

inline void save_lstm(const LstmModel& m, const std::string& path) {
    nlohmann::json j;
    j["format"] = 1;
    j["kind"] = "lstm";
    j["layer_sizes"] = m.layer_sizes;
    j["input_dim"] = m.input_dim;
    j["dropout_rate"] = m.dropout_rate;
    j["h"] = m.h;
    j["w"] = m.w;
    j["weights"] = detail::lstm_weights_to_json(m.weights);
    if (m.has_source) j["source_weights"] = detail::lstm_weights_to_json(m.source_weights);
    if (!m.norm_stats.empty()) {
        j["norm_stats"]["min"] = m.norm_stats.min;
        j["norm_stats"]["max"] = m.norm_stats.max;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump(2) << "\n";
}

inline LstmModel load_lstm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("kind", "") != "lstm")
        throw std::runtime_error(path + ": not an lstm checkpoint");
    if (j.value("format", 0) != 1)
        throw std::runtime_error(path + ": unsupported checkpoint format");
    LstmModel m;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    m.input_dim = j.at("input_dim").get<int>();
    m.dropout_rate = j.at("dropout_rate").get<double>();
    m.h = j.value("h", 0);
    m.w = j.value("w", 0);
    m.weights = detail::lstm_weights_from_json(j.at("weights"), m.layer_sizes, m.input_dim);
    if (j.contains("source_weights")) {
        m.source_weights =
            detail::lstm_weights_from_json(j.at("source_weights"), m.layer_sizes, m.input_dim);
        m.has_source = true;
    }
    if (j.contains("norm_stats")) {
        m.norm_stats.min = j.at("norm_stats").at("min").get<std::vector<double>>();
        m.norm_stats.max = j.at("norm_stats").at("max").get<std::vector<double>>();
    }
    return m;
}

}  // namespace abrlab
