#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "abrlab/checkpoint.hpp"
#include "abrlab/rng.hpp"

namespace abrlab {

/// Feed-forward trunk used by both the actor and the critic: each vector
/// input goes through a 1-D convolution (128 filters of size 4, stride 1 by
/// default), each scalar input through a dense encoder of the same width;
/// the concatenated features feed one hidden layer. The actor's output layer
/// is a softmax over actions, the critic's a single linear neuron.
struct PolicyNetSpec {
    std::vector<int> input_lengths;  // per input; 1 = scalar (dense encoder)
    int conv_filters = 128;
    int conv_kernel = 4;
    int hidden = 128;
    int outputs = 1;  // actions for the actor, 1 for the critic

    int kernel_for(int len) const { return std::min(conv_kernel, len); }
    int encoder_out(int len) const {
        return len == 1 ? conv_filters : conv_filters * (len - kernel_for(len) + 1);
    }
    int concat_dim() const {
        int d = 0;
        for (int len : input_lengths) d += encoder_out(len);
        return d;
    }
};

struct PolicyNet {
    PolicyNetSpec spec;
    std::vector<Eigen::MatrixXd> enc_w;  // filters x kernel (or x 1 for scalars)
    std::vector<Eigen::VectorXd> enc_b;  // filters
    Eigen::MatrixXd hid_w;               // hidden x concat
    Eigen::VectorXd hid_b;
    Eigen::MatrixXd out_w;               // outputs x hidden
    Eigen::VectorXd out_b;

    void init(std::uint64_t seed) {
        Rng rng(seed);
        enc_w.clear();
        enc_b.clear();
        auto uni = [&](Eigen::MatrixXd& m, double scale) {
            for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
        };
        for (int len : spec.input_lengths) {
            const int k = len == 1 ? 1 : spec.kernel_for(len);
            Eigen::MatrixXd w(spec.conv_filters, k);
            uni(w, 1.0 / std::sqrt(static_cast<double>(k)));
            enc_w.push_back(std::move(w));
            enc_b.push_back(Eigen::VectorXd::Zero(spec.conv_filters));
        }
        const int concat = spec.concat_dim();
        hid_w.resize(spec.hidden, concat);
        uni(hid_w, 1.0 / std::sqrt(static_cast<double>(concat)));
        hid_b = Eigen::VectorXd::Zero(spec.hidden);
        out_w.resize(spec.outputs, spec.hidden);
        uni(out_w, 1.0 / std::sqrt(static_cast<double>(spec.hidden)));
        out_b = Eigen::VectorXd::Zero(spec.outputs);
    }

    void set_zero() {
        for (auto& w : enc_w) w.setZero();
        for (auto& b : enc_b) b.setZero();
        hid_w.setZero();
        hid_b.setZero();
        out_w.setZero();
        out_b.setZero();
    }

    std::vector<double> flat() const {
        std::vector<double> v;
        auto put = [&](const double* p, Eigen::Index n) { v.insert(v.end(), p, p + n); };
        for (std::size_t i = 0; i < enc_w.size(); ++i) {
            put(enc_w[i].data(), enc_w[i].size());
            put(enc_b[i].data(), enc_b[i].size());
        }
        put(hid_w.data(), hid_w.size());
        put(hid_b.data(), hid_b.size());
        put(out_w.data(), out_w.size());
        put(out_b.data(), out_b.size());
        return v;
    }

    void set_flat(const std::vector<double>& v) {
        std::size_t k = 0;
        auto take = [&](double* p, Eigen::Index n) {
            if (k + static_cast<std::size_t>(n) > v.size())
                throw std::runtime_error("PolicyNet: flat vector too short");
            std::copy(v.begin() + static_cast<long>(k),
                      v.begin() + static_cast<long>(k) + n, p);
            k += static_cast<std::size_t>(n);
        };
        for (std::size_t i = 0; i < enc_w.size(); ++i) {
            take(enc_w[i].data(), enc_w[i].size());
            take(enc_b[i].data(), enc_b[i].size());
        }
        take(hid_w.data(), hid_w.size());
        take(hid_b.data(), hid_b.size());
        take(out_w.data(), out_w.size());
        take(out_b.data(), out_b.size());
        if (k != v.size()) throw std::runtime_error("PolicyNet: flat vector size mismatch");
    }
};

namespace detail {

struct NetTape {
    std::vector<Eigen::VectorXd> inputs;    // raw inputs as given
    std::vector<Eigen::VectorXd> enc_act;   // post-relu encoder outputs (flattened)
    Eigen::VectorXd concat;
    Eigen::VectorXd hid_act;                // post-relu hidden
    Eigen::VectorXd out;                    // linear outputs (logits or value)
};

inline void net_forward(const PolicyNet& net, const std::vector<Eigen::VectorXd>& inputs,
                        NetTape& tape) {
    const auto& spec = net.spec;
    if (inputs.size() != spec.input_lengths.size())
        throw std::invalid_argument("policy forward: wrong number of inputs");
    tape.inputs = inputs;
    tape.enc_act.resize(inputs.size());
    tape.concat.resize(spec.concat_dim());
    int at = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const int len = spec.input_lengths[i];
        if (inputs[i].size() != len)
            throw std::invalid_argument("policy forward: input " + std::to_string(i) +
                                        " has length " + std::to_string(inputs[i].size()) +
                                        ", expected " + std::to_string(len));
        if (len == 1) {
            Eigen::VectorXd z = net.enc_w[i].col(0) * inputs[i](0) + net.enc_b[i];
            tape.enc_act[i] = z.cwiseMax(0.0);
        } else {
            const int k = spec.kernel_for(len);
            const int out_len = len - k + 1;
            Eigen::VectorXd act(spec.conv_filters * out_len);
            for (int p = 0; p < out_len; ++p) {
                Eigen::VectorXd z = net.enc_w[i] * inputs[i].segment(p, k) + net.enc_b[i];
                act.segment(p * spec.conv_filters, spec.conv_filters) = z.cwiseMax(0.0);
            }
            tape.enc_act[i] = std::move(act);
        }
        tape.concat.segment(at, tape.enc_act[i].size()) = tape.enc_act[i];
        at += static_cast<int>(tape.enc_act[i].size());
    }
    tape.hid_act = (net.hid_w * tape.concat + net.hid_b).cwiseMax(0.0);
    tape.out = net.out_w * tape.hid_act + net.out_b;
}

struct NetGrads {
    std::vector<Eigen::MatrixXd> enc_w;
    std::vector<Eigen::VectorXd> enc_b;
    Eigen::MatrixXd hid_w;
    Eigen::VectorXd hid_b;
    Eigen::MatrixXd out_w;
    Eigen::VectorXd out_b;

    static NetGrads zeros_like(const PolicyNet& net) {
        NetGrads g;
        for (std::size_t i = 0; i < net.enc_w.size(); ++i) {
            g.enc_w.push_back(Eigen::MatrixXd::Zero(net.enc_w[i].rows(), net.enc_w[i].cols()));
            g.enc_b.push_back(Eigen::VectorXd::Zero(net.enc_b[i].size()));
        }
        g.hid_w = Eigen::MatrixXd::Zero(net.hid_w.rows(), net.hid_w.cols());
        g.hid_b = Eigen::VectorXd::Zero(net.hid_b.size());
        g.out_w = Eigen::MatrixXd::Zero(net.out_w.rows(), net.out_w.cols());
        g.out_b = Eigen::VectorXd::Zero(net.out_b.size());
        return g;
    }

    void add_scaled(const NetGrads& other, double k) {
        for (std::size_t i = 0; i < enc_w.size(); ++i) {
            enc_w[i] += k * other.enc_w[i];
            enc_b[i] += k * other.enc_b[i];
        }
        hid_w += k * other.hid_w;
        hid_b += k * other.hid_b;
        out_w += k * other.out_w;
        out_b += k * other.out_b;
    }
};

/// Backprop `dout` (gradient at the linear outputs) through the net.
inline void net_backward(const PolicyNet& net, const NetTape& tape, const Eigen::VectorXd& dout,
                         NetGrads& grads) {
    const auto& spec = net.spec;
    grads.out_w += dout * tape.hid_act.transpose();
    grads.out_b += dout;
    Eigen::VectorXd dhid = net.out_w.transpose() * dout;
    for (Eigen::Index j = 0; j < dhid.size(); ++j)
        if (tape.hid_act(j) <= 0.0) dhid(j) = 0.0;
    grads.hid_w += dhid * tape.concat.transpose();
    grads.hid_b += dhid;
    const Eigen::VectorXd dconcat = net.hid_w.transpose() * dhid;
    int at = 0;
    for (std::size_t i = 0; i < tape.enc_act.size(); ++i) {
        const int len = spec.input_lengths[i];
        Eigen::VectorXd denc = dconcat.segment(at, tape.enc_act[i].size());
        at += static_cast<int>(tape.enc_act[i].size());
        for (Eigen::Index j = 0; j < denc.size(); ++j)
            if (tape.enc_act[i](j) <= 0.0) denc(j) = 0.0;
        if (len == 1) {
            grads.enc_w[i].col(0) += denc * tape.inputs[i](0);
            grads.enc_b[i] += denc;
        } else {
            const int k = spec.kernel_for(len);
            const int out_len = len - k + 1;
            for (int p = 0; p < out_len; ++p) {
                const auto dz = denc.segment(p * spec.conv_filters, spec.conv_filters);
                grads.enc_w[i] += dz * tape.inputs[i].segment(p, k).transpose();
                grads.enc_b[i] += dz;
            }
        }
    }
}

}  // namespace detail

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

/// Actor + critic pair over the same input layout (separate weights).
struct PolicyModel {
    PolicyNet actor;
    PolicyNet critic;

    static PolicyModel make(const std::vector<int>& input_lengths, int n_actions,
                            int conv_filters, int hidden, std::uint64_t seed) {
        PolicyModel m;
        m.actor.spec.input_lengths = input_lengths;
        m.actor.spec.conv_filters = conv_filters;
        m.actor.spec.hidden = hidden;
        m.actor.spec.outputs = n_actions;
        m.critic.spec = m.actor.spec;
        m.critic.spec.outputs = 1;
        m.actor.init(derive_seed(seed, "actor"));
        m.critic.init(derive_seed(seed, "critic"));
        return m;
    }
};

struct PolicyDecision {
    Eigen::VectorXd probabilities;
    double value = 0.0;
};

/// Action distribution from the actor plus the critic's value estimate.
inline PolicyDecision policy_forward(const PolicyModel& model,
                                     const std::vector<Eigen::VectorXd>& inputs) {
    detail::NetTape ta, tc;
    detail::net_forward(model.actor, inputs, ta);
    detail::net_forward(model.critic, inputs, tc);
    PolicyDecision d;
    d.probabilities = softmax(ta.out);
    d.value = tc.out(0);
    return d;
}

inline int greedy_action(const Eigen::VectorXd& probs) {
    int best = 0;
    for (int i = 1; i < probs.size(); ++i)
        if (probs(i) > probs(best)) best = i;  // ties keep the lowest index
    return best;
}

inline int sample_action(const Eigen::VectorXd& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
        acc += probs(i);
        if (u < acc) return i;
    }
    return static_cast<int>(probs.size()) - 1;
}

// ---- checkpoint container (shared format with the predictor) ----

namespace detail {

inline nlohmann::json net_to_json(const PolicyNet& net) {
    nlohmann::json j;
    j["input_lengths"] = net.spec.input_lengths;
    j["conv_filters"] = net.spec.conv_filters;
    j["conv_kernel"] = net.spec.conv_kernel;
    j["hidden"] = net.spec.hidden;
    j["outputs"] = net.spec.outputs;
    for (std::size_t i = 0; i < net.enc_w.size(); ++i) {
        j["enc" + std::to_string(i) + ".w"] = matrix_to_json(net.enc_w[i]);
        j["enc" + std::to_string(i) + ".b"] = matrix_to_json(net.enc_b[i]);
    }
    j["hid.w"] = matrix_to_json(net.hid_w);
    j["hid.b"] = matrix_to_json(net.hid_b);
    j["out.w"] = matrix_to_json(net.out_w);
    j["out.b"] = matrix_to_json(net.out_b);
    return j;
}

inline PolicyNet net_from_json(const nlohmann::json& j) {
    PolicyNet net;
    net.spec.input_lengths = j.at("input_lengths").get<std::vector<int>>();
    net.spec.conv_filters = j.at("conv_filters").get<int>();
    net.spec.conv_kernel = j.at("conv_kernel").get<int>();
    net.spec.hidden = j.at("hidden").get<int>();
    net.spec.outputs = j.at("outputs").get<int>();
    for (std::size_t i = 0; i < net.spec.input_lengths.size(); ++i) {
        net.enc_w.push_back(matrix_from_json(j.at("enc" + std::to_string(i) + ".w")));
        net.enc_b.push_back(
            Eigen::VectorXd(matrix_from_json(j.at("enc" + std::to_string(i) + ".b"))));
    }
    net.hid_w = matrix_from_json(j.at("hid.w"));
    net.hid_b = Eigen::VectorXd(matrix_from_json(j.at("hid.b")));
    net.out_w = matrix_from_json(j.at("out.w"));
    net.out_b = Eigen::VectorXd(matrix_from_json(j.at("out.b")));
    return net;
}

}  // namespace detail

inline void save_policy(const PolicyModel& model, const std::string& path) {
    nlohmann::json j;
    j["format"] = 1;
    j["kind"] = "policy";
    j["actor"] = detail::net_to_json(model.actor);
    j["critic"] = detail::net_to_json(model.critic);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump(2) << "\n";
}

inline PolicyModel load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("kind", "") != "policy")
        throw std::runtime_error(path + ": not a policy checkpoint");
    if (j.value("format", 0) != 1)
        throw std::runtime_error(path + ": unsupported checkpoint format");
    PolicyModel m;
    m.actor = detail::net_from_json(j.at("actor"));
    m.critic = detail::net_from_json(j.at("critic"));
    return m;
}

}  // namespace abrlab
