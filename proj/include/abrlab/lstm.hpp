#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "abrlab/rng.hpp"
#include "abrlab/samples.hpp"

namespace abrlab {

/// Transfer strategies for retraining a source-domain model on target data.
enum class FineTuneStrategy { WeightTransfer, LastLayerOnly, AllLayers };

inline const char* to_string(FineTuneStrategy s) {
    switch (s) {
        case FineTuneStrategy::WeightTransfer: return "weight_transfer";
        case FineTuneStrategy::LastLayerOnly: return "last_layer";
        case FineTuneStrategy::AllLayers: return "all_layers";
    }
    return "?";
}

struct TrainConfig {
    int epochs = 40;
    int batch_size = 32;
    double learning_rate = 0.08;  // plain mini-batch SGD on normalized MSE
    double clip_norm = 5.0;       // global gradient norm clip
    int early_stop_patience = 10;
    std::uint64_t seed = 1;

    void validate() const {
        if (epochs < 1 || batch_size < 1 || learning_rate <= 0 || early_stop_patience < 1)
            throw std::invalid_argument("TrainConfig: all values must be positive");
    }
};

/// Gate weights for one recurrent layer, stacked in i,f,g,o order.
struct LstmLayerWeights {
    Eigen::MatrixXd wx;  // 4h x input
    Eigen::MatrixXd wh;  // 4h x h
    Eigen::VectorXd b;   // 4h
};

struct LstmWeights {
    std::vector<LstmLayerWeights> layers;
    Eigen::RowVectorXd head_w;  // 1 x h_top
    double head_b = 0.0;
};

namespace detail {

inline void flatten_into(const LstmWeights& w, std::vector<double>& out) {
    out.clear();
    for (const auto& l : w.layers) {
        out.insert(out.end(), l.wx.data(), l.wx.data() + l.wx.size());
        out.insert(out.end(), l.wh.data(), l.wh.data() + l.wh.size());
        out.insert(out.end(), l.b.data(), l.b.data() + l.b.size());
    }
    out.insert(out.end(), w.head_w.data(), w.head_w.data() + w.head_w.size());
    out.push_back(w.head_b);
}

inline void unflatten_from(const std::vector<double>& in, LstmWeights& w) {
    std::size_t k = 0;
    auto take = [&](double* dst, std::size_t n) {
        if (k + n > in.size()) throw std::runtime_error("LstmWeights: flat vector too short");
        std::copy(in.begin() + k, in.begin() + k + n, dst);
        k += n;
    };
    for (auto& l : w.layers) {
        take(l.wx.data(), l.wx.size());
        take(l.wh.data(), l.wh.size());
        take(l.b.data(), l.b.size());
    }
    take(w.head_w.data(), w.head_w.size());
    if (k + 1 != in.size()) throw std::runtime_error("LstmWeights: flat vector size mismatch");
    w.head_b = in[k];
}

}  // namespace detail

/// Recurrent throughput predictor: stacked LSTM layers plus a one-unit dense
/// head. Inference is dropout-free and deterministic; inverted dropout is
/// applied between recurrent layers during training only.
struct LstmModel {
    std::vector<int> layer_sizes{32, 32};
    int input_dim = kNumFeatures + 1;  // feature columns + throughput channel
    double dropout_rate = 0.2;
    std::size_t h = 0;  // history steps the model was trained with
    std::size_t w = 0;  // future window the label averages over
    LstmWeights weights;         // current weights (theta)
    LstmWeights source_weights;  // theta_S when this model was fine-tuned
    bool has_source = false;     // delta = weights - source_weights
    NormStats norm_stats;        // scaling used at train time; empty = identity

    void init(std::uint64_t seed) {
        Rng rng(seed);
        weights.layers.clear();
        int in = input_dim;
        for (int units : layer_sizes) {
            LstmLayerWeights l;
            l.wx.resize(4 * units, in);
            l.wh.resize(4 * units, units);
            l.b = Eigen::VectorXd::Zero(4 * units);
            const double sx = 1.0 / std::sqrt(static_cast<double>(in));
            const double sh = 1.0 / std::sqrt(static_cast<double>(units));
            for (Eigen::Index i = 0; i < l.wx.size(); ++i) l.wx.data()[i] = rng.uniform(-sx, sx);
            for (Eigen::Index i = 0; i < l.wh.size(); ++i) l.wh.data()[i] = rng.uniform(-sh, sh);
            // forget-gate bias at 1 so early training keeps long memories
            l.b.segment(units, units).setOnes();
            weights.layers.push_back(std::move(l));
            in = units;
        }
        const int top = layer_sizes.back();
        weights.head_w.resize(top);
        const double sy = 1.0 / std::sqrt(static_cast<double>(top));
        for (int i = 0; i < top; ++i) weights.head_w(i) = rng.uniform(-sy, sy);
        weights.head_b = 0.0;
        has_source = false;
        source_weights = LstmWeights{};
    }

    std::vector<double> flat_weights() const {
        std::vector<double> v;
        detail::flatten_into(weights, v);
        return v;
    }
    void set_flat_weights(const std::vector<double>& v) { detail::unflatten_from(v, weights); }

    /// Fine-tune delta over the source weights, flattened. Zero when the
    /// model has no source (or was transferred without gradient steps).
    std::vector<double> flat_delta() const {
        std::vector<double> cur;
        detail::flatten_into(weights, cur);
        if (!has_source) return std::vector<double>(cur.size(), 0.0);
        std::vector<double> src;
        detail::flatten_into(source_weights, src);
        for (std::size_t i = 0; i < cur.size(); ++i) cur[i] -= src[i];
        return cur;
    }
};

namespace detail {

struct LstmTapeLayer {
    // per timestep, each matrix is units x batch
    std::vector<Eigen::MatrixXd> i, f, g, o, c, tanh_c, h_out, x_in;
    std::vector<Eigen::MatrixXd> drop_mask;  // applied to h_out feeding the next layer
};

struct LstmTape {
    std::vector<LstmTapeLayer> layers;
    Eigen::RowVectorXd y_hat;  // 1 x batch, head output (normalized domain)
};

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
    return ((-z.array()).exp() + 1.0).inverse().matrix();
}

/// Batched forward pass. `inputs[t]` is input_dim x batch. When `training`
/// is true, inverted dropout masks are sampled between recurrent layers.
inline void lstm_forward_batch(const LstmModel& m, const std::vector<Eigen::MatrixXd>& inputs,
                               bool training, Rng* rng, LstmTape& tape) {
    const std::size_t steps = inputs.size();
    const Eigen::Index batch = inputs.empty() ? 0 : inputs[0].cols();
    const std::size_t n_layers = m.weights.layers.size();
    tape.layers.assign(n_layers, LstmTapeLayer{});

    std::vector<Eigen::MatrixXd> layer_in = inputs;
    for (std::size_t li = 0; li < n_layers; ++li) {
        const auto& lw = m.weights.layers[li];
        const int units = static_cast<int>(lw.wh.cols());
        auto& tp = tape.layers[li];
        tp.i.resize(steps);
        tp.f.resize(steps);
        tp.g.resize(steps);
        tp.o.resize(steps);
        tp.c.resize(steps);
        tp.tanh_c.resize(steps);
        tp.h_out.resize(steps);
        tp.x_in = layer_in;
        Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(units, batch);
        Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(units, batch);
        for (std::size_t t = 0; t < steps; ++t) {
            Eigen::MatrixXd z = lw.wx * layer_in[t] + lw.wh * h_prev;
            z.colwise() += lw.b;
            tp.i[t] = sigmoid(z.topRows(units));
            tp.f[t] = sigmoid(z.middleRows(units, units));
            tp.g[t] = z.middleRows(2 * units, units).array().tanh().matrix();
            tp.o[t] = sigmoid(z.bottomRows(units));
            tp.c[t] = tp.f[t].cwiseProduct(c_prev) + tp.i[t].cwiseProduct(tp.g[t]);
            tp.tanh_c[t] = tp.c[t].array().tanh().matrix();
            tp.h_out[t] = tp.o[t].cwiseProduct(tp.tanh_c[t]);
            h_prev = tp.h_out[t];
            c_prev = tp.c[t];
        }
        // dropout between recurrent layers only
        if (li + 1 < n_layers) {
            const bool use_drop = training && m.dropout_rate > 0.0;
            layer_in.resize(steps);
            const double keep = 1.0 - m.dropout_rate;
            if (use_drop) tp.drop_mask.resize(steps);
            for (std::size_t t = 0; t < steps; ++t) {
                if (use_drop) {
                    Eigen::MatrixXd mask(units, batch);
                    for (Eigen::Index k = 0; k < mask.size(); ++k)
                        mask.data()[k] = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
                    tp.drop_mask[t] = mask;
                    layer_in[t] = tp.h_out[t].cwiseProduct(mask);
                } else {
                    layer_in[t] = tp.h_out[t];
                }
            }
        }
    }
    const auto& top = tape.layers.back();
    tape.y_hat = m.weights.head_w * top.h_out[steps - 1];
    tape.y_hat.array() += m.weights.head_b;
}

struct LstmGrads {
    std::vector<LstmLayerWeights> layers;  // same shapes as the model
    Eigen::RowVectorXd head_w;
    double head_b = 0.0;

    static LstmGrads zeros_like(const LstmModel& m) {
        LstmGrads g;
        for (const auto& l : m.weights.layers) {
            LstmLayerWeights z;
            z.wx = Eigen::MatrixXd::Zero(l.wx.rows(), l.wx.cols());
            z.wh = Eigen::MatrixXd::Zero(l.wh.rows(), l.wh.cols());
            z.b = Eigen::VectorXd::Zero(l.b.size());
            g.layers.push_back(std::move(z));
        }
        g.head_w = Eigen::RowVectorXd::Zero(m.weights.head_w.size());
        g.head_b = 0.0;
        return g;
    }

    double squared_norm() const {
        double s = 0.0;
        for (const auto& l : layers) s += l.wx.squaredNorm() + l.wh.squaredNorm() + l.b.squaredNorm();
        s += head_w.squaredNorm() + head_b * head_b;
        return s;
    }

    void scale(double k) {
        for (auto& l : layers) {
            l.wx *= k;
            l.wh *= k;
            l.b *= k;
        }
        head_w *= k;
        head_b *= k;
    }
};

/// Backprop through time for a batch. `dy` is 1 x batch, the gradient of the
/// loss w.r.t. the head output. Gradients are summed over the batch.
inline void lstm_backward_batch(const LstmModel& m, const LstmTape& tape,
                                const Eigen::RowVectorXd& dy, LstmGrads& grads) {
    const std::size_t n_layers = m.weights.layers.size();
    const std::size_t steps = tape.layers[0].h_out.size();
    const Eigen::Index batch = dy.cols();

    const auto& top = tape.layers.back();
    grads.head_w += dy * top.h_out[steps - 1].transpose();
    grads.head_b += dy.sum();

    // dh_ext[t]: gradient arriving at each layer's output from above
    std::vector<Eigen::MatrixXd> dh_ext(steps);
    const int top_units = static_cast<int>(m.weights.layers.back().wh.cols());
    for (std::size_t t = 0; t < steps; ++t)
        dh_ext[t] = Eigen::MatrixXd::Zero(top_units, batch);
    dh_ext[steps - 1] = m.weights.head_w.transpose() * dy;

    for (std::size_t li = n_layers; li-- > 0;) {
        const auto& lw = m.weights.layers[li];
        const auto& tp = tape.layers[li];
        const int units = static_cast<int>(lw.wh.cols());
        auto& gl = grads.layers[li];
        Eigen::MatrixXd dh_carry = Eigen::MatrixXd::Zero(units, batch);
        Eigen::MatrixXd dc_carry = Eigen::MatrixXd::Zero(units, batch);
        std::vector<Eigen::MatrixXd> dx(steps);
        for (std::size_t t = steps; t-- > 0;) {
            const Eigen::MatrixXd dh = dh_ext[t] + dh_carry;
            const Eigen::MatrixXd dc =
                dh.cwiseProduct(tp.o[t])
                    .cwiseProduct((1.0 - tp.tanh_c[t].array().square()).matrix()) +
                dc_carry;
            const Eigen::MatrixXd c_prev =
                t == 0 ? Eigen::MatrixXd::Zero(units, batch) : tp.c[t - 1];
            const Eigen::MatrixXd h_prev =
                t == 0 ? Eigen::MatrixXd::Zero(units, batch) : tp.h_out[t - 1];
            Eigen::MatrixXd da(4 * units, batch);
            da.topRows(units) = dc.cwiseProduct(tp.g[t])
                                    .cwiseProduct(tp.i[t])
                                    .cwiseProduct((1.0 - tp.i[t].array()).matrix());
            da.middleRows(units, units) = dc.cwiseProduct(c_prev)
                                              .cwiseProduct(tp.f[t])
                                              .cwiseProduct((1.0 - tp.f[t].array()).matrix());
            da.middleRows(2 * units, units) =
                dc.cwiseProduct(tp.i[t]).cwiseProduct((1.0 - tp.g[t].array().square()).matrix());
            da.bottomRows(units) = dh.cwiseProduct(tp.tanh_c[t])
                                       .cwiseProduct(tp.o[t])
                                       .cwiseProduct((1.0 - tp.o[t].array()).matrix());
            gl.wx += da * tp.x_in[t].transpose();
            gl.wh += da * h_prev.transpose();
            gl.b += da.rowwise().sum();
            dx[t] = lw.wx.transpose() * da;
            dh_carry = lw.wh.transpose() * da;
            dc_carry = dc.cwiseProduct(tp.f[t]);
        }
        if (li > 0) {
            const auto& below = tape.layers[li - 1];
            for (std::size_t t = 0; t < steps; ++t)
                dh_ext[t] = below.drop_mask.empty() ? dx[t] : dx[t].cwiseProduct(below.drop_mask[t]);
        }
    }
}

/// Assemble input_dim x batch matrices, one per timestep, from sample indices.
inline std::vector<Eigen::MatrixXd> gather_inputs(const SampleSet& set,
                                                  const std::vector<std::size_t>& idx) {
    const std::size_t steps = set.h;
    const Eigen::Index batch = static_cast<Eigen::Index>(idx.size());
    std::vector<Eigen::MatrixXd> inputs(steps, Eigen::MatrixXd(kNumFeatures + 1, batch));
    for (Eigen::Index b = 0; b < batch; ++b) {
        const auto& xw = set.x_windows[idx[b]];
        const auto& yw = set.y_windows[idx[b]];
        for (std::size_t t = 0; t < steps; ++t) {
            for (int c = 0; c < kNumFeatures; ++c) inputs[t](c, b) = xw[t * kNumFeatures + c];
            inputs[t](kNumFeatures, b) = yw[t];
        }
    }
    return inputs;
}

}  // namespace detail

/// Deterministic inference on one normalized window; the scalar prediction is
/// denormalized to Mbit/s with the model's stored stats.
inline double lstm_forward(const LstmModel& model, const std::vector<double>& x_window,
                           const std::vector<double>& y_window) {
    const std::size_t steps = y_window.size();
    if (steps == 0 || x_window.size() != steps * kNumFeatures)
        throw std::invalid_argument("lstm_forward: window shape mismatch (H=" +
                                    std::to_string(steps) + ", |x|=" +
                                    std::to_string(x_window.size()) + ")");
    std::vector<Eigen::MatrixXd> inputs(steps, Eigen::MatrixXd(kNumFeatures + 1, 1));
    for (std::size_t t = 0; t < steps; ++t) {
        for (int c = 0; c < kNumFeatures; ++c) inputs[t](c, 0) = x_window[t * kNumFeatures + c];
        inputs[t](kNumFeatures, 0) = y_window[t];
    }
    detail::LstmTape tape;
    detail::lstm_forward_batch(model, inputs, /*training=*/false, nullptr, tape);
    return model.norm_stats.denorm_throughput(tape.y_hat(0));
}

/// MSE loss and analytic gradients on a set of samples (no dropout).
/// Exposed for gradient checking; training uses the same path.
inline double lstm_loss_and_grads(const LstmModel& model, const SampleSet& set,
                                  const std::vector<std::size_t>& idx,
                                  detail::LstmGrads* grads) {
    const auto inputs = detail::gather_inputs(set, idx);
    detail::LstmTape tape;
    detail::lstm_forward_batch(model, inputs, false, nullptr, tape);
    const Eigen::Index batch = static_cast<Eigen::Index>(idx.size());
    double loss = 0.0;
    Eigen::RowVectorXd dy(batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const double err = tape.y_hat(b) - set.labels[idx[b]];
        loss += err * err;
        dy(b) = 2.0 * err / static_cast<double>(batch);
    }
    loss /= static_cast<double>(batch);
    if (grads) detail::lstm_backward_batch(model, tape, dy, *grads);
    return loss;
}

struct EpochLoss {
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct TrainResult {
    std::vector<EpochLoss> loss_curve;
    double best_val_mse = 0.0;
    int best_epoch = -1;
};

struct TrainingDiverged : std::runtime_error {
    explicit TrainingDiverged(int epoch)
        : std::runtime_error("training diverged (non-finite loss) at epoch " +
                             std::to_string(epoch)),
          epoch(epoch) {}
    int epoch;
};

namespace detail {

inline double eval_mse(const LstmModel& m, const SampleSet& set,
                       const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    // chunked evaluation to bound workspace size
    double total = 0.0;
    const std::size_t chunk = 256;
    for (std::size_t at = 0; at < idx.size(); at += chunk) {
        std::vector<std::size_t> part(idx.begin() + at,
                                      idx.begin() + std::min(idx.size(), at + chunk));
        total += lstm_loss_and_grads(m, set, part, nullptr) * static_cast<double>(part.size());
    }
    return total / static_cast<double>(idx.size());
}

/// Core SGD loop over given train/val index sets. With `train_recurrent`
/// false only the dense head receives updates (partial retraining).
inline TrainResult sgd_train(LstmModel& model, const SampleSet& set,
                             const std::vector<std::size_t>& train_idx,
                             const std::vector<std::size_t>& val_idx, const TrainConfig& cfg,
                             bool train_recurrent) {
    cfg.validate();
    Rng rng(cfg.seed);
    TrainResult result;
    std::vector<std::size_t> order = train_idx;
    std::vector<double> best_weights = model.flat_weights();
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates shuffle with the session RNG keeps runs reproducible
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = rng.uniform_int(i);
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            std::vector<std::size_t> batch(
                order.begin() + at,
                order.begin() + std::min(order.size(), at + cfg.batch_size));
            const auto inputs = gather_inputs(set, batch);
            LstmTape tape;
            lstm_forward_batch(model, inputs, /*training=*/true, &rng, tape);
            const Eigen::Index bsz = static_cast<Eigen::Index>(batch.size());
            Eigen::RowVectorXd dy(bsz);
            double loss = 0.0;
            for (Eigen::Index b = 0; b < bsz; ++b) {
                const double err = tape.y_hat(b) - set.labels[batch[b]];
                loss += err * err;
                dy(b) = 2.0 * err / static_cast<double>(bsz);
            }
            loss /= static_cast<double>(bsz);
            epoch_loss += loss * static_cast<double>(bsz);
            seen += batch.size();
            LstmGrads grads = LstmGrads::zeros_like(model);
            lstm_backward_batch(model, tape, dy, grads);
            if (!train_recurrent)
                for (auto& l : grads.layers) {
                    l.wx.setZero();
                    l.wh.setZero();
                    l.b.setZero();
                }
            const double norm = std::sqrt(grads.squared_norm());
            if (norm > cfg.clip_norm) grads.scale(cfg.clip_norm / norm);
            for (std::size_t li = 0; li < model.weights.layers.size(); ++li) {
                model.weights.layers[li].wx -= cfg.learning_rate * grads.layers[li].wx;
                model.weights.layers[li].wh -= cfg.learning_rate * grads.layers[li].wh;
                model.weights.layers[li].b -= cfg.learning_rate * grads.layers[li].b;
            }
            model.weights.head_w -= cfg.learning_rate * grads.head_w;
            model.weights.head_b -= cfg.learning_rate * grads.head_b;
        }
        EpochLoss el;
        el.train_mse = seen ? epoch_loss / static_cast<double>(seen) : 0.0;
        el.val_mse = val_idx.empty() ? el.train_mse : eval_mse(model, set, val_idx);
        if (!std::isfinite(el.train_mse) || !std::isfinite(el.val_mse))
            throw TrainingDiverged(epoch);
        result.loss_curve.push_back(el);
        if (el.val_mse < best_val) {
            best_val = el.val_mse;
            best_weights = model.flat_weights();
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.early_stop_patience) {
            break;
        }
    }
    model.set_flat_weights(best_weights);
    result.best_val_mse = best_val;
    return result;
}

inline std::vector<std::size_t> index_range(std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> v;
    v.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) v.push_back(i);
    return v;
}

}  // namespace detail

/// Train on the source-domain set with a chronological 80/20 train-validation
/// split; the returned weights are those with the lowest validation MSE seen.
inline TrainResult train_source(LstmModel& model, const SampleSet& samples,
                                const TrainConfig& cfg) {
    if (samples.size() == 0) throw std::invalid_argument("train_source: empty sample set");
    if (!samples.normalized())
        throw std::invalid_argument("train_source: samples must be normalized first");
    model.h = samples.h;
    model.w = samples.w;
    model.norm_stats = samples.norm_stats;
    const std::size_t cut = std::max<std::size_t>(1, samples.size() * 8 / 10);
    const auto train_idx = detail::index_range(0, cut);
    const auto val_idx = detail::index_range(cut, samples.size());
    return detail::sgd_train(model, samples, train_idx, val_idx, cfg, /*train_recurrent=*/true);
}

struct FineTuneResult {
    TrainResult training;
    std::vector<std::size_t> test_idx;  // chronological 20% tail held out
};

/// Retrain a source model on target-domain samples (normalized with the
/// source stats) under one of the three transfer strategies, using a
/// chronological 72/8/20 train-validation-test split. The test indices are
/// returned for scoring; WeightTransfer takes zero gradient steps.
inline FineTuneResult fine_tune(LstmModel& model, const SampleSet& target,
                                FineTuneStrategy strategy, const TrainConfig& cfg) {
    if (target.size() == 0) throw std::invalid_argument("fine_tune: empty target set");
    if (!target.normalized())
        throw std::invalid_argument("fine_tune: target samples must be normalized first");
    model.source_weights = model.weights;
    model.has_source = true;

    const std::size_t n = target.size();
    const std::size_t train_cut = std::max<std::size_t>(1, n * 72 / 100);
    const std::size_t val_cut = std::max(train_cut + 1, n * 80 / 100);
    FineTuneResult out;
    out.test_idx = detail::index_range(std::min(val_cut, n), n);

    if (strategy == FineTuneStrategy::WeightTransfer) return out;

    const auto train_idx = detail::index_range(0, train_cut);
    const auto val_idx = detail::index_range(train_cut, std::min(val_cut, n));
    out.training = detail::sgd_train(model, target, train_idx, val_idx, cfg,
                                     strategy == FineTuneStrategy::AllLayers);
    return out;
}

/// Predictions (denormalized Mbit/s) for a list of sample indices.
inline std::vector<double> predict_samples(const LstmModel& model, const SampleSet& set,
                                           const std::vector<std::size_t>& idx) {
    std::vector<double> preds;
    preds.reserve(idx.size());
    const std::size_t chunk = 256;
    for (std::size_t at = 0; at < idx.size(); at += chunk) {
        std::vector<std::size_t> part(idx.begin() + at,
                                      idx.begin() + std::min(idx.size(), at + chunk));
        const auto inputs = detail::gather_inputs(set, part);
        detail::LstmTape tape;
        detail::lstm_forward_batch(model, inputs, false, nullptr, tape);
        for (Eigen::Index b = 0; b < tape.y_hat.cols(); ++b)
            preds.push_back(model.norm_stats.denorm_throughput(tape.y_hat(b)));
    }
    return preds;
}

}  // namespace abrlab
