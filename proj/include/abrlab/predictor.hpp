#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "abrlab/lstm.hpp"
#include "abrlab/metrics.hpp"
#include "abrlab/trace.hpp"

namespace abrlab {

struct Prediction {
    double mbps = 0.0;
    bool used_fallback = false;  // not enough history for a full window
};

/// Predict the average throughput of the next W seconds from the H steps
/// before index i. With fewer than H steps of history the harmonic mean of
/// whatever history exists is returned instead, flagged as a fallback.
/// The result is clamped to be finite and nonnegative.
inline Prediction predict_window(const LstmModel& model, const ThroughputTrace& trace,
                                 std::size_t i, std::size_t h) {
    Prediction p;
    if (i < h) {
        p.used_fallback = true;
        if (i == 0) {
            p.mbps = 0.0;
            return p;
        }
        std::vector<double> hist(trace.throughput_mbps.begin(),
                                 trace.throughput_mbps.begin() + i);
        p.mbps = harmonic_mean(hist);
        return p;
    }
    std::vector<double> x(h * kNumFeatures);
    std::vector<double> y(h);
    const NormStats& st = model.norm_stats;
    for (std::size_t t = 0; t < h; ++t) {
        const std::size_t step = i - h + t;
        double row[kNumFeatures];
        trace.feature_row(step, row);
        for (int c = 0; c < kNumFeatures; ++c) x[t * kNumFeatures + c] = st.norm_feature(c, row[c]);
        y[t] = st.norm_throughput(trace.throughput_mbps[step]);
    }
    const double raw = lstm_forward(model, x, y);
    p.mbps = std::isfinite(raw) ? std::max(0.0, raw) : 0.0;
    return p;
}

/// Throughput predictor as the session runner sees it: maps (trace, step
/// index) to predicted Mbit/s for the upcoming slot.
using PredictorFn = std::function<Prediction(const ThroughputTrace&, std::size_t)>;

inline PredictorFn make_lstm_predictor(const LstmModel& model) {
    const std::size_t h = model.h ? model.h : 30;
    return [model, h](const ThroughputTrace& tr, std::size_t i) {
        return predict_window(model, tr, i, h);
    };
}

/// Harmonic-mean fallback predictor over the last `h` steps, used when no
/// trained model is supplied.
inline PredictorFn make_harmonic_predictor(std::size_t h = 30) {
    return [h](const ThroughputTrace& tr, std::size_t i) {
        Prediction p;
        p.used_fallback = true;
        if (i == 0) return p;
        const std::size_t lo = i > h ? i - h : 0;
        std::vector<double> hist(tr.throughput_mbps.begin() + lo, tr.throughput_mbps.begin() + i);
        p.mbps = harmonic_mean(hist);
        return p;
    };
}

}  // namespace abrlab
