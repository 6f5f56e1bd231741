#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace abrlab {

struct PredictionMetrics {
    double r2 = 0.0;
    double pearson = 0.0;
    double mae_mbps = 0.0;
};

/// R^2 = 1 - SS_res/SS_tot, sample Pearson correlation, mean absolute error.
/// Throws if the actuals have zero variance (both scores undefined).
inline PredictionMetrics score(std::span<const double> predictions,
                               std::span<const double> actuals) {
    const std::size_t n = actuals.size();
    if (n == 0 || predictions.size() != n)
        throw std::invalid_argument("score: sequences must be nonempty and equal length");
    double mean_a = 0.0, mean_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += actuals[i];
        mean_p += predictions[i];
    }
    mean_a /= static_cast<double>(n);
    mean_p /= static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0, cov = 0.0, var_p = 0.0, mae = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = actuals[i] - mean_a;
        const double dp = predictions[i] - mean_p;
        const double e = predictions[i] - actuals[i];
        ss_res += e * e;
        ss_tot += da * da;
        cov += da * dp;
        var_p += dp * dp;
        mae += std::abs(e);
    }
    if (ss_tot <= 0.0)
        throw std::domain_error("score: actuals have zero variance, R^2 and Pearson undefined");
    PredictionMetrics m;
    m.r2 = 1.0 - ss_res / ss_tot;
    // constant predictions: correlation degenerates, report 0 by convention
    m.pearson = var_p > 0.0 ? cov / std::sqrt(ss_tot * var_p) : 0.0;
    m.mae_mbps = mae / static_cast<double>(n);
    return m;
}

enum class MovingAverageKind { ArithmeticMA, EWMA, HarmonicMA };

/// Classic moving-average throughput estimators over a history window.
/// EWMA folds the window left-to-right; harmonic treats zeros as 1e-6.
inline double baseline_predict(MovingAverageKind kind, std::span<const double> window,
                               double ewma_alpha = 0.25) {
    if (window.empty()) throw std::invalid_argument("baseline_predict: empty window");
    switch (kind) {
        case MovingAverageKind::ArithmeticMA: {
            double s = 0.0;
            for (double v : window) s += v;
            return s / static_cast<double>(window.size());
        }
        case MovingAverageKind::EWMA: {
            double s = window[0];
            for (std::size_t i = 1; i < window.size(); ++i)
                s = ewma_alpha * window[i] + (1.0 - ewma_alpha) * s;
            return s;
        }
        case MovingAverageKind::HarmonicMA: {
            double inv = 0.0;
            for (double v : window) inv += 1.0 / (v > 0.0 ? v : 1e-6);
            return static_cast<double>(window.size()) / inv;
        }
    }
    throw std::logic_error("baseline_predict: unknown kind");
}

inline double harmonic_mean(std::span<const double> values) {
    return baseline_predict(MovingAverageKind::HarmonicMA, values);
}

}  // namespace abrlab
