#pragma once

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "abrlab/trace.hpp"

namespace abrlab {

/// Per-column min/max used for max-min normalization. Column layout:
/// the feature columns (kNumFeatures) followed by one throughput column
/// shared by the history vector and the label.
struct NormStats {
    std::vector<double> min;  // size kNumFeatures + 1
    std::vector<double> max;

    bool empty() const { return min.empty(); }

    static double norm_one(double v, double lo, double hi) {
        return hi > lo ? (v - lo) / (hi - lo) : 0.0;  // max==min maps to 0
    }
    static double denorm_one(double v, double lo, double hi) {
        return hi > lo ? lo + v * (hi - lo) : lo;
    }

    double norm_throughput(double v) const {
        return empty() ? v : norm_one(v, min.back(), max.back());
    }
    double denorm_throughput(double v) const {
        return empty() ? v : denorm_one(v, min.back(), max.back());
    }
    double norm_feature(int col, double v) const {
        return empty() ? v : norm_one(v, min[col], max[col]);
    }
};

/// Supervised windows: for each index, an H-by-n feature matrix, the H-vector
/// of past throughput, and the scalar mean of the next W throughput values.
struct SampleSet {
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<std::vector<double>> x_windows;  // each H*kNumFeatures, row-major
    std::vector<std::vector<double>> y_windows;  // each H
    std::vector<double> labels;
    NormStats norm_stats;  // populated by minmax_normalize

    std::size_t size() const { return labels.size(); }
    bool normalized() const { return !norm_stats.empty(); }
};

/// Slide an (H history, W future) window over the trace. A trace shorter
/// than H+W yields an empty set. Sample i of the result covers history steps
/// [i, i+H) and is labeled with mean throughput over [i+H, i+H+W).
inline SampleSet create_samples(const ThroughputTrace& trace, std::size_t h, std::size_t w) {
    if (h < 1 || w < 1) throw std::invalid_argument("create_samples: H and W must be >= 1");
    SampleSet set;
    set.h = h;
    set.w = w;
    const std::size_t len = trace.size();
    if (len < h + w) return set;
    const std::size_t count = len - h - w + 1;
    set.x_windows.reserve(count);
    set.y_windows.reserve(count);
    set.labels.reserve(count);
    for (std::size_t start = 0; start < count; ++start) {
        std::vector<double> x(h * kNumFeatures);
        std::vector<double> y(h);
        for (std::size_t t = 0; t < h; ++t) {
            trace.feature_row(start + t, &x[t * kNumFeatures]);
            y[t] = trace.throughput_mbps[start + t];
        }
        set.x_windows.push_back(std::move(x));
        set.y_windows.push_back(std::move(y));
        set.labels.push_back(avg_future_throughput(trace, start + h, w));
    }
    return set;
}

/// Compute per-column min/max over the whole set. The throughput column pools
/// the history vectors and the labels (labels reference future steps that may
/// not appear in any history window).
inline NormStats compute_norm_stats(const SampleSet& set) {
    if (set.size() == 0) throw std::invalid_argument("compute_norm_stats: empty sample set");
    NormStats st;
    st.min.assign(kNumFeatures + 1, std::numeric_limits<double>::infinity());
    st.max.assign(kNumFeatures + 1, -std::numeric_limits<double>::infinity());
    for (const auto& xw : set.x_windows) {
        for (std::size_t t = 0; t < set.h; ++t) {
            for (int c = 0; c < kNumFeatures; ++c) {
                const double v = xw[t * kNumFeatures + c];
                st.min[c] = std::min(st.min[c], v);
                st.max[c] = std::max(st.max[c], v);
            }
        }
    }
    auto& tmin = st.min[kNumFeatures];
    auto& tmax = st.max[kNumFeatures];
    for (const auto& yw : set.y_windows)
        for (double v : yw) {
            tmin = std::min(tmin, v);
            tmax = std::max(tmax, v);
        }
    for (double v : set.labels) {
        tmin = std::min(tmin, v);
        tmax = std::max(tmax, v);
    }
    return st;
}

/// Map every column into [0,1] with the given stats (or stats computed over
/// the set itself). Keeping the stats allows denormalizing predictions and
/// applying source-domain scaling to target-domain data.
inline SampleSet minmax_normalize(const SampleSet& set, const NormStats* use_stats = nullptr) {
    if (set.size() == 0) throw std::invalid_argument("minmax_normalize: empty sample set");
    const NormStats st = use_stats ? *use_stats : compute_norm_stats(set);
    SampleSet out;
    out.h = set.h;
    out.w = set.w;
    out.norm_stats = st;
    out.x_windows.reserve(set.size());
    out.y_windows.reserve(set.size());
    out.labels.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        std::vector<double> x(set.x_windows[i].size());
        std::vector<double> y(set.h);
        for (std::size_t t = 0; t < set.h; ++t) {
            for (int c = 0; c < kNumFeatures; ++c)
                x[t * kNumFeatures + c] =
                    NormStats::norm_one(set.x_windows[i][t * kNumFeatures + c], st.min[c], st.max[c]);
            y[t] = st.norm_throughput(set.y_windows[i][t]);
        }
        out.x_windows.push_back(std::move(x));
        out.y_windows.push_back(std::move(y));
        out.labels.push_back(st.norm_throughput(set.labels[i]));
    }
    return out;
}

}  // namespace abrlab
