#pragma once

// Independent reference implementations used only by tests. These mirror the
// contracts checked elsewhere but share no code with the library paths they
// verify.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "abrlab/abr.hpp"
#include "abrlab/emulator.hpp"

namespace oracles {

/// Direct summation of the QoE formula over (bitrate, rebuffer) pairs.
inline double qoe_direct(const std::vector<std::pair<double, double>>& chunks, double mu) {
    const std::size_t n = chunks.size();
    double sum_q = 0.0;
    for (const auto& [r, d] : chunks) sum_q += r;
    double sum_d = 0.0;
    for (const auto& [r, d] : chunks) sum_d += d;
    double sum_s = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        sum_s += std::fabs(chunks[i + 1].first - chunks[i].first);
    double q = sum_q / static_cast<double>(n) - mu * sum_d / static_cast<double>(n);
    if (n > 1) q -= sum_s / static_cast<double>(n - 1);
    return q;
}

/// Unpruned 6^h enumeration of the MPC objective; mirrors the spec's stated
/// dynamics directly with nested loops over a flat sequence id.
inline int mpc_enumerate(const abrlab::AbrContext& ctx, double used_throughput, double mu) {
    const int h = std::min<int>(ctx.horizon, static_cast<int>(ctx.future_sizes_mbit.size()));
    int best_first = 0;
    double best = -1e300;
    long total = 1;
    for (int i = 0; i < h; ++i) total *= 6;
    for (long id = 0; id < total; ++id) {
        // digits of id in base 6; digit 0 = first chunk (lexicographic order)
        std::vector<int> seq(static_cast<std::size_t>(h));
        long rem = id;
        for (int p = h - 1; p >= 0; --p) {
            seq[static_cast<std::size_t>(p)] = static_cast<int>(rem % 6);
            rem /= 6;
        }
        double buffer = ctx.buffer_level_s;
        double prev = ctx.ladder_mbps[static_cast<std::size_t>(ctx.last_level)];
        double obj = 0.0;
        for (int p = 0; p < h; ++p) {
            const int m = seq[static_cast<std::size_t>(p)];
            const double bitrate = ctx.ladder_mbps[static_cast<std::size_t>(m)];
            const double dl =
                ctx.future_sizes_mbit[static_cast<std::size_t>(p)][static_cast<std::size_t>(m)] /
                used_throughput;
            double rebuf = 0.0;
            if (dl > buffer) {
                rebuf = dl - buffer;
                buffer = 0.0;
            } else {
                buffer -= dl;
            }
            buffer = std::min(buffer + ctx.chunk_duration_s, ctx.buffer_cap_s);
            obj += bitrate - mu * rebuf - std::fabs(bitrate - prev);
            prev = bitrate;
        }
        if (obj > best) {
            best = obj;
            best_first = seq[0];
        }
    }
    return best_first;
}

/// Piecewise-constant download integration written as a plain time stepper.
inline double download_time_direct(const abrlab::ThroughputTrace& trace, double t0,
                                   double size_mbit) {
    const double sp = trace.sample_period_s;
    double acquired = 0.0;
    double t = t0;
    while (acquired < size_mbit) {
        const std::size_t k = static_cast<std::size_t>(t / sp);
        if (k >= trace.size()) return -1.0;  // exhausted
        const double seg_end = static_cast<double>(k + 1) * sp;
        const double r = trace.throughput_mbps[k];
        const double need = size_mbit - acquired;
        if (r > 0.0 && need <= r * (seg_end - t)) {
            t += need / r;
            acquired = size_mbit;
        } else {
            acquired += r * (seg_end - t);
            t = seg_end;
        }
    }
    return t - t0;
}

/// Textbook R^2 and Pearson, computed in a second pass layout.
struct ScorePair {
    double r2;
    double pearson;
};

inline ScorePair score_textbook(const std::vector<double>& pred, const std::vector<double>& act) {
    const double n = static_cast<double>(act.size());
    double ma = 0.0, mp = 0.0;
    for (double v : act) ma += v;
    for (double v : pred) mp += v;
    ma /= n;
    mp /= n;
    double ss_res = 0.0, ss_tot = 0.0, num = 0.0, da2 = 0.0, dp2 = 0.0;
    for (std::size_t i = 0; i < act.size(); ++i) {
        ss_res += (act[i] - pred[i]) * (act[i] - pred[i]);
        ss_tot += (act[i] - ma) * (act[i] - ma);
        num += (act[i] - ma) * (pred[i] - mp);
        da2 += (act[i] - ma) * (act[i] - ma);
        dp2 += (pred[i] - mp) * (pred[i] - mp);
    }
    return {1.0 - ss_res / ss_tot, num / std::sqrt(da2 * dp2)};
}

/// Central finite difference of a scalar function over a flat parameter
/// vector, for gradient checks.
inline std::vector<double> finite_difference(std::function<double(const std::vector<double>&)> f,
                                             std::vector<double> theta, double eps = 1e-6) {
    std::vector<double> grad(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double keep = theta[i];
        theta[i] = keep + eps;
        const double hi = f(theta);
        theta[i] = keep - eps;
        const double lo = f(theta);
        theta[i] = keep;
        grad[i] = (hi - lo) / (2.0 * eps);
    }
    return grad;
}

inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), 1e-6});
        worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace oracles
