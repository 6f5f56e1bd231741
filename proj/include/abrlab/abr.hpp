#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "abrlab/emulator.hpp"
#include "abrlab/metrics.hpp"

namespace abrlab {

/// QoE constants shared by the MPC objective and the session scorer.
struct QoeParams {
    double mu = kRebufferPenalty;  // rebuffer penalty weight
    double q(double bitrate_mbps) const { return qoe_quality(bitrate_mbps); }
};

inline QoeParams qoe_params() { return QoeParams{}; }

/// Everything a baseline selector needs for one decision.
struct AbrContext {
    double buffer_level_s = 0.0;
    double buffer_cap_s = 60.0;
    int last_level = 0;
    std::vector<double> last_throughputs_mbps;            // most recent last
    std::optional<double> predicted_throughput_mbps;      // slot-level estimate
    std::array<double, kNumLevels> ladder_mbps{};
    int horizon = 5;                                      // MPC lookahead chunks
    double chunk_duration_s = 8.0;
    std::vector<std::array<double, kNumLevels>> future_sizes_mbit;  // >= 1 rows
    double max_pred_error = 0.0;  // max relative error of recent predictions
};

struct BolaParams {
    double v_s = 0.0;      // control gain; <= 0 means derive from the cap
    double gamma_p = 5.0;  // buffer-target shaping term
};

/// Buffer-occupancy selector: argmax over levels of
/// (V*(u_m + gamma_p) - buffer)/size_m with u_m = ln(size_m/size_min),
/// ties toward the higher bitrate. V defaults to the recommended
/// (cap - chunk_duration)/(u_max + gamma_p).
inline int bola_select(const AbrContext& ctx, BolaParams params = {}) {
    if (ctx.future_sizes_mbit.empty())
        throw std::invalid_argument("bola_select: next chunk sizes required");
    const auto& sizes = ctx.future_sizes_mbit.front();
    const double size_min = *std::min_element(sizes.begin(), sizes.end());
    std::array<double, kNumLevels> utility{};
    for (int m = 0; m < kNumLevels; ++m)
        utility[static_cast<std::size_t>(m)] =
            std::log(sizes[static_cast<std::size_t>(m)] / size_min);
    const double u_max = utility[kNumLevels - 1];
    double v = params.v_s;
    if (v <= 0.0)
        v = std::max(1e-6, ctx.buffer_cap_s - ctx.chunk_duration_s) / (u_max + params.gamma_p);
    int best = 0;
    double best_obj = -std::numeric_limits<double>::infinity();
    for (int m = 0; m < kNumLevels; ++m) {
        const double obj = (v * (utility[static_cast<std::size_t>(m)] + params.gamma_p) -
                            ctx.buffer_level_s) /
                           sizes[static_cast<std::size_t>(m)];
        if (obj >= best_obj) {  // >= breaks ties toward the higher bitrate
            best_obj = obj;
            best = m;
        }
    }
    return best;
}

/// Highest level whose bitrate fits under the harmonic mean of the last
/// five observed chunk throughputs; lowest level when none fit or there is
/// no history yet.
inline int rate_based_select(const AbrContext& ctx) {
    if (ctx.last_throughputs_mbps.empty()) return 0;
    const std::size_t n = std::min<std::size_t>(5, ctx.last_throughputs_mbps.size());
    std::vector<double> tail(ctx.last_throughputs_mbps.end() - static_cast<long>(n),
                             ctx.last_throughputs_mbps.end());
    const double hm = harmonic_mean(tail);
    int level = 0;
    for (int m = 0; m < kNumLevels; ++m)
        if (ctx.ladder_mbps[static_cast<std::size_t>(m)] <= hm) level = m;
    return level;
}

enum class MpcVariant { Fast, Robust };

namespace detail {

struct MpcSearch {
    const AbrContext* ctx;
    const QoeParams* qoe;
    double thr;  // predicted throughput used for the rollout
    int depth;
    double best_obj;
    int best_first;
    std::array<double, kNumLevels> max_q{};

    void dfs(int pos, int first, double buffer, double prev_bitrate, double obj) {
        if (pos == depth) {
            if (obj > best_obj) {
                best_obj = obj;
                best_first = first;
            }
            return;
        }
        // admissible bound: future quality at the top level, no penalties
        const double bound =
            obj + static_cast<double>(depth - pos) * qoe->q(ctx->ladder_mbps[kNumLevels - 1]);
        if (bound < best_obj - 1e-9) return;
        const auto& sizes = ctx->future_sizes_mbit[static_cast<std::size_t>(pos)];
        for (int m = 0; m < kNumLevels; ++m) {
            const double bitrate = ctx->ladder_mbps[static_cast<std::size_t>(m)];
            const double dl = sizes[static_cast<std::size_t>(m)] / thr;
            double b = buffer;
            double rebuf = 0.0;
            if (dl > b) {
                rebuf = dl - b;
                b = 0.0;
            } else {
                b -= dl;
            }
            b = std::min(b + ctx->chunk_duration_s, ctx->buffer_cap_s);
            const double step_obj =
                qoe->q(bitrate) - qoe->mu * rebuf - std::abs(qoe->q(bitrate) - qoe->q(prev_bitrate));
            dfs(pos + 1, pos == 0 ? m : first, b, bitrate, obj + step_obj);
        }
    }
};

}  // namespace detail

/// Model-predictive selector: exhaustive 6^h search (with an admissible
/// upper-bound prune) over the next h chunks, simulating buffer evolution
/// under the predicted throughput and maximizing the QoE terms. The Robust
/// variant discounts the prediction by the worst recent relative error.
/// Ties resolve to the lexicographically first (lowest-level) sequence.
inline int mpc_select(const AbrContext& ctx, MpcVariant variant, QoeParams qoe = {}) {
    if (ctx.horizon < 1) throw std::invalid_argument("mpc_select: horizon must be >= 1");
    if (ctx.horizon > 5)
        throw std::invalid_argument("mpc_select: horizon > 5 refused (6^h search)");
    if (ctx.future_sizes_mbit.empty())
        throw std::invalid_argument("mpc_select: future chunk sizes required");

    double predicted = ctx.predicted_throughput_mbps.value_or(
        ctx.last_throughputs_mbps.empty() ? 0.0 : harmonic_mean(ctx.last_throughputs_mbps));
    if (variant == MpcVariant::Robust) predicted /= (1.0 + std::max(0.0, ctx.max_pred_error));
    predicted = std::max(predicted, 1e-9);

    detail::MpcSearch search;
    search.ctx = &ctx;
    search.qoe = &qoe;
    search.thr = predicted;
    search.depth = std::min<int>(ctx.horizon, static_cast<int>(ctx.future_sizes_mbit.size()));
    search.best_obj = -std::numeric_limits<double>::infinity();
    search.best_first = 0;
    search.dfs(0, 0, ctx.buffer_level_s,
               ctx.ladder_mbps[static_cast<std::size_t>(
                   std::min(kNumLevels - 1, std::max(0, ctx.last_level)))],
               0.0);
    return search.best_first;
}

/// Translate the per-chunk engine state into baseline-selector context.
inline AbrContext make_abr_context(const BitrateEngineState& s, int horizon = 5) {
    AbrContext ctx;
    ctx.buffer_level_s = s.buffer_level_s;
    ctx.buffer_cap_s = s.buffer_cap_s;
    ctx.ladder_mbps = s.ladder_mbps;
    ctx.chunk_duration_s = s.chunk_duration_s;
    ctx.horizon = horizon;
    ctx.last_throughputs_mbps = s.recent_throughputs_mbps;
    ctx.max_pred_error = s.max_pred_error;
    ctx.last_level = 0;
    for (int m = 0; m < kNumLevels; ++m)
        if (s.ladder_mbps[static_cast<std::size_t>(m)] == s.last_bitrate_mbps) ctx.last_level = m;
    if (s.manifest) {
        const std::size_t n = s.manifest->n_chunks();
        for (std::size_t c = s.chunk_index; c < std::min(n, s.chunk_index + horizon); ++c)
            ctx.future_sizes_mbit.push_back(s.manifest->chunk_sizes(c));
    } else {
        ctx.future_sizes_mbit.push_back(s.next_chunk_sizes_mbit);
    }
    return ctx;
}

inline BitratePolicy make_bola_policy(BolaParams params = {}) {
    return [params](const BitrateEngineState& s) {
        return bola_select(make_abr_context(s, 1), params);
    };
}

inline BitratePolicy make_rate_based_policy() {
    return [](const BitrateEngineState& s) { return rate_based_select(make_abr_context(s, 1)); };
}

inline BitratePolicy make_mpc_policy(MpcVariant variant, int horizon = 5) {
    return [variant, horizon](const BitrateEngineState& s) {
        return mpc_select(make_abr_context(s, horizon), variant);
    };
}

/// Aggressive reference policy: the highest level whose bitrate the last
/// chunk's observed throughput would sustain (top level with no history).
inline BitratePolicy make_greedy_policy() {
    return [](const BitrateEngineState& s) {
        if (s.last_chunk_throughput_mbps <= 0.0) return kNumLevels - 1;
        int level = 0;
        for (int m = 0; m < kNumLevels; ++m)
            if (s.ladder_mbps[static_cast<std::size_t>(m)] <= s.last_chunk_throughput_mbps)
                level = m;
        return level;
    };
}

}  // namespace abrlab
