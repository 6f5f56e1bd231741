#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "abrlab/manifest.hpp"
#include "abrlab/predictor.hpp"
#include "abrlab/trace.hpp"

namespace abrlab {

constexpr double kRebufferPenalty = 4.3;  // mu of the QoE metric

/// q(R) of the QoE metric: identity on the bitrate.
inline double qoe_quality(double bitrate_mbps) { return bitrate_mbps; }

struct PlaybackState {
    double wall_clock_s = 0.0;
    double buffer_level_s = 0.0;
    double buffer_cap_s = 60.0;
    std::size_t next_chunk = 0;
    double total_rebuffer_s = 0.0;
    int rebuffer_events = 0;
    bool playback_started = false;  // flips when the first chunk completes
};

struct ChunkRecord {
    std::size_t index = 0;
    int level = 0;
    double bitrate_mbps = 0.0;
    double size_mbit = 0.0;
    double start_s = 0.0;          // wall clock at download start
    double download_time_s = 0.0;
    double rebuffer_s = 0.0;       // stall accrued while this chunk downloaded
    double sleep_before_s = 0.0;   // drain wait after a cap shrink
    double sleep_after_s = 0.0;    // wait once the buffer filled past the cap
    double throughput_seen_mbps = 0.0;  // size / download_time
    double cap_s = 0.0;            // buffer cap in force for this chunk

    double sleep_s() const { return sleep_before_s + sleep_after_s; }
};

struct TrajectorySample {
    double t_s = 0.0;
    double buffer_s = 0.0;
    double cap_s = 0.0;
};

struct SessionLog {
    std::string manifest_id;
    std::string trace_id;
    double chunk_duration_s = 8.0;
    std::vector<ChunkRecord> chunks;
    std::vector<TrajectorySample> buffer_trajectory;
    double wall_clock_end_s = 0.0;
    double buffer_end_s = 0.0;
    double startup_s = 0.0;  // first chunk's download time; playback starts after it
    bool trace_exhausted = false;
};

/// Thrown when the trace ends while bytes are still outstanding. Carries the
/// player state at the moment of failure so sessions can finalize cleanly.
struct TraceExhausted : std::runtime_error {
    explicit TraceExhausted(const PlaybackState& s)
        : std::runtime_error("trace exhausted at wall clock " + std::to_string(s.wall_clock_s)),
          state(s) {}
    PlaybackState state;
};

/// Download duration against the piecewise-constant trace from time t0:
/// solves integral of throughput dt = size_mbit.
inline double integrate_download(const ThroughputTrace& trace, double t0, double size_mbit,
                                 const PlaybackState* state_for_error = nullptr) {
    double remaining = size_mbit;
    double t = t0;
    const double sp = trace.sample_period_s;
    std::size_t k = static_cast<std::size_t>(std::max(0.0, std::floor(t / sp)));
    while (remaining > 0.0) {
        if (k >= trace.size()) {
            PlaybackState s;
            if (state_for_error) s = *state_for_error;
            s.wall_clock_s = t;
            throw TraceExhausted(s);
        }
        const double seg_end = static_cast<double>(k + 1) * sp;
        const double rate = trace.throughput_mbps[k];
        const double capacity = rate * (seg_end - t);
        if (rate > 0.0 && capacity >= remaining) {
            t += remaining / rate;
            remaining = 0.0;
        } else {
            remaining -= capacity;
            t = seg_end;
            ++k;
        }
    }
    return t - t0;
}

/// Download one chunk at `level`, advancing the player state: the buffer
/// drains at 1 s/s during the download (once playback has started), a drain
/// past zero accrues rebuffering, the finished chunk adds its duration, and
/// any overshoot past the cap is slept off before the next download.
inline ChunkRecord download_chunk(PlaybackState& state, const ThroughputTrace& trace,
                                  const VideoManifest& manifest, int level) {
    if (state.next_chunk >= manifest.n_chunks())
        throw std::out_of_range("download_chunk: no chunks left");
    if (level < 0 || level >= kNumLevels)
        throw std::out_of_range("download_chunk: level out of range");

    ChunkRecord rec;
    rec.index = state.next_chunk;
    rec.level = level;
    rec.bitrate_mbps = manifest.levels[static_cast<std::size_t>(level)].bitrate_mbps;
    rec.size_mbit = manifest.size_mbit(level, state.next_chunk);
    rec.cap_s = state.buffer_cap_s;

    // a cap shrink can leave the buffer above the cap: wait for drainage.
    // Nothing is committed to the state until the download integrates, so a
    // TraceExhausted leaves the player exactly where it was.
    if (state.buffer_level_s > state.buffer_cap_s)
        rec.sleep_before_s = state.buffer_level_s - state.buffer_cap_s;
    rec.start_s = state.wall_clock_s + rec.sleep_before_s;
    rec.download_time_s = integrate_download(trace, rec.start_s, rec.size_mbit, &state);
    rec.throughput_seen_mbps = rec.size_mbit / rec.download_time_s;
    state.wall_clock_s += rec.sleep_before_s;
    state.buffer_level_s -= rec.sleep_before_s;

    if (state.playback_started) {
        if (rec.download_time_s > state.buffer_level_s) {
            rec.rebuffer_s = rec.download_time_s - state.buffer_level_s;
            state.buffer_level_s = 0.0;
            state.total_rebuffer_s += rec.rebuffer_s;
            state.rebuffer_events += 1;
        } else {
            state.buffer_level_s -= rec.download_time_s;
        }
    }
    state.wall_clock_s += rec.download_time_s;
    state.buffer_level_s += manifest.chunk_duration_s;
    state.playback_started = true;

    if (state.buffer_level_s > state.buffer_cap_s) {
        rec.sleep_after_s = state.buffer_level_s - state.buffer_cap_s;
        state.wall_clock_s += rec.sleep_after_s;
        state.buffer_level_s -= rec.sleep_after_s;
    }
    state.next_chunk += 1;
    return rec;
}

/// State the buffer-length engine sees at a slot boundary.
struct BufferEngineState {
    double predicted_throughput_mbps = 0.0;  // slot-ahead prediction
    double buffer_available_s = 0.0;         // current buffer cap
    std::array<double, 5> recent_caps_s{};   // most recent last
    bool prediction_was_fallback = false;
};

/// State the bitrate engine (or a baseline ABR policy) sees per chunk.
struct BitrateEngineState {
    double predicted_cap_s = 0.0;        // cap decided for the current slot
    double last_chunk_throughput_mbps = 0.0;
    double last_download_time_s = 0.0;
    double last_bitrate_mbps = 0.0;
    double buffer_level_s = 0.0;
    std::array<double, kNumLevels> next_chunk_sizes_mbit{};
    std::array<double, kNumLevels> ladder_mbps{};
    // session plumbing for baseline policies
    std::size_t chunk_index = 0;
    double buffer_cap_s = 0.0;
    double chunk_duration_s = 8.0;
    std::vector<double> recent_throughputs_mbps;  // last <= 5, most recent last
    double max_pred_error = 0.0;  // max relative error of recent predictions
    const VideoManifest* manifest = nullptr;
};

using BitratePolicy = std::function<int(const BitrateEngineState&)>;
using BufferPolicy = std::function<int(const BufferEngineState&)>;  // action in {-2..+2}

/// Change the buffer cap by `action` chunks of 8 s, clamped to bounds.
inline double apply_buffer_action(double cap_s, int action, double min_cap_s, double max_cap_s,
                                  double chunk_duration_s = 8.0) {
    const double next = cap_s + chunk_duration_s * static_cast<double>(action);
    return std::min(max_cap_s, std::max(min_cap_s, next));
}

struct SessionOptions {
    double slot_len_s = 30.0;
    double initial_cap_s = 60.0;
    double cap_min_s = 16.0;
    double cap_max_s = 120.0;
    // mid-session replay support (paired baseline rollouts start from a
    // recorded player state and stop at the slot end)
    double start_wall_s = 0.0;
    std::size_t start_chunk = 0;
    double start_buffer_s = 0.0;
    bool playback_already_started = false;
    double stop_after_wall_s = std::numeric_limits<double>::infinity();
};

/// Per-decision records used by the RL trainer; filled when a probe is given.
struct SlotDecisionRecord {
    BufferEngineState state;
    int action = 0;         // {-2..+2}; 0 when no buffer policy runs
    double t_start_s = 0.0;
    double buffer_at_start_s = 0.0;
    std::size_t chunk_at_start = 0;
    std::size_t first_record = 0;  // index into log.chunks
};

struct ChunkDecisionRecord {
    BitrateEngineState state;
    int action = 0;
};

struct SessionProbe {
    std::vector<SlotDecisionRecord> slots;
    std::vector<ChunkDecisionRecord> chunk_decisions;
};

/// Play the whole video against the trace. At each slot boundary the
/// predictor and buffer policy re-decide the buffer cap; before each chunk
/// the bitrate policy picks a level. A missing buffer policy leaves the cap
/// static (classic DASH loop). Terminates when the chunks are done or the
/// trace runs out; the log is complete and self-consistent either way.
inline SessionLog run_session(const VideoManifest& manifest, const ThroughputTrace& trace,
                              const BitratePolicy& bitrate_policy,
                              const BufferPolicy& buffer_policy = nullptr,
                              const PredictorFn& predictor = nullptr,
                              const SessionOptions& opts = {}, SessionProbe* probe = nullptr) {
    manifest.validate();
    if (!bitrate_policy) throw std::invalid_argument("run_session: bitrate_policy required");
    if (opts.slot_len_s <= 0) throw std::invalid_argument("run_session: slot_len must be > 0");

    SessionLog log;
    log.manifest_id = manifest.id;
    log.trace_id = trace.id;
    log.chunk_duration_s = manifest.chunk_duration_s;

    PlaybackState state;
    state.buffer_cap_s = opts.initial_cap_s;
    state.wall_clock_s = opts.start_wall_s;
    state.next_chunk = opts.start_chunk;
    state.buffer_level_s = opts.start_buffer_s;
    state.playback_started = opts.playback_already_started;
    log.buffer_trajectory.push_back(
        {state.wall_clock_s, std::min(state.buffer_level_s, state.buffer_cap_s),
         state.buffer_cap_s});

    const PredictorFn pred = predictor ? predictor : make_harmonic_predictor();
    std::array<double, 5> recent_caps;
    recent_caps.fill(opts.initial_cap_s);
    double next_boundary = opts.start_wall_s;

    std::vector<double> recent_thr;       // last <= 5 chunk throughputs
    std::vector<double> recent_err;       // last <= 5 relative prediction errors
    double last_bitrate = 0.0, last_dt = 0.0, last_thr = 0.0;

    while (state.next_chunk < manifest.n_chunks() &&
           state.wall_clock_s < opts.stop_after_wall_s) {
        if (buffer_policy && state.wall_clock_s >= next_boundary) {
            const std::size_t step =
                std::min(trace.size(), static_cast<std::size_t>(std::floor(
                                           state.wall_clock_s / trace.sample_period_s)));
            const Prediction p = pred(trace, step);
            BufferEngineState bs;
            bs.predicted_throughput_mbps = p.mbps;
            bs.buffer_available_s = state.buffer_cap_s;
            bs.recent_caps_s = recent_caps;
            bs.prediction_was_fallback = p.used_fallback;
            const int action = buffer_policy(bs);
            if (probe) {
                SlotDecisionRecord sd;
                sd.state = bs;
                sd.action = action;
                sd.t_start_s = state.wall_clock_s;
                sd.buffer_at_start_s = state.buffer_level_s;
                sd.chunk_at_start = state.next_chunk;
                sd.first_record = log.chunks.size();
                probe->slots.push_back(sd);
            }
            state.buffer_cap_s = apply_buffer_action(state.buffer_cap_s, action, opts.cap_min_s,
                                                     opts.cap_max_s, manifest.chunk_duration_s);
            for (std::size_t i = 0; i + 1 < recent_caps.size(); ++i)
                recent_caps[i] = recent_caps[i + 1];
            recent_caps.back() = state.buffer_cap_s;
            // one decision per crossing; a download longer than a slot skips
            // the boundaries it covered
            next_boundary =
                (std::floor(state.wall_clock_s / opts.slot_len_s) + 1.0) * opts.slot_len_s;
        }

        BitrateEngineState cs;
        cs.predicted_cap_s = state.buffer_cap_s;
        cs.last_chunk_throughput_mbps = last_thr;
        cs.last_download_time_s = last_dt;
        cs.last_bitrate_mbps = last_bitrate;
        cs.buffer_level_s = state.buffer_level_s;
        cs.next_chunk_sizes_mbit = manifest.chunk_sizes(state.next_chunk);
        cs.ladder_mbps = manifest.bitrates();
        cs.chunk_index = state.next_chunk;
        cs.buffer_cap_s = state.buffer_cap_s;
        cs.chunk_duration_s = manifest.chunk_duration_s;
        cs.recent_throughputs_mbps = recent_thr;
        for (double e : recent_err) cs.max_pred_error = std::max(cs.max_pred_error, e);
        cs.manifest = &manifest;

        int level = bitrate_policy(cs);
        level = std::min(kNumLevels - 1, std::max(0, level));
        if (probe) probe->chunk_decisions.push_back({cs, level});

        // harmonic estimate whose error Robust-MPC discounts by
        const double est =
            recent_thr.empty() ? 0.0 : harmonic_mean(recent_thr);

        const double buffer_before = state.buffer_level_s;
        ChunkRecord rec;
        try {
            rec = download_chunk(state, trace, manifest, level);
        } catch (const TraceExhausted&) {
            log.trace_exhausted = true;
            break;
        }
        if (rec.index == 0) log.startup_s = rec.download_time_s;
        log.buffer_trajectory.push_back(
            {rec.start_s, buffer_before - rec.sleep_before_s, rec.cap_s});
        if (rec.rebuffer_s > 0.0)
            log.buffer_trajectory.push_back(
                {rec.start_s + (rec.download_time_s - rec.rebuffer_s), 0.0, rec.cap_s});
        log.buffer_trajectory.push_back({state.wall_clock_s, state.buffer_level_s, rec.cap_s});

        if (recent_thr.size() >= 5) recent_thr.erase(recent_thr.begin());
        recent_thr.push_back(rec.throughput_seen_mbps);
        if (est > 0.0) {
            if (recent_err.size() >= 5) recent_err.erase(recent_err.begin());
            recent_err.push_back(std::abs(est - rec.throughput_seen_mbps) /
                                 rec.throughput_seen_mbps);
        }
        last_thr = rec.throughput_seen_mbps;
        last_dt = rec.download_time_s;
        last_bitrate = rec.bitrate_mbps;
        log.chunks.push_back(rec);
    }

    log.wall_clock_end_s = state.wall_clock_s;
    log.buffer_end_s = state.buffer_level_s;
    return log;
}

/// QoE of a whole session per the bitrate/rebuffer/smoothness metric:
/// (1/N) sum q(R_i) - (mu/N) sum delta_i - (1/(N-1)) sum |q(R_{i+1})-q(R_i)|.
inline double qoe_of_log(const SessionLog& log, double mu = kRebufferPenalty) {
    const std::size_t n = log.chunks.size();
    if (n == 0) throw std::invalid_argument("qoe_of_log: empty log");
    double quality = 0.0, rebuf = 0.0, smooth = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        quality += qoe_quality(log.chunks[i].bitrate_mbps);
        rebuf += log.chunks[i].rebuffer_s;
        if (i + 1 < n)
            smooth += std::abs(qoe_quality(log.chunks[i + 1].bitrate_mbps) -
                               qoe_quality(log.chunks[i].bitrate_mbps));
    }
    const double nd = static_cast<double>(n);
    double q = quality / nd - mu * rebuf / nd;
    if (n > 1) q -= smooth / (nd - 1.0);
    return q;
}

struct SessionLedger {
    double wall_end_s = 0.0;
    double buffer_end_s = 0.0;
    double startup_s = 0.0;
    double total_rebuffer_s = 0.0;
    double downloaded_video_s = 0.0;
    double played_s = 0.0;       // wall_end - start - startup - rebuffer
    double residual_s = 0.0;     // downloaded - (played + buffer_end)
    bool consistent = false;     // per-record bitwise re-derivation succeeded
};

/// Re-derive the session from its chunk records with the same update rules
/// the emulator uses and check the accounting identities: per-chunk rebuffer
/// and sleeps reproduce bitwise, and downloaded video seconds equal played
/// seconds plus the leftover buffer.
inline SessionLedger replay_ledger(const SessionLog& log) {
    SessionLedger led;
    if (log.chunks.empty()) {
        led.consistent =
            log.wall_clock_end_s == 0.0 && log.buffer_end_s == 0.0;  // nothing happened
        return led;
    }
    double wall = log.chunks.front().start_s;
    double buffer = 0.0;
    bool started = false;
    bool ok = true;
    for (const ChunkRecord& rec : log.chunks) {
        double sleep_before = 0.0;
        if (buffer > rec.cap_s) {
            sleep_before = buffer - rec.cap_s;
            wall += sleep_before;
            buffer -= sleep_before;
        }
        ok = ok && sleep_before == rec.sleep_before_s && wall == rec.start_s;
        double rebuf = 0.0;
        if (started) {
            if (rec.download_time_s > buffer) {
                rebuf = rec.download_time_s - buffer;
                buffer = 0.0;
            } else {
                buffer -= rec.download_time_s;
            }
        }
        ok = ok && rebuf == rec.rebuffer_s;
        ok = ok && rec.throughput_seen_mbps == rec.size_mbit / rec.download_time_s;
        wall += rec.download_time_s;
        buffer += log.chunk_duration_s;
        started = true;
        double sleep_after = 0.0;
        if (buffer > rec.cap_s) {
            sleep_after = buffer - rec.cap_s;
            wall += sleep_after;
            buffer -= sleep_after;
        }
        ok = ok && sleep_after == rec.sleep_after_s;
        led.total_rebuffer_s += rebuf;
    }
    ok = ok && wall == log.wall_clock_end_s && buffer == log.buffer_end_s;
    led.wall_end_s = wall;
    led.buffer_end_s = buffer;
    led.startup_s = log.chunks.front().download_time_s;
    led.downloaded_video_s =
        static_cast<double>(log.chunks.size()) * log.chunk_duration_s;
    led.played_s = wall - log.chunks.front().start_s - led.startup_s - led.total_rebuffer_s;
    led.residual_s = led.downloaded_video_s - (led.played_s + led.buffer_end_s);
    led.consistent = ok;
    return led;
}

/// SessionLog CSV: one row per chunk.
inline void save_session_csv(const SessionLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write session log: " + path);
    out << "index,level,bitrate_mbps,size_mbit,start_s,download_time_s,rebuffer_s,sleep_s,"
           "throughput_seen_mbps,cap_s\n";
    for (const auto& c : log.chunks) {
        out << c.index << ',' << c.level << ',' << detail::fmt_g17(c.bitrate_mbps) << ','
            << detail::fmt_g17(c.size_mbit) << ',' << detail::fmt_g17(c.start_s) << ','
            << detail::fmt_g17(c.download_time_s) << ',' << detail::fmt_g17(c.rebuffer_s) << ','
            << detail::fmt_g17(c.sleep_s()) << ',' << detail::fmt_g17(c.throughput_seen_mbps)
            << ',' << detail::fmt_g17(c.cap_s) << "\n";
    }
}

}  // namespace abrlab
