#pragma once

#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "abrlab/abr.hpp"
#include "abrlab/emulator.hpp"
#include "abrlab/energy.hpp"
#include "abrlab/policy.hpp"
#include "abrlab/predictor.hpp"

namespace abrlab {

// Input scaling constants for the engine states (conditioning only).
constexpr double kThroughputScale = 10.0;  // Mbit/s
constexpr double kBufferScale = 60.0;      // s
constexpr double kBufferActions = 5;       // {-2,-1,0,+1,+2}

/// Buffer-length reward: w1*QoE plus w2 times the energy savings against the
/// BOLA baseline. The rectified form max(0, e_base - e) is the default; the
/// literal absolute difference is available behind `use_abs`.
inline double buffer_reward(double qoe_slot, double e_rl_j, double e_baseline_j, double w1,
                            double w2, bool use_abs = false) {
    const double diff = e_baseline_j - e_rl_j;
    const double term = use_abs ? std::abs(diff) : std::max(0.0, diff);
    return w1 * qoe_slot + w2 * term;
}

inline std::vector<Eigen::VectorXd> encode_buffer_state(const BufferEngineState& s) {
    Eigen::VectorXd pred(1), cap(1), recent(5);
    pred << s.predicted_throughput_mbps / kThroughputScale;
    cap << s.buffer_available_s / kBufferScale;
    for (int i = 0; i < 5; ++i)
        recent(i) = s.recent_caps_s[static_cast<std::size_t>(i)] / kBufferScale;
    return {pred, cap, recent};
}

inline std::vector<Eigen::VectorXd> encode_bitrate_state(const BitrateEngineState& s) {
    const double top = s.ladder_mbps[kNumLevels - 1];
    const double size_scale = top * s.chunk_duration_s;
    Eigen::VectorXd cap(1), thr(1), dt(1), lbr(1), buf(1), sizes(kNumLevels),
        ladder(kNumLevels);
    cap << s.predicted_cap_s / kBufferScale;
    thr << s.last_chunk_throughput_mbps / kThroughputScale;
    dt << s.last_download_time_s / kThroughputScale;
    lbr << s.last_bitrate_mbps / top;
    buf << s.buffer_level_s / kBufferScale;
    for (int i = 0; i < kNumLevels; ++i) {
        sizes(i) = s.next_chunk_sizes_mbit[static_cast<std::size_t>(i)] / size_scale;
        ladder(i) = s.ladder_mbps[static_cast<std::size_t>(i)] / top;
    }
    return {cap, thr, dt, lbr, buf, sizes, ladder};
}

inline std::vector<int> buffer_input_lengths() { return {1, 1, 5}; }
inline std::vector<int> bitrate_input_lengths() { return {1, 1, 1, 1, 1, kNumLevels, kNumLevels}; }

enum class ActionMode { Sample, Greedy };

/// Bitrate decision from the trained engine; level in [0,5].
inline int bitrate_action(const PolicyModel& model, const BitrateEngineState& s, ActionMode mode,
                          Rng* rng = nullptr) {
    const PolicyDecision d = policy_forward(model, encode_bitrate_state(s));
    if (mode == ActionMode::Greedy) return greedy_action(d.probabilities);
    if (!rng) throw std::invalid_argument("bitrate_action: sampling needs an RNG");
    return sample_action(d.probabilities, *rng);
}

inline int buffer_action(const PolicyModel& model, const BufferEngineState& s, ActionMode mode,
                         Rng* rng = nullptr) {
    const PolicyDecision d = policy_forward(model, encode_buffer_state(s));
    const int idx = mode == ActionMode::Greedy ? greedy_action(d.probabilities)
                                               : sample_action(d.probabilities, *rng);
    return idx - 2;  // index 0..4 -> action -2..+2
}

inline BitratePolicy make_rl_bitrate_policy(const PolicyModel& model, ActionMode mode,
                                            Rng* rng = nullptr) {
    return [&model, mode, rng](const BitrateEngineState& s) {
        return bitrate_action(model, s, mode, rng);
    };
}

inline BufferPolicy make_rl_buffer_policy(const PolicyModel& model, ActionMode mode,
                                          Rng* rng = nullptr) {
    return [&model, mode, rng](const BufferEngineState& s) {
        return buffer_action(model, s, mode, rng);
    };
}

inline BitratePolicy make_random_bitrate_policy(Rng& rng) {
    return [&rng](const BitrateEngineState&) {
        return static_cast<int>(rng.uniform_int(kNumLevels));
    };
}

inline BufferPolicy make_random_buffer_policy(Rng& rng) {
    return [&rng](const BufferEngineState&) { return static_cast<int>(rng.uniform_int(5)) - 2; };
}

struct TrainSpec {
    double discount = 0.9;
    double lr_actor = 1e-4;
    double lr_critic = 1e-3;
    double entropy_start = 1.0;
    double entropy_end = 0.1;
    int workers = 4;
    int episodes = 400;         // per engine per outer iteration
    int outer_iterations = 2;   // buffer block then bitrate block, repeated
    double w1 = 1.0;
    double w2 = 1.0;
    bool reward_abs = false;
    std::uint64_t seed = 1;
    int conv_filters = 128;
    int hidden = 128;
    double static_cap_s = 60.0;  // cap for the BOLA baseline and paired replays
    SessionOptions session;

    void validate() const {
        if (!(discount > 0.0 && discount < 1.0))
            throw std::invalid_argument("TrainSpec: discount must be in (0,1)");
        if (workers < 1 || episodes < 1 || outer_iterations < 1)
            throw std::invalid_argument("TrainSpec: workers/episodes must be >= 1");
    }
};

/// Linear entropy-weight schedule from entropy_start down to entropy_end.
inline double entropy_weight(const TrainSpec& spec, int episode) {
    if (spec.episodes <= 1) return spec.entropy_end;
    const double frac =
        std::min(1.0, static_cast<double>(episode) / static_cast<double>(spec.episodes - 1));
    return spec.entropy_start + (spec.entropy_end - spec.entropy_start) * frac;
}

struct RlDiverged : std::runtime_error {
    explicit RlDiverged(int episode)
        : std::runtime_error("rl training diverged (non-finite value) at episode " +
                             std::to_string(episode)),
          episode(episode) {}
    int episode;
};

/// Welford running mean/std used to put the two reward terms on one scale.
struct RunningStat {
    long long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double stddev() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0; }
    double z(double x) const {
        const double sd = stddev();
        return sd > 1e-9 ? (x - mean) / sd : x - mean;
    }
};

struct RlTrainingEnv {
    const VideoManifest* manifest = nullptr;
    std::vector<const ThroughputTrace*> traces;
    RrcConfig rrc;
    PredictorFn predictor;  // empty -> harmonic fallback
};

namespace detail {

struct SlotWindow {
    double t0 = 0.0;
    double t1 = 0.0;
    std::size_t rec0 = 0;
    std::size_t rec1 = 0;
    const SlotDecisionRecord* decision = nullptr;
};

inline std::vector<SlotWindow> slot_windows(const SessionLog& log, const SessionProbe& probe) {
    std::vector<SlotWindow> out;
    for (std::size_t k = 0; k < probe.slots.size(); ++k) {
        SlotWindow w;
        w.decision = &probe.slots[k];
        w.t0 = probe.slots[k].t_start_s;
        w.t1 = k + 1 < probe.slots.size() ? probe.slots[k + 1].t_start_s : log.wall_clock_end_s;
        w.rec0 = probe.slots[k].first_record;
        w.rec1 = k + 1 < probe.slots.size() ? probe.slots[k + 1].first_record : log.chunks.size();
        out.push_back(w);
    }
    return out;
}

/// Eq.-QoE over one slot's chunk records (self-contained N).
inline double slot_qoe(const SessionLog& log, std::size_t rec0, std::size_t rec1,
                       double mu = kRebufferPenalty) {
    const std::size_t n = rec1 - rec0;
    if (n == 0) return 0.0;
    double quality = 0.0, rebuf = 0.0, smooth = 0.0;
    for (std::size_t i = rec0; i < rec1; ++i) {
        quality += qoe_quality(log.chunks[i].bitrate_mbps);
        rebuf += log.chunks[i].rebuffer_s;
        if (i + 1 < rec1)
            smooth += std::abs(qoe_quality(log.chunks[i + 1].bitrate_mbps) -
                               qoe_quality(log.chunks[i].bitrate_mbps));
    }
    const double nd = static_cast<double>(n);
    double q = quality / nd - mu * rebuf / nd;
    if (n > 1) q -= smooth / (nd - 1.0);
    return q;
}

/// Replay one slot's trace segment under static-cap BOLA from the same
/// starting buffer/chunk, and return the joules spent inside the window.
inline double paired_bola_energy(const RlTrainingEnv& env, const ThroughputTrace& trace,
                                 const SlotWindow& w, const TrainSpec& spec) {
    if (!w.decision) return 0.0;
    SessionOptions opts = spec.session;
    opts.initial_cap_s = spec.static_cap_s;
    opts.start_wall_s = w.t0;
    opts.start_chunk = w.decision->chunk_at_start;
    opts.start_buffer_s = w.decision->buffer_at_start_s;
    opts.playback_already_started = w.decision->chunk_at_start > 0;
    opts.stop_after_wall_s = w.t1;
    if (opts.start_chunk >= env.manifest->n_chunks()) return 0.0;
    const SessionLog log =
        run_session(*env.manifest, trace, make_bola_policy(), nullptr, nullptr, opts);
    const RrcTimeline tl = derive_rrc_timeline(log, env.rrc, std::max(w.t1, log.wall_clock_end_s));
    return energy_in_window(tl, env.rrc, w.t0, w.t1);
}

}  // namespace detail

/// One cascade session plus the decision probe, under explicit action modes.
struct CascadeRun {
    SessionLog log;
    SessionProbe probe;
};

inline CascadeRun run_cascade(const RlTrainingEnv& env, const ThroughputTrace& trace,
                              const PolicyModel* buffer_model, const PolicyModel* bitrate_model,
                              ActionMode buffer_mode, ActionMode bitrate_mode, Rng* rng,
                              const TrainSpec& spec) {
    CascadeRun run;
    BufferPolicy bp =
        buffer_model ? make_rl_buffer_policy(*buffer_model, buffer_mode, rng) : BufferPolicy{};
    BitratePolicy brp = bitrate_model ? make_rl_bitrate_policy(*bitrate_model, bitrate_mode, rng)
                                      : make_bola_policy();
    run.log = run_session(*env.manifest, trace, brp, bp,
                          env.predictor ? env.predictor : make_harmonic_predictor(), spec.session,
                          &run.probe);
    return run;
}

/// Raw (un-normalized) evaluation of one session under the buffer-engine
/// reward, paired slot-by-slot against a full static-cap BOLA run on the
/// same trace. Slots fall on the fixed slot_len grid so that sessions with
/// and without a buffer engine are directly comparable.
struct CascadeEval {
    double total_reward = 0.0;
    double qoe = 0.0;
    double joules = 0.0;
    double played_s = 0.0;
    SessionLog log;
};

inline CascadeEval evaluate_session(const RlTrainingEnv& env, const ThroughputTrace& trace,
                                    const SessionLog& log, const TrainSpec& spec) {
    CascadeEval ev;
    ev.log = log;
    const RrcTimeline tl = derive_rrc_timeline(log, env.rrc);
    ev.joules = energy(tl, env.rrc).joules_total;
    ev.qoe = log.chunks.empty() ? 0.0 : qoe_of_log(log);
    ev.played_s = static_cast<double>(log.chunks.size()) * log.chunk_duration_s;

    SessionOptions opts = spec.session;
    opts.initial_cap_s = spec.static_cap_s;
    const SessionLog bola_log =
        run_session(*env.manifest, trace, make_bola_policy(), nullptr, nullptr, opts);
    const double horizon = std::max(log.wall_clock_end_s, bola_log.wall_clock_end_s);
    const RrcTimeline tl_bola = derive_rrc_timeline(bola_log, env.rrc, horizon);
    const RrcTimeline tl_self = derive_rrc_timeline(log, env.rrc, horizon);

    const double w = spec.session.slot_len_s;
    std::size_t rec = 0;
    for (double t0 = 0.0; t0 < horizon; t0 += w) {
        const double t1 = std::min(horizon, t0 + w);
        std::size_t rec1 = rec;
        while (rec1 < log.chunks.size() && log.chunks[rec1].start_s < t1) ++rec1;
        const double qoe_slot = detail::slot_qoe(log, rec, rec1);
        rec = rec1;
        const double e_self = energy_in_window(tl_self, env.rrc, t0, t1);
        const double e_base = energy_in_window(tl_bola, env.rrc, t0, t1);
        ev.total_reward += buffer_reward(qoe_slot, e_self, e_base, spec.w1, spec.w2,
                                         spec.reward_abs);
    }
    return ev;
}

struct EpisodeStat {
    double reward = 0.0;       // training reward (z-normalized terms)
    double raw_reward = 0.0;   // raw-term sum, for curves
    double critic_loss = 0.0;
    double entropy = 0.0;
    int steps = 0;
};

struct RlTrainResult {
    PolicyModel buffer_model;
    PolicyModel bitrate_model;
    std::vector<EpisodeStat> buffer_curve;
    std::vector<EpisodeStat> bitrate_curve;
};

namespace detail {

struct Rmsprop {
    std::vector<double> cache;
    double decay = 0.99;
    double eps = 1e-6;

    void apply(PolicyNet& net, const std::vector<double>& grad, double lr) {
        std::vector<double> w = net.flat();
        if (cache.empty()) cache.assign(w.size(), 0.0);
        if (grad.size() != w.size()) throw std::runtime_error("rmsprop: size mismatch");
        for (std::size_t i = 0; i < w.size(); ++i) {
            cache[i] = decay * cache[i] + (1.0 - decay) * grad[i] * grad[i];
            w[i] -= lr * grad[i] / (std::sqrt(cache[i]) + eps);
        }
        net.set_flat(w);
    }
};

inline std::vector<double> grads_flat(const NetGrads& g) {
    std::vector<double> v;
    auto put = [&](const double* p, Eigen::Index n) { v.insert(v.end(), p, p + n); };
    for (std::size_t i = 0; i < g.enc_w.size(); ++i) {
        put(g.enc_w[i].data(), g.enc_w[i].size());
        put(g.enc_b[i].data(), g.enc_b[i].size());
    }
    put(g.hid_w.data(), g.hid_w.size());
    put(g.hid_b.data(), g.hid_b.size());
    put(g.out_w.data(), g.out_w.size());
    put(g.out_b.data(), g.out_b.size());
    return v;
}

struct EpisodeGrads {
    std::vector<double> actor;
    std::vector<double> critic;
    EpisodeStat stat;
    std::vector<double> qoe_terms;     // raw slot QoE values (buffer engine)
    std::vector<double> energy_terms;  // raw slot savings (buffer engine)
};

/// Discounted-return policy-gradient step computation over one episode of
/// (inputs, action, reward) tuples against a weight snapshot.
inline EpisodeGrads policy_gradients(const PolicyModel& model,
                                     const std::vector<std::vector<Eigen::VectorXd>>& states,
                                     const std::vector<int>& actions,
                                     const std::vector<double>& rewards, double discount,
                                     double beta) {
    EpisodeGrads out;
    const std::size_t steps = states.size();
    NetGrads ga = NetGrads::zeros_like(model.actor);
    NetGrads gc = NetGrads::zeros_like(model.critic);
    std::vector<double> returns(steps);
    double running = 0.0;
    for (std::size_t t = steps; t-- > 0;) {
        running = rewards[t] + discount * running;
        returns[t] = running;
    }
    for (std::size_t t = 0; t < steps; ++t) {
        NetTape ta, tc;
        net_forward(model.actor, states[t], ta);
        net_forward(model.critic, states[t], tc);
        const Eigen::VectorXd probs = softmax(ta.out);
        const double value = tc.out(0);
        const double adv = returns[t] - value;
        // entropy of the current distribution
        double entropy = 0.0;
        for (Eigen::Index i = 0; i < probs.size(); ++i)
            if (probs(i) > 0.0) entropy -= probs(i) * std::log(probs(i));
        Eigen::VectorXd dlogits = probs;
        dlogits(actions[t]) -= 1.0;
        dlogits *= adv;
        // minimize -beta * H: dH/dz_k = -p_k (log p_k + H)
        for (Eigen::Index i = 0; i < probs.size(); ++i)
            dlogits(i) += beta * probs(i) * (std::log(std::max(probs(i), 1e-300)) + entropy);
        net_backward(model.actor, ta, dlogits, ga);
        Eigen::VectorXd dv(1);
        dv << 2.0 * (value - returns[t]);
        net_backward(model.critic, tc, dv, gc);
        out.stat.critic_loss += (value - returns[t]) * (value - returns[t]);
        out.stat.entropy += entropy;
        out.stat.reward += rewards[t];
    }
    if (steps > 0) {
        out.stat.entropy /= static_cast<double>(steps);
        out.stat.critic_loss /= static_cast<double>(steps);
    }
    out.stat.steps = static_cast<int>(steps);
    out.actor = grads_flat(ga);
    out.critic = grads_flat(gc);
    return out;
}

struct CentralStore {
    PolicyModel model;
    Rmsprop actor_opt;
    Rmsprop critic_opt;
    RunningStat qoe_stat;
    RunningStat energy_stat;
    std::vector<EpisodeStat> curve;
    std::atomic<int> next_episode{0};
    std::mutex mu;
};

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace detail

namespace detail {

/// One buffer-engine training episode: cascade rollout with sampled buffer
/// actions against the frozen (greedy) bitrate engine, slot rewards from
/// per-slot QoE and paired-BOLA energy savings, both z-normalized.
inline EpisodeGrads buffer_episode(const RlTrainingEnv& env, const TrainSpec& spec,
                                   const PolicyModel& buffer_snapshot,
                                   const PolicyModel& bitrate_snapshot,
                                   const RunningStat& qoe_stat, const RunningStat& energy_stat,
                                   const ThroughputTrace& trace, int episode) {
    Rng rng(derive_seed(spec.seed, "buffer_ep" + std::to_string(episode)));
    CascadeRun run = run_cascade(env, trace, &buffer_snapshot, &bitrate_snapshot,
                                 ActionMode::Sample, ActionMode::Greedy, &rng, spec);
    const auto windows = slot_windows(run.log, run.probe);
    const RrcTimeline tl =
        derive_rrc_timeline(run.log, env.rrc, run.log.wall_clock_end_s);

    std::vector<std::vector<Eigen::VectorXd>> states;
    std::vector<int> actions;
    std::vector<double> rewards;
    EpisodeGrads pre;
    double raw_sum = 0.0;
    for (const auto& w : windows) {
        const double qoe_slot = slot_qoe(run.log, w.rec0, w.rec1);
        const double e_rl = energy_in_window(tl, env.rrc, w.t0, w.t1);
        const double e_base = paired_bola_energy(env, trace, w, spec);
        const double diff = e_base - e_rl;
        const double term = spec.reward_abs ? std::abs(diff) : std::max(0.0, diff);
        pre.qoe_terms.push_back(qoe_slot);
        pre.energy_terms.push_back(term);
        raw_sum += buffer_reward(qoe_slot, e_rl, e_base, spec.w1, spec.w2, spec.reward_abs);
        states.push_back(encode_buffer_state(w.decision->state));
        actions.push_back(w.decision->action + 2);  // {-2..2} -> index
        rewards.push_back(spec.w1 * qoe_stat.z(qoe_slot) + spec.w2 * energy_stat.z(term));
    }
    EpisodeGrads g = policy_gradients(buffer_snapshot, states, actions, rewards, spec.discount,
                                      entropy_weight(spec, episode));
    g.qoe_terms = std::move(pre.qoe_terms);
    g.energy_terms = std::move(pre.energy_terms);
    g.stat.raw_reward = raw_sum;
    return g;
}

/// One bitrate-engine training episode: sampled bitrate actions under the
/// frozen (greedy) buffer engine; per-chunk QoE-contribution rewards.
inline EpisodeGrads bitrate_episode(const RlTrainingEnv& env, const TrainSpec& spec,
                                    const PolicyModel& buffer_snapshot,
                                    const PolicyModel& bitrate_snapshot,
                                    const ThroughputTrace& trace, int episode) {
    Rng rng(derive_seed(spec.seed, "bitrate_ep" + std::to_string(episode)));
    SessionProbe probe;
    BufferPolicy bp = make_rl_buffer_policy(buffer_snapshot, ActionMode::Greedy, nullptr);
    BitratePolicy brp = make_rl_bitrate_policy(bitrate_snapshot, ActionMode::Sample, &rng);
    const SessionLog log =
        run_session(*env.manifest, trace, brp, bp,
                    env.predictor ? env.predictor : make_harmonic_predictor(), spec.session,
                    &probe);

    std::vector<std::vector<Eigen::VectorXd>> states;
    std::vector<int> actions;
    std::vector<double> rewards;
    double raw_sum = 0.0;
    for (std::size_t i = 0; i < log.chunks.size(); ++i) {
        const auto& rec = log.chunks[i];
        const auto& dec = probe.chunk_decisions[i];
        const double smooth =
            i == 0 ? 0.0
                   : std::abs(qoe_quality(rec.bitrate_mbps) -
                              qoe_quality(log.chunks[i - 1].bitrate_mbps));
        const double r =
            qoe_quality(rec.bitrate_mbps) - kRebufferPenalty * rec.rebuffer_s - smooth;
        states.push_back(encode_bitrate_state(dec.state));
        actions.push_back(dec.action);
        rewards.push_back(r);
        raw_sum += r;
    }
    EpisodeGrads g = policy_gradients(bitrate_snapshot, states, actions, rewards, spec.discount,
                                      entropy_weight(spec, episode));
    g.stat.raw_reward = raw_sum;
    return g;
}

/// Multi-worker driver for one engine block. Workers roll out on disjoint
/// trace partitions; the central store applies gradient updates serially.
template <typename EpisodeFn>
inline void train_block(CentralStore& store, const RlTrainingEnv& env, const TrainSpec& spec,
                        EpisodeFn episode_fn) {
    store.next_episode = 0;
    auto worker_loop = [&](int worker_id) {
        for (;;) {
            const int ep = store.next_episode.fetch_add(1);
            if (ep >= spec.episodes) break;
            // disjoint traces per worker
            std::vector<const ThroughputTrace*> mine;
            for (std::size_t i = 0; i < env.traces.size(); ++i)
                if (static_cast<int>(i % static_cast<std::size_t>(spec.workers)) == worker_id)
                    mine.push_back(env.traces[i]);
            if (mine.empty()) mine = env.traces;
            const ThroughputTrace& trace =
                *mine[static_cast<std::size_t>(ep / spec.workers) % mine.size()];

            PolicyModel snapshot;
            RunningStat qoe_stat, energy_stat;
            {
                std::lock_guard<std::mutex> lock(store.mu);
                snapshot = store.model;
                qoe_stat = store.qoe_stat;
                energy_stat = store.energy_stat;
            }
            EpisodeGrads g = episode_fn(snapshot, qoe_stat, energy_stat, trace, ep);
            if (!all_finite(g.actor) || !all_finite(g.critic) ||
                !std::isfinite(g.stat.reward))
                throw RlDiverged(ep);
            {
                std::lock_guard<std::mutex> lock(store.mu);
                store.actor_opt.apply(store.model.actor, g.actor, spec.lr_actor);
                store.critic_opt.apply(store.model.critic, g.critic, spec.lr_critic);
                for (double q : g.qoe_terms) store.qoe_stat.add(q);
                for (double e : g.energy_terms) store.energy_stat.add(e);
                if (store.curve.size() <= static_cast<std::size_t>(ep))
                    store.curve.resize(static_cast<std::size_t>(ep) + 1);
                store.curve[static_cast<std::size_t>(ep)] = g.stat;
            }
        }
    };
    if (spec.workers == 1) {
        worker_loop(0);
        return;
    }
    std::vector<std::thread> threads;
    std::exception_ptr failure;
    std::mutex failure_mu;
    for (int wkr = 0; wkr < spec.workers; ++wkr)
        threads.emplace_back([&, wkr] {
            try {
                worker_loop(wkr);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (!failure) failure = std::current_exception();
                store.next_episode = spec.episodes;  // stop the others
            }
        });
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Train both decision engines against the emulator: alternating blocks
/// (buffer engine against the frozen bitrate engine, then the reverse)
/// for `outer_iterations` rounds. Deterministic with workers = 1.
inline RlTrainResult train_engines(const RlTrainingEnv& env, const TrainSpec& spec) {
    spec.validate();
    if (env.traces.empty()) throw std::invalid_argument("train_engines: no traces");
    if (!env.manifest) throw std::invalid_argument("train_engines: manifest required");

    RlTrainResult result;
    result.buffer_model = PolicyModel::make(buffer_input_lengths(), 5, spec.conv_filters,
                                            spec.hidden, derive_seed(spec.seed, "buffer"));
    result.bitrate_model = PolicyModel::make(bitrate_input_lengths(), kNumLevels,
                                             spec.conv_filters, spec.hidden,
                                             derive_seed(spec.seed, "bitrate"));

    detail::CentralStore buffer_store, bitrate_store;
    buffer_store.model = result.buffer_model;
    bitrate_store.model = result.bitrate_model;

    for (int outer = 0; outer < spec.outer_iterations; ++outer) {
        detail::train_block(
            buffer_store, env, spec,
            [&](const PolicyModel& snap, const RunningStat& qs, const RunningStat& es,
                const ThroughputTrace& tr, int ep) {
                return detail::buffer_episode(env, spec, snap, bitrate_store.model, qs, es, tr,
                                              ep);
            });
        result.buffer_curve.insert(result.buffer_curve.end(), buffer_store.curve.begin(),
                                   buffer_store.curve.end());
        buffer_store.curve.clear();

        detail::train_block(
            bitrate_store, env, spec,
            [&](const PolicyModel& snap, const RunningStat&, const RunningStat&,
                const ThroughputTrace& tr, int ep) {
                return detail::bitrate_episode(env, spec, buffer_store.model, snap, tr, ep);
            });
        result.bitrate_curve.insert(result.bitrate_curve.end(), bitrate_store.curve.begin(),
                                    bitrate_store.curve.end());
        bitrate_store.curve.clear();
    }
    result.buffer_model = buffer_store.model;
    result.bitrate_model = bitrate_store.model;
    return result;
}

}  // namespace abrlab
