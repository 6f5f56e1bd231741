// Training-based acceptance criteria: predictor skill and transfer ordering
// (C6/C7), RL efficacy (C8), and the end-to-end energy direction (C9).

#include <algorithm>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>

#include "abrlab/checkpoint.hpp"
#include "abrlab/experiment.hpp"
#include "abrlab/rl.hpp"
#include "acceptance_common.hpp"

using namespace abrlab;

namespace {

// ------------------------------------------------------------ C6 / C7

struct TransferScores {
    double wt = 0.0;    // weight transfer, zero gradient steps
    double last = 0.0;  // dense head retrained
    double all = 0.0;   // everything retrained
    double ma = 0.0;    // arithmetic moving-average baseline
};

SampleSet concat_samples(const std::vector<ThroughputTrace>& traces, std::size_t h,
                         std::size_t w) {
    SampleSet all;
    all.h = h;
    all.w = w;
    for (const auto& tr : traces) {
        const SampleSet s = create_samples(tr, h, w);
        all.x_windows.insert(all.x_windows.end(), s.x_windows.begin(), s.x_windows.end());
        all.y_windows.insert(all.y_windows.end(), s.y_windows.begin(), s.y_windows.end());
        all.labels.insert(all.labels.end(), s.labels.begin(), s.labels.end());
    }
    return all;
}

ThroughputTrace domain_trace(std::uint64_t seed, double mean, double vol, double ho,
                             double dip_recovery, double duration) {
    SynthConfig cfg;
    cfg.duration_s = duration;
    cfg.mean_throughput_mbps = mean;
    cfg.noise_std_mbps = vol * mean;
    cfg.handover_rate = ho;
    cfg.handover_dip_fraction = 0.65;
    cfg.dip_recovery = dip_recovery;
    cfg.seed = seed;
    return generate_synthetic(cfg);
}

/// Full source->target transfer pipeline at the desk configuration (2x32).
TransferScores run_transfer_study(std::uint64_t seed) {
    const std::size_t h = 30, w = 30;

    std::vector<ThroughputTrace> source;
    for (int i = 0; i < 3; ++i)
        source.push_back(domain_trace(derive_seed(seed, "src" + std::to_string(i)), 8.0, 0.35,
                                      0.03, 0.88, 1100.0));
    std::vector<ThroughputTrace> target;
    for (int i = 0; i < 2; ++i)
        target.push_back(domain_trace(derive_seed(seed, "tgt" + std::to_string(i)), 3.2, 0.5,
                                      0.06, 0.92, 1100.0));

    const SampleSet source_norm = minmax_normalize(concat_samples(source, h, w));

    LstmModel model;
    model.layer_sizes = {32, 32};
    model.dropout_rate = 0.2;
    model.init(derive_seed(seed, "init"));
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 32;
    cfg.learning_rate = 0.08;
    cfg.early_stop_patience = 6;
    cfg.seed = derive_seed(seed, "train");
    train_source(model, source_norm, cfg);

    SampleSet target_raw = concat_samples(target, h, w);
    const SampleSet target_norm = minmax_normalize(target_raw, &source_norm.norm_stats);

    TrainConfig ft_cfg = cfg;
    ft_cfg.epochs = 22;
    ft_cfg.seed = derive_seed(seed, "finetune");

    TransferScores scores;
    std::vector<std::size_t> test_idx;
    auto evaluate = [&](const LstmModel& m, const std::vector<std::size_t>& idx) {
        std::vector<double> actual;
        for (std::size_t i : idx) actual.push_back(target_raw.labels[i]);
        return score(predict_samples(m, target_norm, idx), actual).r2;
    };
    {
        LstmModel wt = model;
        const FineTuneResult fr = fine_tune(wt, target_norm, FineTuneStrategy::WeightTransfer,
                                            ft_cfg);
        test_idx = fr.test_idx;
        scores.wt = evaluate(wt, fr.test_idx);
    }
    {
        LstmModel last = model;
        const FineTuneResult fr =
            fine_tune(last, target_norm, FineTuneStrategy::LastLayerOnly, ft_cfg);
        scores.last = evaluate(last, fr.test_idx);
    }
    {
        LstmModel all = model;
        const FineTuneResult fr = fine_tune(all, target_norm, FineTuneStrategy::AllLayers, ft_cfg);
        scores.all = evaluate(all, fr.test_idx);
    }
    {
        std::vector<double> pred, actual;
        for (std::size_t i : test_idx) {
            pred.push_back(baseline_predict(MovingAverageKind::ArithmeticMA,
                                            target_raw.y_windows[i]));
            actual.push_back(target_raw.labels[i]);
        }
        scores.ma = score(pred, actual).r2;
    }
    return scores;
}

// ------------------------------------------------------------ C8 / C9 stack

struct TrainedStack {
    VideoManifest manifest;
    RrcConfig rrc;
    TrainSpec spec;
    std::vector<ThroughputTrace> train_traces;
    LstmModel predictor;
    RlTrainResult rl;
};

std::vector<ThroughputTrace> scenario_mix(std::uint64_t base, int per_mean, double duration) {
    std::vector<ThroughputTrace> traces;
    int k = 0;
    for (double mean : {2.5, 5.0, 8.0})
        for (int i = 0; i < per_mean; ++i)
            traces.push_back(acc_synth(derive_seed(base, "mix" + std::to_string(k++)), mean,
                                       duration, 0.45, 0.05));
    return traces;
}

const TrainedStack& trained_stack() {
    static std::unique_ptr<TrainedStack> stack;
    if (stack) return *stack;
    stack = std::make_unique<TrainedStack>();
    stack->manifest = make_manifest(40, 8.0, derive_seed(808, "manifest"));
    stack->train_traces = scenario_mix(808, 4, 700.0);

    // slot predictor trained on the same domain the engines train in
    const SampleSet norm = minmax_normalize(concat_samples(stack->train_traces, 30, 30));
    stack->predictor.layer_sizes = {32, 32};
    stack->predictor.dropout_rate = 0.2;
    stack->predictor.init(derive_seed(808, "lstm"));
    TrainConfig pc;
    pc.epochs = 18;
    pc.early_stop_patience = 5;
    pc.seed = derive_seed(808, "lstm_train");
    train_source(stack->predictor, norm, pc);

    stack->spec.workers = 1;
    stack->spec.episodes = 350;
    stack->spec.outer_iterations = 2;
    stack->spec.seed = 808;
    stack->spec.session.slot_len_s = 30.0;
    stack->spec.session.initial_cap_s = 60.0;
    stack->spec.session.cap_min_s = 16.0;
    stack->spec.session.cap_max_s = 120.0;
    stack->spec.static_cap_s = 60.0;

    RlTrainingEnv env;
    env.manifest = &stack->manifest;
    for (const auto& tr : stack->train_traces) env.traces.push_back(&tr);
    env.rrc = stack->rrc;
    env.predictor = make_lstm_predictor(stack->predictor);
    stack->rl = train_engines(env, stack->spec);
    return *stack;
}

double binomial_tail_p(int n, int k) {
    // P(X >= k) for X ~ Bin(n, 1/2)
    double p = 0.0;
    for (int j = k; j <= n; ++j) {
        double c = 0.0;  // log C(n, j)
        for (int i = 0; i < j; ++i)
            c += std::log(static_cast<double>(n - i)) - std::log(static_cast<double>(i + 1));
        p += std::exp(c - n * std::log(2.0));
    }
    return p;
}

}  // namespace

Outcome c6_predictor_skill() {
    const TransferScores s = run_transfer_study(606);
    Outcome out;
    out.pass = s.all >= s.ma + 0.05 && s.all >= 0.5;
    out.detail = "AllLayers R2=" + acc_fmt(s.all) + " vs arithmetic-MA R2=" + acc_fmt(s.ma) +
                 " (need +0.05 margin and >=0.5)";
    return out;
}

Outcome c7_transfer_ordering() {
    int ordered = 0;
    std::ostringstream detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const TransferScores s = run_transfer_study(seed);
        const bool ok = s.all >= s.last && s.last >= s.wt;
        ordered += ok ? 1 : 0;
        detail << (seed > 1 ? " " : "") << "seed" << seed << ":" << (ok ? "ok" : "x") << "("
               << acc_fmt(s.all) << "/" << acc_fmt(s.last) << "/" << acc_fmt(s.wt) << ")";
    }
    Outcome out;
    out.pass = ordered >= 4;
    out.detail = std::to_string(ordered) + "/5 seeds ordered all>=last>=wt; " + detail.str();
    return out;
}

Outcome c8_rl_efficacy() {
    const TrainedStack& stack = trained_stack();
    RlTrainingEnv env;
    env.manifest = &stack.manifest;
    env.rrc = stack.rrc;
    env.predictor = make_lstm_predictor(stack.predictor);

    // 20 held-out traces over the same scenario mix
    std::vector<ThroughputTrace> eval_traces;
    for (int i = 0; i < 20; ++i) {
        const double mean = (i % 3 == 0) ? 2.5 : (i % 3 == 1) ? 5.0 : 8.0;
        eval_traces.push_back(acc_synth(derive_seed(909, "eval" + std::to_string(i)), mean,
                                        700.0, 0.45, 0.05));
    }

    int wins = 0, ties = 0;
    double trained_total = 0.0, random_total = 0.0, bola_total = 0.0;
    for (std::size_t i = 0; i < eval_traces.size(); ++i) {
        const ThroughputTrace& tr = eval_traces[i];
        const CascadeRun run = run_cascade(env, tr, &stack.rl.buffer_model,
                                           &stack.rl.bitrate_model, ActionMode::Greedy,
                                           ActionMode::Greedy, nullptr, stack.spec);
        const double trained = evaluate_session(env, tr, run.log, stack.spec).total_reward;

        Rng rng(derive_seed(909, "rand" + std::to_string(i)));
        BufferPolicy rnd_buf = make_random_buffer_policy(rng);
        BitratePolicy rnd_br = make_random_bitrate_policy(rng);
        const SessionLog rnd_log = run_session(stack.manifest, tr, rnd_br, rnd_buf,
                                               env.predictor, stack.spec.session);
        const double random = evaluate_session(env, tr, rnd_log, stack.spec).total_reward;

        SessionOptions bopts = stack.spec.session;
        bopts.initial_cap_s = stack.spec.static_cap_s;
        const SessionLog bola_log =
            run_session(stack.manifest, tr, make_bola_policy(), nullptr, nullptr, bopts);
        const double bola = evaluate_session(env, tr, bola_log, stack.spec).total_reward;

        trained_total += trained;
        random_total += random;
        bola_total += bola;
        if (trained > random)
            ++wins;
        else if (trained == random)
            ++ties;
    }
    const int n_eff = static_cast<int>(eval_traces.size()) - ties;
    const double p = binomial_tail_p(n_eff, wins);
    Outcome out;
    out.pass = p < 0.05 && trained_total > bola_total;
    out.detail = "wins " + std::to_string(wins) + "/" + std::to_string(n_eff) +
                 " vs random (sign test p=" + acc_fmt(p) + "), total reward " +
                 acc_fmt(trained_total) + " vs bola " + acc_fmt(bola_total) + " (random " +
                 acc_fmt(random_total) + ")";
    return out;
}

Outcome c9_energy_direction() {
    const TrainedStack& stack = trained_stack();
    RlTrainingEnv env;
    env.manifest = &stack.manifest;
    env.rrc = stack.rrc;
    env.predictor = make_lstm_predictor(stack.predictor);

    // volatile scenario set
    std::vector<ThroughputTrace> traces;
    int k = 0;
    for (double mean : {3.0, 6.0})
        for (int i = 0; i < 3; ++i)
            traces.push_back(acc_synth(derive_seed(707, "vol" + std::to_string(k++)), mean,
                                       700.0, 0.55, 0.06));

    SessionOptions base = stack.spec.session;
    base.initial_cap_s = stack.spec.static_cap_s;
    auto joules_of = [&](const SessionLog& log) {
        return energy(derive_rrc_timeline(log, stack.rrc), stack.rrc).joules_total;
    };

    double cascade_j = 0.0, greedy_j = 0.0, cascade_qoe = 0.0;
    std::map<std::string, double> baseline_qoe;
    for (const ThroughputTrace& tr : traces) {
        const CascadeRun run = run_cascade(env, tr, &stack.rl.buffer_model,
                                           &stack.rl.bitrate_model, ActionMode::Greedy,
                                           ActionMode::Greedy, nullptr, stack.spec);
        cascade_j += joules_of(run.log);
        cascade_qoe += qoe_of_log(run.log);

        const std::vector<std::pair<std::string, BitratePolicy>> baselines{
            {"greedy", make_greedy_policy()},
            {"bola", make_bola_policy()},
            {"rb", make_rate_based_policy()},
            {"fastmpc", make_mpc_policy(MpcVariant::Fast)},
            {"robustmpc", make_mpc_policy(MpcVariant::Robust)}};
        for (const auto& [name, policy] : baselines) {
            const SessionLog log = run_session(stack.manifest, tr, policy, nullptr, nullptr, base);
            baseline_qoe[name] += qoe_of_log(log);
            if (name == "greedy") greedy_j += joules_of(log);
        }
    }
    const double n = static_cast<double>(traces.size());
    cascade_qoe /= n;
    double best_qoe = -1e300;
    std::string best_name;
    for (auto& [name, q] : baseline_qoe) {
        q /= n;
        if (q > best_qoe) {
            best_qoe = q;
            best_name = name;
        }
    }
    Outcome out;
    const bool energy_ok = cascade_j <= 0.9 * greedy_j;
    const bool qoe_ok = cascade_qoe >= best_qoe - 0.15 * std::abs(best_qoe);
    out.pass = energy_ok && qoe_ok;
    out.detail = "cascade " + acc_fmt(cascade_j) + " J vs greedy " + acc_fmt(greedy_j) +
                 " J (need <=90%); mean QoE " + acc_fmt(cascade_qoe) + " vs best baseline (" +
                 best_name + ") " + acc_fmt(best_qoe) + " (need within 15%)";
    return out;
}
