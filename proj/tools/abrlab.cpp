// abrlab command-line driver: trace generation, predictor training and
// transfer, RL training, single-session simulation, and policy comparison.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "abrlab/checkpoint.hpp"
#include "abrlab/experiment.hpp"
#include "abrlab/rl.hpp"

namespace fs = std::filesystem;
using namespace abrlab;

namespace {

Config load_config_or_empty(const std::string& path) {
    if (path.empty()) {
        std::istringstream empty("");
        return Config::parse(empty);
    }
    return Config::load(path);
}

std::vector<ThroughputTrace> load_trace_dir(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") {
            // energy/session exports may share a tree with traces; skip them
            const std::string name = e.path().filename().string();
            if (name.rfind("session_", 0) == 0 || name.rfind("energy_", 0) == 0) continue;
            files.push_back(e.path().string());
        }
    std::sort(files.begin(), files.end());
    std::vector<ThroughputTrace> traces;
    for (const auto& f : files) traces.push_back(load_trace(f));
    if (traces.empty()) throw std::runtime_error("no trace CSVs under " + dir);
    return traces;
}

SampleSet build_samples(const std::vector<ThroughputTrace>& traces, std::size_t h,
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
    if (all.size() == 0) throw std::runtime_error("traces too short for H+W windows");
    return all;
}

std::vector<int> parse_hidden(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    if (out.empty()) throw std::runtime_error("--hidden needs at least one layer size");
    return out;
}

PredictionMetrics metrics_on(const LstmModel& model, const SampleSet& norm,
                             const std::vector<std::size_t>& idx) {
    std::vector<double> actual;
    for (std::size_t i : idx) actual.push_back(norm.norm_stats.denorm_throughput(norm.labels[i]));
    const std::vector<double> pred = predict_samples(model, norm, idx);
    return score(pred, actual);
}

void write_metrics_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

int cmd_gen_traces(const std::string& config_path, std::uint64_t seed, const std::string& out) {
    ExperimentConfig cfg = ExperimentConfig::from_config(load_config_or_empty(config_path));
    cfg.seed = seed;
    const auto files = generate_scenario_traces(cfg, out);
    std::cout << "wrote " << files.size() << " trace files under " << out << "/traces\n";
    return 0;
}

int cmd_train_predictor(const std::string& traces_dir, std::size_t h, std::size_t w, int epochs,
                        std::uint64_t seed, const std::string& hidden,
                        const std::string& out_ckpt, const std::string& metrics_path) {
    const auto traces = load_trace_dir(traces_dir);
    const SampleSet norm = minmax_normalize(build_samples(traces, h, w));

    LstmModel model;
    model.layer_sizes = parse_hidden(hidden);
    model.init(derive_seed(seed, "lstm_init"));
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed;
    const TrainResult res = train_source(model, norm, cfg);
    save_lstm(model, out_ckpt);

    const std::size_t cut = std::max<std::size_t>(1, norm.size() * 8 / 10);
    std::vector<std::size_t> val_idx;
    for (std::size_t i = cut; i < norm.size(); ++i) val_idx.push_back(i);
    nlohmann::json j;
    j["samples"] = norm.size();
    j["best_val_mse"] = res.best_val_mse;
    j["best_epoch"] = res.best_epoch;
    if (!val_idx.empty()) {
        const PredictionMetrics m = metrics_on(model, norm, val_idx);
        j["r2"] = m.r2;
        j["pearson"] = m.pearson;
        j["mae_mbps"] = m.mae_mbps;
    }
    if (!metrics_path.empty()) write_metrics_json(j, metrics_path);
    std::cout << "checkpoint: " << out_ckpt << "\n" << j.dump(2) << "\n";
    return 0;
}

int cmd_fine_tune(const std::string& source_ckpt, const std::string& traces_dir,
                  const std::string& strategy, int epochs, std::uint64_t seed,
                  const std::string& out_dir, const std::string& metrics_path) {
    const LstmModel source = load_lstm(source_ckpt);
    if (source.h == 0) throw std::runtime_error("source checkpoint carries no window geometry");
    const auto traces = load_trace_dir(traces_dir);
    SampleSet target = build_samples(traces, source.h, source.w);
    // target inputs are scaled with the source stats theta_S was trained in
    target = minmax_normalize(target, &source.norm_stats);

    std::vector<std::pair<std::string, FineTuneStrategy>> todo;
    if (strategy == "all") {
        todo = {{"weight_transfer", FineTuneStrategy::WeightTransfer},
                {"last_layer", FineTuneStrategy::LastLayerOnly},
                {"all_layers", FineTuneStrategy::AllLayers}};
    } else if (strategy == "weight_transfer") {
        todo = {{strategy, FineTuneStrategy::WeightTransfer}};
    } else if (strategy == "last_layer") {
        todo = {{strategy, FineTuneStrategy::LastLayerOnly}};
    } else if (strategy == "all_layers") {
        todo = {{strategy, FineTuneStrategy::AllLayers}};
    } else {
        throw std::runtime_error("--strategy must be weight_transfer|last_layer|all_layers|all");
    }

    fs::create_directories(out_dir);
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [name, strat] : todo) {
        LstmModel tuned = source;
        const FineTuneResult fr = fine_tune(tuned, target, strat, cfg);
        const std::string ckpt = (fs::path(out_dir) / (name + ".json")).string();
        save_lstm(tuned, ckpt);
        const PredictionMetrics m = metrics_on(tuned, target, fr.test_idx);
        nlohmann::json row;
        row["strategy"] = name;
        row["r2"] = m.r2;
        row["pearson"] = m.pearson;
        row["mae_mbps"] = m.mae_mbps;
        row["checkpoint"] = ckpt;
        rows.push_back(row);
        std::cout << name << ": r2=" << m.r2 << " pearson=" << m.pearson << "\n";
    }
    if (!metrics_path.empty()) write_metrics_json(rows, metrics_path);
    return 0;
}

int cmd_train_rl(const std::string& traces_dir, const std::string& manifest_path, int workers,
                 int episodes, std::uint64_t seed, bool reward_abs,
                 const std::string& predictor_ckpt, const std::string& config_path,
                 const std::string& out_dir) {
    const Config file_cfg = load_config_or_empty(config_path);
    ExperimentConfig ecfg = ExperimentConfig::from_config(file_cfg);
    TrainSpec spec = ecfg.rl;
    spec.workers = workers;
    spec.episodes = episodes;
    spec.seed = seed;
    spec.reward_abs = reward_abs;

    const auto traces = load_trace_dir(traces_dir);
    const VideoManifest manifest = load_manifest(manifest_path);
    RlTrainingEnv env;
    env.manifest = &manifest;
    for (const auto& tr : traces) env.traces.push_back(&tr);
    env.rrc = ecfg.rrc;
    LstmModel predictor_model;
    if (!predictor_ckpt.empty()) {
        predictor_model = load_lstm(predictor_ckpt);
        env.predictor = make_lstm_predictor(predictor_model);
    }

    const RlTrainResult res = train_engines(env, spec);
    fs::create_directories(out_dir);
    save_policy(res.buffer_model, (fs::path(out_dir) / "buffer.json").string());
    save_policy(res.bitrate_model, (fs::path(out_dir) / "bitrate.json").string());
    std::ofstream curve(fs::path(out_dir) / "training_curve.csv");
    curve << "engine,episode,reward,raw_reward,critic_loss,entropy\n";
    for (std::size_t i = 0; i < res.buffer_curve.size(); ++i)
        curve << "buffer," << i << ',' << res.buffer_curve[i].reward << ','
              << res.buffer_curve[i].raw_reward << ',' << res.buffer_curve[i].critic_loss << ','
              << res.buffer_curve[i].entropy << "\n";
    for (std::size_t i = 0; i < res.bitrate_curve.size(); ++i)
        curve << "bitrate," << i << ',' << res.bitrate_curve[i].reward << ','
              << res.bitrate_curve[i].raw_reward << ',' << res.bitrate_curve[i].critic_loss << ','
              << res.bitrate_curve[i].entropy << "\n";
    std::cout << "checkpoints under " << out_dir << "\n";
    return 0;
}

int cmd_simulate(const std::string& trace_path, const std::string& manifest_path,
                 const std::string& abr, const std::string& predictor_ckpt,
                 const std::string& buffer_ckpt, const std::string& bitrate_ckpt,
                 const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg = ExperimentConfig::from_config(load_config_or_empty(config_path));
    cfg.predictor_ckpt = predictor_ckpt.empty() ? cfg.predictor_ckpt : predictor_ckpt;
    cfg.buffer_ckpt = buffer_ckpt.empty() ? cfg.buffer_ckpt : buffer_ckpt;
    cfg.bitrate_ckpt = bitrate_ckpt.empty() ? cfg.bitrate_ckpt : bitrate_ckpt;

    const ThroughputTrace trace = load_trace(trace_path);
    const VideoManifest manifest = load_manifest(manifest_path);
    const PolicyBundle bundle = make_policy_bundle(abr, cfg);
    const SessionLog log = run_policy_session(bundle, manifest, trace);

    fs::create_directories(out_dir);
    save_session_csv(log, (fs::path(out_dir) / "session.csv").string());
    {
        std::ofstream sout(fs::path(out_dir) / "session.json");
        sout << session_to_json(log).dump(2) << "\n";
    }
    const RrcTimeline tl = derive_rrc_timeline(log, cfg.rrc);
    const EnergyReport rep = energy(tl, cfg.rrc);
    save_energy_csv(rep, (fs::path(out_dir) / "energy.csv").string());
    std::cout << "chunks=" << log.chunks.size() << " qoe=" << qoe_of_log(log)
              << " joules=" << rep.joules_total
              << (log.trace_exhausted ? " (trace exhausted)" : "") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trace-driven energy-aware ABR streaming laboratory"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    app.add_option("--config", config_path, "key-value config file");
    app.add_option("--seed", seed, "experiment seed");
    app.add_option("--out", out_dir, "output directory");

    auto* gen = app.add_subcommand("gen-traces", "generate the synthetic scenario grid");

    auto* trainp = app.add_subcommand("train-predictor", "train the throughput predictor");
    std::string traces_dir = "traces";
    std::size_t h_steps = 30, w_steps = 30;
    int epochs = 40;
    std::string hidden = "32,32";
    std::string ckpt_out = "predictor.json";
    std::string metrics_path;
    trainp->set_help_flag("--help", "print help");  // frees -h for --h below
    trainp->add_option("--traces", traces_dir, "directory of trace CSVs")->required();
    trainp->add_option("--h", h_steps, "history window steps");
    trainp->add_option("--w", w_steps, "future window steps");
    trainp->add_option("--epochs", epochs, "training epochs");
    trainp->add_option("--hidden", hidden, "recurrent layer sizes, e.g. 32,32 or 128,128");
    trainp->add_option("--ckpt", ckpt_out, "checkpoint output path");
    trainp->add_option("--metrics", metrics_path, "metrics JSON output path");

    auto* ft = app.add_subcommand("fine-tune", "transfer the predictor to a target domain");
    std::string source_ckpt;
    std::string strategy = "all";
    int ft_epochs = 25;
    ft->add_option("--source", source_ckpt, "source-domain checkpoint")->required();
    ft->add_option("--traces", traces_dir, "directory of target trace CSVs")->required();
    ft->add_option("--strategy", strategy,
                   "weight_transfer|last_layer|all_layers|all (all three)");
    ft->add_option("--epochs", ft_epochs, "fine-tune epochs");
    ft->add_option("--metrics", metrics_path, "metrics JSON output path");

    auto* trl = app.add_subcommand("train-rl", "train the buffer and bitrate engines");
    std::string manifest_path = "manifest.json";
    std::string predictor_ckpt;
    int workers = 4, episodes = 400;
    bool reward_abs = false;
    trl->add_option("--traces", traces_dir, "directory of training trace CSVs")->required();
    trl->add_option("--manifest", manifest_path, "video manifest JSON")->required();
    trl->add_option("--workers", workers, "rollout workers");
    trl->add_option("--episodes", episodes, "episodes per engine block");
    trl->add_flag("--reward-abs", reward_abs,
                  "use the literal |dE| reward term instead of the rectified one");
    trl->add_option("--predictor", predictor_ckpt, "LSTM checkpoint for slot predictions");

    auto* sim = app.add_subcommand("simulate", "play one session under one policy");
    std::string trace_path, abr = "bola", buffer_ckpt, bitrate_ckpt;
    sim->add_option("--trace", trace_path, "trace CSV")->required();
    sim->add_option("--manifest", manifest_path, "video manifest JSON")->required();
    sim->add_option("--abr", abr, "bola|rb|fastmpc|robustmpc|greedy|rl");
    sim->add_option("--predictor", predictor_ckpt, "LSTM checkpoint (rl policy)");
    sim->add_option("--buffer-ckpt", buffer_ckpt, "buffer engine checkpoint (rl policy)");
    sim->add_option("--bitrate-ckpt", bitrate_ckpt, "bitrate engine checkpoint (rl policy)");

    auto* cmp = app.add_subcommand("compare", "run every policy over the scenario grid");
    bool svg = false;
    cmp->add_flag("--svg", svg, "emit SVG bar charts");

    auto* rep = app.add_subcommand("report", "regenerate report files from stored logs");
    std::string from_dir;
    rep->add_option("--from", from_dir, "directory of a previous compare run");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_traces(config_path, seed, out_dir);
        if (trainp->parsed())
            return cmd_train_predictor(traces_dir, h_steps, w_steps, epochs, seed, hidden,
                                       ckpt_out, metrics_path);
        if (ft->parsed())
            return cmd_fine_tune(source_ckpt, traces_dir, strategy, ft_epochs, seed, out_dir,
                                 metrics_path);
        if (trl->parsed())
            return cmd_train_rl(traces_dir, manifest_path, workers, episodes, seed, reward_abs,
                                predictor_ckpt, config_path, out_dir);
        if (sim->parsed())
            return cmd_simulate(trace_path, manifest_path, abr, predictor_ckpt, buffer_ckpt,
                                bitrate_ckpt, config_path, out_dir);
        if (cmp->parsed()) {
            ExperimentConfig cfg =
                ExperimentConfig::from_config(load_config_or_empty(config_path));
            cfg.seed = seed;
            cfg.svg = svg;
            const ComparisonReport report = run_compare(cfg, out_dir);
            std::cout << "report under " << out_dir << " (reference policy: "
                      << report.reference_policy << ")\n";
            return 0;
        }
        if (rep->parsed()) {
            regenerate_report(from_dir.empty() ? out_dir : from_dir);
            std::cout << "report regenerated\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
