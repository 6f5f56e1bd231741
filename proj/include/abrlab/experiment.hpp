#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "abrlab/abr.hpp"
#include "abrlab/checkpoint.hpp"
#include "abrlab/config.hpp"
#include "abrlab/emulator.hpp"
#include "abrlab/energy.hpp"
#include "abrlab/rl.hpp"

namespace abrlab {

/// One synthetic-trace scenario cell: the grid mirrors the load / speed /
/// obstruction axes as {mean throughput, volatility, handover rate}.
struct Scenario {
    std::string name;
    double mean_mbps = 4.0;
    double volatility = 0.3;     // noise std as a fraction of the mean
    double handover_rate = 0.02; // events/s
};

struct ExperimentConfig {
    std::vector<double> mean_mbps{2.0, 4.0, 8.0};
    std::vector<double> volatility{0.15, 0.35, 0.55};
    std::vector<double> handover_rate{0.005, 0.02, 0.06};
    int traces_per_scenario = 2;
    double duration_s = 480.0;
    double sample_period_s = 1.0;
    std::size_t n_chunks = 45;
    double chunk_duration_s = 8.0;
    std::vector<std::string> policies{"bola", "rb", "fastmpc", "robustmpc"};
    RrcConfig rrc;
    TrainSpec rl;
    std::uint64_t seed = 1;
    std::string predictor_ckpt;
    std::string buffer_ckpt;
    std::string bitrate_ckpt;
    bool svg = false;

    static ExperimentConfig from_config(const Config& c) {
        ExperimentConfig e;
        e.mean_mbps = c.get_double_list("scenarios.mean_mbps", e.mean_mbps);
        e.volatility = c.get_double_list("scenarios.volatility", e.volatility);
        e.handover_rate = c.get_double_list("scenarios.handover_rate", e.handover_rate);
        e.traces_per_scenario =
            static_cast<int>(c.get_int("scenarios.traces_per_scenario", e.traces_per_scenario));
        e.duration_s = c.get_double("scenarios.duration_s", e.duration_s);
        e.sample_period_s = c.get_double("scenarios.sample_period_s", e.sample_period_s);
        e.n_chunks = static_cast<std::size_t>(c.get_int("manifest.n_chunks",
                                                        static_cast<long>(e.n_chunks)));
        e.chunk_duration_s = c.get_double("manifest.chunk_duration_s", e.chunk_duration_s);
        e.policies = c.get_string_list("compare.policies", e.policies);
        e.rrc = RrcConfig::from_config(c);
        e.rl.workers = static_cast<int>(c.get_int("rl.workers", e.rl.workers));
        e.rl.episodes = static_cast<int>(c.get_int("rl.episodes", e.rl.episodes));
        e.rl.outer_iterations =
            static_cast<int>(c.get_int("rl.outer_iterations", e.rl.outer_iterations));
        e.rl.conv_filters = static_cast<int>(c.get_int("rl.conv_filters", e.rl.conv_filters));
        e.rl.hidden = static_cast<int>(c.get_int("rl.hidden", e.rl.hidden));
        e.rl.reward_abs = c.get_bool("rl.reward_abs", e.rl.reward_abs);
        e.rl.w1 = c.get_double("rl.w1", e.rl.w1);
        e.rl.w2 = c.get_double("rl.w2", e.rl.w2);
        e.rl.static_cap_s = c.get_double("rl.static_cap_s", e.rl.static_cap_s);
        e.rl.session.slot_len_s = c.get_double("rl.slot_len_s", e.rl.session.slot_len_s);
        e.rl.session.initial_cap_s = c.get_double("rl.initial_cap_s", e.rl.session.initial_cap_s);
        e.rl.session.cap_min_s = c.get_double("rl.cap_min_s", e.rl.session.cap_min_s);
        e.rl.session.cap_max_s = c.get_double("rl.cap_max_s", e.rl.session.cap_max_s);
        e.predictor_ckpt = c.get_string("paths.predictor_ckpt", "");
        e.buffer_ckpt = c.get_string("paths.buffer_ckpt", "");
        e.bitrate_ckpt = c.get_string("paths.bitrate_ckpt", "");
        return e;
    }

    std::vector<Scenario> scenarios() const {
        std::vector<Scenario> out;
        for (double m : mean_mbps)
            for (double v : volatility)
                for (double h : handover_rate) {
                    Scenario s;
                    std::ostringstream name;
                    name << "m" << m << "_v" << v << "_h" << h;
                    s.name = name.str();
                    s.mean_mbps = m;
                    s.volatility = v;
                    s.handover_rate = h;
                    out.push_back(s);
                }
        return out;
    }

    SynthConfig synth_for(const Scenario& s, int trace_idx) const {
        SynthConfig cfg;
        cfg.duration_s = duration_s;
        cfg.sample_period_s = sample_period_s;
        cfg.mean_throughput_mbps = s.mean_mbps;
        cfg.noise_std_mbps = s.volatility * s.mean_mbps;
        cfg.handover_rate = s.handover_rate;
        cfg.seed = derive_seed(seed, "trace/" + s.name + "/" + std::to_string(trace_idx));
        cfg.id = s.name + "_t" + std::to_string(trace_idx);
        return cfg;
    }
};

/// Owning bundle: the callables capture the models held here.
struct PolicyBundle {
    std::string name;
    BitratePolicy bitrate;
    BufferPolicy buffer;     // empty for static-cap baselines
    PredictorFn predictor;   // empty -> harmonic fallback
    std::shared_ptr<PolicyModel> buffer_model;
    std::shared_ptr<PolicyModel> bitrate_model;
    std::shared_ptr<LstmModel> predictor_model;
    SessionOptions session;
};

inline PolicyBundle make_policy_bundle(const std::string& name, const ExperimentConfig& cfg) {
    PolicyBundle b;
    b.name = name;
    b.session = cfg.rl.session;
    b.session.initial_cap_s = cfg.rl.static_cap_s;
    if (name == "bola") {
        b.bitrate = make_bola_policy();
    } else if (name == "rb") {
        b.bitrate = make_rate_based_policy();
    } else if (name == "fastmpc") {
        b.bitrate = make_mpc_policy(MpcVariant::Fast);
    } else if (name == "robustmpc") {
        b.bitrate = make_mpc_policy(MpcVariant::Robust);
    } else if (name == "greedy") {
        b.bitrate = make_greedy_policy();
    } else if (name == "rl") {
        if (cfg.buffer_ckpt.empty() || cfg.bitrate_ckpt.empty())
            throw std::runtime_error(
                "policy 'rl' needs buffer and bitrate checkpoints (paths.buffer_ckpt / "
                "paths.bitrate_ckpt)");
        b.buffer_model = std::make_shared<PolicyModel>(load_policy(cfg.buffer_ckpt));
        b.bitrate_model = std::make_shared<PolicyModel>(load_policy(cfg.bitrate_ckpt));
        b.bitrate = make_rl_bitrate_policy(*b.bitrate_model, ActionMode::Greedy);
        b.buffer = make_rl_buffer_policy(*b.buffer_model, ActionMode::Greedy);
        if (!cfg.predictor_ckpt.empty()) {
            b.predictor_model = std::make_shared<LstmModel>(load_lstm(cfg.predictor_ckpt));
            b.predictor = make_lstm_predictor(*b.predictor_model);
        }
        b.session.initial_cap_s = cfg.rl.session.initial_cap_s;
    } else {
        throw std::runtime_error("unknown policy: " + name +
                                 " (expected bola|rb|fastmpc|robustmpc|greedy|rl)");
    }
    return b;
}

// ---- full-fidelity session JSON (report regeneration source) ----

inline nlohmann::json session_to_json(const SessionLog& log) {
    nlohmann::json j;
    j["manifest_id"] = log.manifest_id;
    j["trace_id"] = log.trace_id;
    j["chunk_duration_s"] = log.chunk_duration_s;
    j["wall_clock_end_s"] = log.wall_clock_end_s;
    j["buffer_end_s"] = log.buffer_end_s;
    j["startup_s"] = log.startup_s;
    j["trace_exhausted"] = log.trace_exhausted;
    for (const auto& c : log.chunks) {
        nlohmann::json jc;
        jc["index"] = c.index;
        jc["level"] = c.level;
        jc["bitrate_mbps"] = c.bitrate_mbps;
        jc["size_mbit"] = c.size_mbit;
        jc["start_s"] = c.start_s;
        jc["download_time_s"] = c.download_time_s;
        jc["rebuffer_s"] = c.rebuffer_s;
        jc["sleep_before_s"] = c.sleep_before_s;
        jc["sleep_after_s"] = c.sleep_after_s;
        jc["throughput_seen_mbps"] = c.throughput_seen_mbps;
        jc["cap_s"] = c.cap_s;
        j["chunks"].push_back(jc);
    }
    return j;
}

inline SessionLog session_from_json(const nlohmann::json& j) {
    SessionLog log;
    log.manifest_id = j.at("manifest_id").get<std::string>();
    log.trace_id = j.at("trace_id").get<std::string>();
    log.chunk_duration_s = j.at("chunk_duration_s").get<double>();
    log.wall_clock_end_s = j.at("wall_clock_end_s").get<double>();
    log.buffer_end_s = j.at("buffer_end_s").get<double>();
    log.startup_s = j.at("startup_s").get<double>();
    log.trace_exhausted = j.at("trace_exhausted").get<bool>();
    if (j.contains("chunks"))
        for (const auto& jc : j.at("chunks")) {
            ChunkRecord c;
            c.index = jc.at("index").get<std::size_t>();
            c.level = jc.at("level").get<int>();
            c.bitrate_mbps = jc.at("bitrate_mbps").get<double>();
            c.size_mbit = jc.at("size_mbit").get<double>();
            c.start_s = jc.at("start_s").get<double>();
            c.download_time_s = jc.at("download_time_s").get<double>();
            c.rebuffer_s = jc.at("rebuffer_s").get<double>();
            c.sleep_before_s = jc.at("sleep_before_s").get<double>();
            c.sleep_after_s = jc.at("sleep_after_s").get<double>();
            c.throughput_seen_mbps = jc.at("throughput_seen_mbps").get<double>();
            c.cap_s = jc.at("cap_s").get<double>();
            log.chunks.push_back(c);
        }
    return log;
}

// ---- comparison rows and report emission ----

struct CellResult {
    std::string policy;
    std::string scenario;
    int sessions = 0;
    double mean_qoe = 0.0;
    double mean_bitrate_mbps = 0.0;
    double mean_bitrate_variation = 0.0;  // (1/(N-1)) sum |dR| averaged over sessions
    double mean_rebuffer_s = 0.0;
    double mean_rebuffer_events = 0.0;
    double mean_joules = 0.0;
    double mean_played_s = 0.0;
    bool failed = false;
    std::string error;
};

struct ComparisonReport {
    std::vector<CellResult> cells;            // one per (policy, scenario)
    std::vector<std::string> policies;
    std::vector<std::string> scenarios;
    std::string reference_policy;             // max mean energy across the report
    std::map<std::string, double> policy_joules;
    std::map<std::string, double> policy_qoe;
    std::map<std::string, double> policy_played_s;
    std::map<std::string, double> policy_extra_playtime_s;
};

/// Per-session statistics from a log (single computation path: QoE comes
/// from qoe_of_log, energy from the timeline walk).
struct SessionStats {
    double qoe = 0.0;
    double mean_bitrate = 0.0;
    double bitrate_variation = 0.0;
    double rebuffer_s = 0.0;
    int rebuffer_events = 0;
    double joules = 0.0;
    double played_s = 0.0;
};

inline SessionStats session_stats(const SessionLog& log, const RrcConfig& rrc) {
    SessionStats st;
    if (log.chunks.empty()) return st;
    st.qoe = qoe_of_log(log);
    double smooth = 0.0;
    for (std::size_t i = 0; i < log.chunks.size(); ++i) {
        st.mean_bitrate += log.chunks[i].bitrate_mbps;
        st.rebuffer_s += log.chunks[i].rebuffer_s;
        if (log.chunks[i].rebuffer_s > 0.0) st.rebuffer_events += 1;
        if (i + 1 < log.chunks.size())
            smooth += std::abs(log.chunks[i + 1].bitrate_mbps - log.chunks[i].bitrate_mbps);
    }
    st.mean_bitrate /= static_cast<double>(log.chunks.size());
    if (log.chunks.size() > 1)
        st.bitrate_variation = smooth / static_cast<double>(log.chunks.size() - 1);
    st.joules = energy(derive_rrc_timeline(log, rrc), rrc).joules_total;
    st.played_s = static_cast<double>(log.chunks.size()) * log.chunk_duration_s;
    return st;
}

inline ComparisonReport assemble_report(const std::vector<CellResult>& cells,
                                        const std::vector<std::string>& policies,
                                        const std::vector<std::string>& scenarios) {
    ComparisonReport rep;
    rep.cells = cells;
    rep.policies = policies;
    rep.scenarios = scenarios;
    for (const auto& p : policies) {
        double joules = 0.0, qoe = 0.0, played = 0.0;
        int n = 0;
        for (const auto& c : cells)
            if (c.policy == p && !c.failed) {
                joules += c.mean_joules;
                qoe += c.mean_qoe;
                played += c.mean_played_s;
                ++n;
            }
        if (n > 0) {
            rep.policy_joules[p] = joules / n;
            rep.policy_qoe[p] = qoe / n;
            rep.policy_played_s[p] = played / n;
        }
    }
    // reference = the most energy-hungry policy in this report
    double emax = -1.0;
    for (const auto& [p, e] : rep.policy_joules)
        if (e > emax) {
            emax = e;
            rep.reference_policy = p;
        }
    if (emax > 0.0)
        for (const auto& [p, e] : rep.policy_joules)
            rep.policy_extra_playtime_s[p] =
                extra_playtime(emax, e, rep.policy_played_s.at(p));
    return rep;
}

namespace detail {

inline std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace detail

inline void write_report_csv(const ComparisonReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "policy,scenario,sessions,mean_qoe,mean_bitrate_mbps,mean_bitrate_variation,"
           "mean_rebuffer_s,mean_rebuffer_events,mean_joules,mean_played_s,status\n";
    for (const auto& c : rep.cells) {
        out << c.policy << ',' << c.scenario << ',' << c.sessions << ','
            << detail::fmt_g17(c.mean_qoe) << ',' << detail::fmt_g17(c.mean_bitrate_mbps) << ','
            << detail::fmt_g17(c.mean_bitrate_variation) << ','
            << detail::fmt_g17(c.mean_rebuffer_s) << ','
            << detail::fmt_g17(c.mean_rebuffer_events) << ',' << detail::fmt_g17(c.mean_joules)
            << ',' << detail::fmt_g17(c.mean_played_s) << ','
            << (c.failed ? "failed: " + c.error : "ok") << "\n";
    }
}

inline void write_summary_csv(const ComparisonReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write summary: " + path);
    out << "policy,mean_qoe,mean_joules,mean_played_s,extra_playtime_s,reference\n";
    for (const auto& p : rep.policies) {
        if (!rep.policy_joules.count(p)) continue;
        out << p << ',' << detail::fmt_g17(rep.policy_qoe.at(p)) << ','
            << detail::fmt_g17(rep.policy_joules.at(p)) << ','
            << detail::fmt_g17(rep.policy_played_s.at(p)) << ','
            << detail::fmt_g17(rep.policy_extra_playtime_s.at(p)) << ','
            << (p == rep.reference_policy ? "yes" : "no") << "\n";
    }
}

inline void write_report_markdown(const ComparisonReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "# Policy comparison\n\n";
    out << "Reference (highest energy): **" << rep.reference_policy << "**\n\n";
    out << "| policy | mean QoE | joules | played s | extra playtime s |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& p : rep.policies) {
        if (!rep.policy_joules.count(p)) continue;
        out << "| " << p << " | " << detail::fmt_num(rep.policy_qoe.at(p)) << " | "
            << detail::fmt_num(rep.policy_joules.at(p)) << " | "
            << detail::fmt_num(rep.policy_played_s.at(p)) << " | "
            << detail::fmt_num(rep.policy_extra_playtime_s.at(p)) << " |\n";
    }
    out << "\n## Per-scenario breakdown\n\n";
    out << "| policy | scenario | QoE | avg bitrate | bitrate var | rebuffer s | rebuffer events "
           "| joules |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& c : rep.cells) {
        out << "| " << c.policy << " | " << c.scenario << " | ";
        if (c.failed)
            out << "failed: " << c.error << " | | | | | |\n";
        else
            out << detail::fmt_num(c.mean_qoe) << " | " << detail::fmt_num(c.mean_bitrate_mbps)
                << " | " << detail::fmt_num(c.mean_bitrate_variation) << " | "
                << detail::fmt_num(c.mean_rebuffer_s) << " | "
                << detail::fmt_num(c.mean_rebuffer_events) << " | "
                << detail::fmt_num(c.mean_joules) << " |\n";
    }
}

// ---- compare orchestration ----

/// Generate every scenario's trace files under dir/traces/<scenario>/.
inline std::vector<std::string> generate_scenario_traces(const ExperimentConfig& cfg,
                                                         const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> written;
    for (const Scenario& sc : cfg.scenarios()) {
        const fs::path dir = fs::path(out_dir) / "traces" / sc.name;
        fs::create_directories(dir);
        for (int k = 0; k < cfg.traces_per_scenario; ++k) {
            const ThroughputTrace tr = generate_synthetic(cfg.synth_for(sc, k));
            const std::string path = (dir / ("trace_" + std::to_string(k) + ".csv")).string();
            save_trace(tr, path);
            written.push_back(path);
        }
    }
    return written;
}

/// Run one policy over one trace; deterministic given its inputs.
inline SessionLog run_policy_session(const PolicyBundle& bundle, const VideoManifest& manifest,
                                     const ThroughputTrace& trace) {
    return run_session(manifest, trace, bundle.bitrate, bundle.buffer, bundle.predictor,
                       bundle.session);
}

/// Execute the whole grid: traces, per-cell sessions (stored as CSV and
/// full-fidelity JSON), run.json, and the report files. The report itself is
/// always rebuilt from the stored logs so `report` regeneration is
/// byte-identical. Per-cell failures are annotated and the run continues.
inline ComparisonReport run_compare(const ExperimentConfig& cfg, const std::string& out_dir);

/// Rebuild rows and report files from a previous run directory.
inline ComparisonReport regenerate_report(const std::string& out_dir);

inline void write_svg_bars(const std::string& path, const std::string& title,
                           const std::vector<std::string>& labels,
                           const std::vector<double>& values);

namespace detail {

inline CellResult cell_from_logs(const std::string& policy, const std::string& scenario,
                                 const std::vector<SessionLog>& logs, const RrcConfig& rrc) {
    CellResult cell;
    cell.policy = policy;
    cell.scenario = scenario;
    cell.sessions = static_cast<int>(logs.size());
    for (const SessionLog& log : logs) {
        const SessionStats st = session_stats(log, rrc);
        cell.mean_qoe += st.qoe;
        cell.mean_bitrate_mbps += st.mean_bitrate;
        cell.mean_bitrate_variation += st.bitrate_variation;
        cell.mean_rebuffer_s += st.rebuffer_s;
        cell.mean_rebuffer_events += st.rebuffer_events;
        cell.mean_joules += st.joules;
        cell.mean_played_s += st.played_s;
    }
    if (!logs.empty()) {
        const double n = static_cast<double>(logs.size());
        cell.mean_qoe /= n;
        cell.mean_bitrate_mbps /= n;
        cell.mean_bitrate_variation /= n;
        cell.mean_rebuffer_s /= n;
        cell.mean_rebuffer_events /= n;
        cell.mean_joules /= n;
        cell.mean_played_s /= n;
    }
    return cell;
}

inline void emit_report_files(const ComparisonReport& rep, const std::string& out_dir,
                              bool svg) {
    namespace fs = std::filesystem;
    write_report_csv(rep, (fs::path(out_dir) / "report.csv").string());
    write_summary_csv(rep, (fs::path(out_dir) / "summary.csv").string());
    write_report_markdown(rep, (fs::path(out_dir) / "report.md").string());
    if (svg) {
        std::vector<std::string> labels;
        std::vector<double> joules, qoe;
        for (const auto& p : rep.policies) {
            if (!rep.policy_joules.count(p)) continue;
            labels.push_back(p);
            joules.push_back(rep.policy_joules.at(p));
            qoe.push_back(rep.policy_qoe.at(p));
        }
        write_svg_bars((fs::path(out_dir) / "energy.svg").string(), "mean joules per policy",
                       labels, joules);
        write_svg_bars((fs::path(out_dir) / "qoe.svg").string(), "mean QoE per policy", labels,
                       qoe);
    }
}

}  // namespace detail

inline ComparisonReport regenerate_report(const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(out_dir) / "run.json");
    if (!in) throw std::runtime_error("no run.json under " + out_dir + "; run compare first");
    nlohmann::json j;
    in >> j;
    RrcConfig rrc;
    rrc.connected_w = j.at("rrc").at("connected_w").get<double>();
    rrc.connected_inactive_w = j.at("rrc").at("connected_inactive_w").get<double>();
    rrc.idle_w = j.at("rrc").at("idle_w").get<double>();
    rrc.inactivity_timer_s = j.at("rrc").at("inactivity_timer_s").get<double>();
    rrc.inactive_timer_s = j.at("rrc").at("inactive_timer_s").get<double>();
    rrc.promotion_delay_s = j.at("rrc").at("promotion_delay_s").get<double>();
    rrc.promotion_power_w = j.at("rrc").at("promotion_power_w").get<double>();

    std::vector<CellResult> cells;
    for (const auto& jc : j.at("cells")) {
        const std::string policy = jc.at("policy").get<std::string>();
        const std::string scenario = jc.at("scenario").get<std::string>();
        if (jc.contains("error")) {
            CellResult cell;
            cell.policy = policy;
            cell.scenario = scenario;
            cell.failed = true;
            cell.error = jc.at("error").get<std::string>();
            cells.push_back(cell);
            continue;
        }
        std::vector<SessionLog> logs;
        for (const auto& path : jc.at("sessions")) {
            std::ifstream sin(fs::path(out_dir) / path.get<std::string>());
            if (!sin)
                throw std::runtime_error("missing session file: " + path.get<std::string>());
            nlohmann::json sj;
            sin >> sj;
            logs.push_back(session_from_json(sj));
        }
        cells.push_back(detail::cell_from_logs(policy, scenario, logs, rrc));
    }
    const ComparisonReport rep =
        assemble_report(cells, j.at("policies").get<std::vector<std::string>>(),
                        j.at("scenarios").get<std::vector<std::string>>());
    detail::emit_report_files(rep, out_dir, j.value("svg", false));
    return rep;
}

inline ComparisonReport run_compare(const ExperimentConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const VideoManifest manifest =
        make_manifest(cfg.n_chunks, cfg.chunk_duration_s, derive_seed(cfg.seed, "manifest"));
    save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());

    nlohmann::json run;
    run["svg"] = cfg.svg;
    run["rrc"] = {{"connected_w", cfg.rrc.connected_w},
                  {"connected_inactive_w", cfg.rrc.connected_inactive_w},
                  {"idle_w", cfg.rrc.idle_w},
                  {"inactivity_timer_s", cfg.rrc.inactivity_timer_s},
                  {"inactive_timer_s", cfg.rrc.inactive_timer_s},
                  {"promotion_delay_s", cfg.rrc.promotion_delay_s},
                  {"promotion_power_w", cfg.rrc.promotion_power_w}};
    run["policies"] = cfg.policies;

    std::vector<std::string> scenario_names;
    for (const Scenario& sc : cfg.scenarios()) scenario_names.push_back(sc.name);
    run["scenarios"] = scenario_names;

    for (const Scenario& sc : cfg.scenarios()) {
        // shared seeds: every policy replays the same traces
        std::vector<ThroughputTrace> traces;
        for (int k = 0; k < cfg.traces_per_scenario; ++k)
            traces.push_back(generate_synthetic(cfg.synth_for(sc, k)));
        for (const std::string& policy : cfg.policies) {
            nlohmann::json jc;
            jc["policy"] = policy;
            jc["scenario"] = sc.name;
            try {
                const PolicyBundle bundle = make_policy_bundle(policy, cfg);
                const fs::path dir = fs::path(out_dir) / "logs" / sc.name / policy;
                fs::create_directories(dir);
                for (std::size_t k = 0; k < traces.size(); ++k) {
                    const SessionLog log = run_policy_session(bundle, manifest, traces[k]);
                    const std::string stem = "session_" + std::to_string(k);
                    save_session_csv(log, (dir / (stem + ".csv")).string());
                    {
                        std::ofstream sout(dir / (stem + ".json"));
                        sout << session_to_json(log).dump(2) << "\n";
                    }
                    const RrcTimeline tl = derive_rrc_timeline(log, cfg.rrc);
                    save_energy_csv(energy(tl, cfg.rrc),
                                    (dir / ("energy_" + std::to_string(k) + ".csv")).string());
                    jc["sessions"].push_back(
                        ("logs" / fs::path(sc.name) / policy / (stem + ".json")).string());
                }
            } catch (const std::exception& e) {
                jc["error"] = e.what();
            }
            run["cells"].push_back(jc);
        }
    }
    {
        std::ofstream out(fs::path(out_dir) / "run.json");
        out << run.dump(2) << "\n";
    }
    // the report is always built from the stored logs
    return regenerate_report(out_dir);
}

/// Minimal SVG bar chart: one bar per policy, for a single metric.
inline void write_svg_bars(const std::string& path, const std::string& title,
                           const std::vector<std::string>& labels,
                           const std::vector<double>& values) {
    const int w = 520, h = 300, margin = 45;
    double vmax = 1e-12;
    for (double v : values) vmax = std::max(vmax, v);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write svg: " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    out << "<text x='" << w / 2 << "' y='18' text-anchor='middle' font-size='14'>" << title
        << "</text>\n";
    const double plot_w = w - 2.0 * margin, plot_h = h - 2.0 * margin;
    const double bw = plot_w / (2.0 * static_cast<double>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double x = margin + (2.0 * static_cast<double>(i) + 0.5) * bw;
        const double bh = plot_h * values[i] / vmax;
        out << "<rect x='" << x << "' y='" << h - margin - bh << "' width='" << bw
            << "' height='" << bh << "' fill='#4878a8'/>\n";
        out << "<text x='" << x + bw / 2 << "' y='" << h - margin + 14
            << "' text-anchor='middle' font-size='11'>" << labels[i] << "</text>\n";
        out << "<text x='" << x + bw / 2 << "' y='" << h - margin - bh - 4
            << "' text-anchor='middle' font-size='10'>" << detail::fmt_num(values[i])
            << "</text>\n";
    }
    out << "<line x1='" << margin << "' y1='" << h - margin << "' x2='" << w - margin << "' y2='"
        << h - margin << "' stroke='black'/>\n";
    out << "</svg>\n";
}

}  // namespace abrlab
