#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "abrlab/rng.hpp"

namespace abrlab {

/// Radio/context features recorded alongside each throughput sample.
struct TraceFeatures {
    double speed_kmh = 0.0;
    double dist_m = 0.0;
    double rssi_dbm = 0.0;
    double rsrp_dbm = 0.0;
    double rsrq_db = 0.0;
    double handovers = 0.0;  // handover count since the previous step
    bool connected = true;   // data state: CONNECTED (C) vs IDLE (I)
};

constexpr int kNumFeatures = 7;

/// Uniform-grid time series of downlink throughput plus per-step features
/// for one session.
struct ThroughputTrace {
    std::string id;
    double sample_period_s = 1.0;
    std::vector<double> throughput_mbps;
    std::vector<TraceFeatures> features;

    std::size_t size() const { return throughput_mbps.size(); }
    double duration_s() const { return static_cast<double>(size()) * sample_period_s; }

    /// Feature vector at step i in fixed column order:
    /// speed, dist, rssi, rsrp, rsrq, handovers, data_state(1=C,0=I).
    void feature_row(std::size_t i, double* out) const {
        const TraceFeatures& f = features[i];
        out[0] = f.speed_kmh;
        out[1] = f.dist_m;
        out[2] = f.rssi_dbm;
        out[3] = f.rsrp_dbm;
        out[4] = f.rsrq_db;
        out[5] = f.handovers;
        out[6] = f.connected ? 1.0 : 0.0;
    }

    void validate() const {
        if (throughput_mbps.empty()) throw std::runtime_error("trace " + id + ": empty");
        if (features.size() != throughput_mbps.size())
            throw std::runtime_error("trace " + id + ": feature/throughput length mismatch");
        if (sample_period_s <= 0.0)
            throw std::runtime_error("trace " + id + ": sample_period must be > 0");
        for (std::size_t i = 0; i < size(); ++i) {
            if (!(throughput_mbps[i] >= 0.0))
                throw std::runtime_error("trace " + id + ": negative throughput at step " +
                                         std::to_string(i));
            if (features[i].handovers < 0.0)
                throw std::runtime_error("trace " + id + ": negative handover count at step " +
                                         std::to_string(i));
        }
    }
};

/// Mean of W throughput values starting at index i.
inline double avg_future_throughput(const ThroughputTrace& trace, std::size_t i, std::size_t w) {
    if (w == 0) throw std::out_of_range("avg_future_throughput: W must be >= 1");
    if (i + w > trace.size())
        throw std::out_of_range("avg_future_throughput: window [" + std::to_string(i) + ", " +
                                std::to_string(i + w) + ") exceeds trace length " +
                                std::to_string(trace.size()));
    double sum = 0.0;
    for (std::size_t j = i; j < i + w; ++j) sum += trace.throughput_mbps[j];
    return sum / static_cast<double>(w);
}

namespace detail {

inline const char* kTraceHeader =
    "t_s,throughput_mbps,speed_kmh,dist_m,rssi_dbm,rsrp_dbm,rsrq_db,handovers,data_state";

inline std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(where + ": malformed numeric field '" + s + "'");
    }
}

}  // namespace detail

/// Write a trace in the canonical CSV schema. Values are printed with enough
/// digits to round-trip doubles exactly.
inline void save_trace(const ThroughputTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << detail::kTraceHeader << "\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const TraceFeatures& f = trace.features[i];
        out << detail::fmt_g17(static_cast<double>(i) * trace.sample_period_s) << ','
            << detail::fmt_g17(trace.throughput_mbps[i]) << ',' << detail::fmt_g17(f.speed_kmh)
            << ',' << detail::fmt_g17(f.dist_m) << ',' << detail::fmt_g17(f.rssi_dbm) << ','
            << detail::fmt_g17(f.rsrp_dbm) << ',' << detail::fmt_g17(f.rsrq_db) << ','
            << static_cast<long long>(f.handovers) << ',' << (f.connected ? 'C' : 'I') << "\n";
    }
}

/// Resample (t, value) rows onto a uniform grid by linear interpolation.
/// Used at load time when the source timestamps are not uniformly spaced.
struct RawTraceRows {
    std::vector<double> t_s;
    std::vector<double> throughput_mbps;
    std::vector<TraceFeatures> features;
};

inline ThroughputTrace resample_uniform(const RawTraceRows& rows, double period_s,
                                        const std::string& id) {
    ThroughputTrace tr;
    tr.id = id;
    tr.sample_period_s = period_s;
    const std::size_t n = rows.t_s.size();
    if (n == 0) return tr;
    const double t0 = rows.t_s.front();
    const double t_end = rows.t_s.back();
    const std::size_t steps = n == 1 ? 1 : static_cast<std::size_t>((t_end - t0) / period_s) + 1;
    std::size_t k = 0;
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = t0 + static_cast<double>(i) * period_s;
        while (k + 1 < n && rows.t_s[k + 1] <= t) ++k;
        if (k + 1 >= n || rows.t_s[k] >= t) {
            tr.throughput_mbps.push_back(rows.throughput_mbps[k]);
            tr.features.push_back(rows.features[k]);
            continue;
        }
        const double u = (t - rows.t_s[k]) / (rows.t_s[k + 1] - rows.t_s[k]);
        const TraceFeatures& a = rows.features[k];
        const TraceFeatures& b = rows.features[k + 1];
        TraceFeatures f;
        f.speed_kmh = a.speed_kmh + u * (b.speed_kmh - a.speed_kmh);
        f.dist_m = a.dist_m + u * (b.dist_m - a.dist_m);
        f.rssi_dbm = a.rssi_dbm + u * (b.rssi_dbm - a.rssi_dbm);
        f.rsrp_dbm = a.rsrp_dbm + u * (b.rsrp_dbm - a.rsrp_dbm);
        f.rsrq_db = a.rsrq_db + u * (b.rsrq_db - a.rsrq_db);
        f.handovers = u < 1.0 ? a.handovers : b.handovers;  // counts are not interpolated
        f.connected = u < 0.5 ? a.connected : b.connected;
        tr.throughput_mbps.push_back(std::max(
            0.0, rows.throughput_mbps[k] + u * (rows.throughput_mbps[k + 1] - rows.throughput_mbps[k])));
        tr.features.push_back(f);
    }
    return tr;
}

/// Load a trace CSV. Rows on a uniform time grid are taken as-is; otherwise
/// the trace is resampled onto a uniform grid at the median row spacing.
/// Unknown extra columns are ignored with a warning on stderr.
inline ThroughputTrace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);

    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error(path + ":1: empty file");
    const auto expected = detail::split_csv(detail::kTraceHeader);
    const auto got = detail::split_csv(header);
    // map each expected column to its position; extras are ignored
    std::vector<int> col(expected.size(), -1);
    for (std::size_t e = 0; e < expected.size(); ++e) {
        for (std::size_t g = 0; g < got.size(); ++g) {
            if (got[g] == expected[e]) {
                col[e] = static_cast<int>(g);
                break;
            }
        }
        if (col[e] < 0)
            throw std::runtime_error(path + ":1: schema error, missing column '" + expected[e] +
                                     "'");
    }
    if (got.size() > expected.size())
        std::cerr << "warning: " << path << ": " << got.size() - expected.size()
                  << " extra column(s) ignored\n";

    RawTraceRows rows;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv(line);
        if (f.size() < got.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": parse error, expected " + std::to_string(got.size()) +
                                     " fields, got " + std::to_string(f.size()));
        const std::string where = path + ":" + std::to_string(lineno);
        TraceFeatures feat;
        rows.t_s.push_back(detail::parse_double(f[col[0]], where));
        const double thr = detail::parse_double(f[col[1]], where);
        if (thr < 0.0) throw std::runtime_error(where + ": negative throughput");
        rows.throughput_mbps.push_back(thr);
        feat.speed_kmh = detail::parse_double(f[col[2]], where);
        feat.dist_m = detail::parse_double(f[col[3]], where);
        feat.rssi_dbm = detail::parse_double(f[col[4]], where);
        feat.rsrp_dbm = detail::parse_double(f[col[5]], where);
        feat.rsrq_db = detail::parse_double(f[col[6]], where);
        feat.handovers = detail::parse_double(f[col[7]], where);
        if (feat.handovers < 0.0) throw std::runtime_error(where + ": negative handover count");
        const std::string& ds = f[col[8]];
        if (ds == "C")
            feat.connected = true;
        else if (ds == "I")
            feat.connected = false;
        else
            throw std::runtime_error(where + ": data_state must be C or I, got '" + ds + "'");
        rows.features.push_back(feat);
    }
    if (rows.t_s.empty()) throw std::runtime_error(path + ": no data rows");

    // derive the grid period; detect an already-uniform grid to avoid resampling
    std::string id = path;
    const auto slash = id.find_last_of('/');
    if (slash != std::string::npos) id = id.substr(slash + 1);
    if (rows.t_s.size() == 1) {
        ThroughputTrace tr;
        tr.id = id;
        tr.sample_period_s = 1.0;
        tr.throughput_mbps = rows.throughput_mbps;
        tr.features = rows.features;
        return tr;
    }
    std::vector<double> diffs(rows.t_s.size() - 1);
    for (std::size_t i = 0; i + 1 < rows.t_s.size(); ++i) {
        diffs[i] = rows.t_s[i + 1] - rows.t_s[i];
        if (diffs[i] <= 0.0)
            throw std::runtime_error(path + ": timestamps not strictly increasing at row " +
                                     std::to_string(i + 2));
    }
    std::vector<double> sorted = diffs;
    std::sort(sorted.begin(), sorted.end());
    const double period = sorted[sorted.size() / 2];
    bool uniform = true;
    for (double d : diffs) {
        if (std::abs(d - period) > 1e-9 * std::max(1.0, period)) {
            uniform = false;
            break;
        }
    }
    if (uniform) {
        ThroughputTrace tr;
        tr.id = id;
        tr.sample_period_s = period;
        tr.throughput_mbps = std::move(rows.throughput_mbps);
        tr.features = std::move(rows.features);
        tr.validate();
        return tr;
    }
    ThroughputTrace tr = resample_uniform(rows, period, id);
    tr.validate();
    return tr;
}

/// Parameters of the synthetic trace generator: AR(1) throughput around a
/// mean with multiplicative dips at handover events, features co-generated.
struct SynthConfig {
    double duration_s = 400.0;
    double sample_period_s = 1.0;
    double mean_throughput_mbps = 4.0;
    double ar_coefficient = 0.95;   // in [0, 1)
    double noise_std_mbps = 1.0;    // stationary std of the AR process
    double handover_rate = 0.02;    // events per second
    double handover_dip_fraction = 0.6;
    double dip_recovery = 0.85;     // per-step decay of the dip toward 1
    std::uint64_t seed = 1;
    std::string id = "synth";

    void validate() const {
        if (duration_s <= 0 || sample_period_s <= 0)
            throw std::runtime_error("SynthConfig: duration and sample_period must be > 0");
        if (ar_coefficient < 0.0 || ar_coefficient >= 1.0)
            throw std::runtime_error("SynthConfig: ar_coefficient must be in [0,1)");
        if (noise_std_mbps < 0 || handover_rate < 0)
            throw std::runtime_error("SynthConfig: negative noise or handover rate");
        if (handover_dip_fraction < 0.0 || handover_dip_fraction > 1.0)
            throw std::runtime_error("SynthConfig: dip fraction must be in [0,1]");
    }
};

/// Deterministic synthetic trace: pure function of the config (seed included).
inline ThroughputTrace generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    ThroughputTrace tr;
    tr.id = cfg.id;
    tr.sample_period_s = cfg.sample_period_s;
    const std::size_t steps =
        std::max<std::size_t>(1, static_cast<std::size_t>(cfg.duration_s / cfg.sample_period_s));
    tr.throughput_mbps.reserve(steps);
    tr.features.reserve(steps);

    // AR(1) with stationary mean/std; dips multiply throughput and recover
    // geometrically, so a handover depresses throughput for several steps.
    const double rho = cfg.ar_coefficient;
    const double eps_std = cfg.noise_std_mbps * std::sqrt(std::max(0.0, 1.0 - rho * rho));
    double x = cfg.mean_throughput_mbps;
    double dip = 1.0;  // multiplicative channel factor in (0, 1]
    const double p_event = std::min(1.0, cfg.handover_rate * cfg.sample_period_s);
    const double speed_base = 30.0 + 20.0 * (rng.uniform() - 0.5);
    double dist = 150.0 + 100.0 * rng.uniform();

    for (std::size_t i = 0; i < steps; ++i) {
        const double noise = eps_std > 0.0 ? rng.normal(0.0, eps_std) : 0.0;
        x = cfg.mean_throughput_mbps + rho * (x - cfg.mean_throughput_mbps) + noise;
        int handovers = 0;
        if (p_event > 0.0 && rng.bernoulli(p_event)) {
            handovers = 1;
            dip *= (1.0 - cfg.handover_dip_fraction);
        }
        dip = 1.0 - (1.0 - dip) * cfg.dip_recovery;
        const double y = std::max(0.0, x * dip);

        TraceFeatures f;
        const double rel = y / std::max(1e-9, cfg.mean_throughput_mbps);
        const double jitter = eps_std > 0.0 ? rng.normal(0.0, 1.0) : 0.0;
        f.speed_kmh = std::max(0.0, speed_base + (eps_std > 0.0 ? rng.normal(0.0, 1.5) : 0.0));
        dist += (eps_std > 0.0 ? rng.normal(0.0, 4.0) : 0.0);
        dist = std::min(500.0, std::max(20.0, dist));
        f.dist_m = dist;
        f.rssi_dbm = std::max(-120.0, std::min(-40.0, -95.0 + 25.0 * std::min(2.0, rel) + jitter));
        f.rsrp_dbm = f.rssi_dbm - 20.0;
        f.rsrq_db = -10.0 - 8.0 * (1.0 - dip);
        f.handovers = handovers;
        f.connected = y > 0.02 * cfg.mean_throughput_mbps;
        tr.throughput_mbps.push_back(y);
        tr.features.push_back(f);
    }
    return tr;
}

}  // namespace abrlab
