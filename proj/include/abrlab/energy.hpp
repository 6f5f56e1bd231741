#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "abrlab/config.hpp"
#include "abrlab/emulator.hpp"

namespace abrlab {

enum class RrcState { Connected, ConnectedInactive, Idle, Promoting };

inline const char* to_string(RrcState s) {
    switch (s) {
        case RrcState::Connected: return "CONNECTED";
        case RrcState::ConnectedInactive: return "CONNECTED_INACTIVE";
        case RrcState::Idle: return "IDLE";
        case RrcState::Promoting: return "PROMOTING";
    }
    return "?";
}

/// Three-state RRC machine parameters. Powers and timers are configuration,
/// not physical truth; defaults are documented estimates. Promotion is the
/// transition period out of INACTIVE/IDLE, billed at its own power.
struct RrcConfig {
    double connected_w = 1.2;
    double connected_inactive_w = 0.1;
    double idle_w = 0.02;
    double inactivity_timer_s = 5.0;   // CONNECTED -> CONNECTED_INACTIVE
    double inactive_timer_s = 10.0;    // CONNECTED_INACTIVE -> IDLE
    double promotion_delay_s = 0.05;   // INACTIVE/IDLE -> CONNECTED
    double promotion_power_w = 1.2;

    double power(RrcState s) const {
        switch (s) {
            case RrcState::Connected: return connected_w;
            case RrcState::ConnectedInactive: return connected_inactive_w;
            case RrcState::Idle: return idle_w;
            case RrcState::Promoting: return promotion_power_w;
        }
        return 0.0;
    }

    void validate() const {
        if (!(connected_w > connected_inactive_w && connected_inactive_w > idle_w && idle_w >= 0))
            throw std::runtime_error("RrcConfig: powers must satisfy CONNECTED > INACTIVE > IDLE >= 0");
        if (inactivity_timer_s < 0 || inactive_timer_s < 0 || promotion_delay_s < 0)
            throw std::runtime_error("RrcConfig: timers must be >= 0");
    }

    static RrcConfig from_config(const Config& c) {
        RrcConfig r;
        r.connected_w = c.get_double("rrc.connected_w", r.connected_w);
        r.connected_inactive_w = c.get_double("rrc.connected_inactive_w", r.connected_inactive_w);
        r.idle_w = c.get_double("rrc.idle_w", r.idle_w);
        r.inactivity_timer_s = c.get_double("rrc.inactivity_timer_s", r.inactivity_timer_s);
        r.inactive_timer_s = c.get_double("rrc.inactive_timer_s", r.inactive_timer_s);
        r.promotion_delay_s = c.get_double("rrc.promotion_delay_s", r.promotion_delay_s);
        r.promotion_power_w = c.get_double("rrc.promotion_power_w", r.promotion_power_w);
        r.validate();
        return r;
    }
};

struct RrcSegment {
    double t0 = 0.0;
    double t1 = 0.0;
    RrcState state = RrcState::Idle;
};

struct RrcTransition {
    double t = 0.0;
    RrcState from = RrcState::Idle;
    RrcState to = RrcState::Idle;
};

struct RrcTimeline {
    std::vector<RrcSegment> segments;  // partition of [0, duration]
    std::vector<RrcTransition> transitions;
    double duration_s = 0.0;
    double total_mbit = 0.0;  // payload downloaded, for joules-per-bit
    std::string session_id;

    std::map<RrcState, double> dwell() const {
        std::map<RrcState, double> d;
        for (const auto& s : segments) d[s.state] += s.t1 - s.t0;
        return d;
    }
};

namespace detail {

inline void push_segment(RrcTimeline& tl, double t0, double t1, RrcState st) {
    if (t1 <= t0) return;
    if (!tl.segments.empty() && tl.segments.back().state == st &&
        tl.segments.back().t1 == t0) {
        tl.segments.back().t1 = t1;
        return;
    }
    if (!tl.segments.empty())
        tl.transitions.push_back({t0, tl.segments.back().state, st});
    tl.segments.push_back({t0, t1, st});
}

/// Fill a no-activity gap [t0, t1). After a download the state stays
/// CONNECTED for the inactivity timer, demotes to CONNECTED_INACTIVE for the
/// inactive timer, then IDLE; a gap at session start is IDLE throughout.
/// When a download follows and the state will have left CONNECTED, the final
/// promotion_delay seconds (clipped to start no earlier than the demotion
/// instant) are spent promoting.
inline void fill_gap(RrcTimeline& tl, const RrcConfig& cfg, double t0, double t1,
                     bool connected_at_start, bool download_follows) {
    double promote_from = t1;
    if (download_follows) {
        const double leaves_connected_at = connected_at_start ? t0 + cfg.inactivity_timer_s : t0;
        if (leaves_connected_at < t1)
            promote_from = std::max(leaves_connected_at, t1 - cfg.promotion_delay_s);
    }
    if (connected_at_start) {
        const double demote_at = t0 + cfg.inactivity_timer_s;
        const double idle_at = demote_at + cfg.inactive_timer_s;
        push_segment(tl, t0, std::min({demote_at, promote_from, t1}), RrcState::Connected);
        push_segment(tl, std::min(demote_at, promote_from),
                     std::min({idle_at, promote_from, t1}), RrcState::ConnectedInactive);
        push_segment(tl, std::min(idle_at, promote_from), std::min(promote_from, t1),
                     RrcState::Idle);
    } else {
        push_segment(tl, t0, std::min(promote_from, t1), RrcState::Idle);
    }
    push_segment(tl, promote_from, t1, RrcState::Promoting);
}

}  // namespace detail

/// Walk the session's download intervals into an RRC dwell timeline over
/// [0, session_duration]. Chunks must be non-overlapping and time-ordered.
inline RrcTimeline derive_rrc_timeline(const SessionLog& log, const RrcConfig& cfg,
                                       std::optional<double> session_duration = std::nullopt) {
    cfg.validate();
    RrcTimeline tl;
    tl.session_id = log.trace_id;
    tl.duration_s = session_duration.value_or(log.wall_clock_end_s);
    for (const auto& c : log.chunks) tl.total_mbit += c.size_mbit;

    double cursor = 0.0;
    bool connected = false;
    for (std::size_t i = 0; i < log.chunks.size(); ++i) {
        const auto& c = log.chunks[i];
        const double dl_start = c.start_s;
        const double dl_end = c.start_s + c.download_time_s;
        if (dl_start < cursor - 1e-12)
            throw std::runtime_error("derive_rrc_timeline: overlapping chunk intervals at index " +
                                     std::to_string(c.index));
        if (dl_start > cursor)
            detail::fill_gap(tl, cfg, cursor, dl_start, connected, /*download_follows=*/true);
        detail::push_segment(tl, std::max(cursor, dl_start), dl_end, RrcState::Connected);
        cursor = std::max(cursor, dl_end);
        connected = true;
    }
    if (cursor < tl.duration_s)
        detail::fill_gap(tl, cfg, cursor, tl.duration_s, connected, /*download_follows=*/false);
    return tl;
}

struct EnergyReport {
    double joules_total = 0.0;
    std::map<RrcState, double> joules_per_state;
    std::optional<double> joules_per_bit;
    std::string session_id;
};

/// Dwell times multiplied by per-state power draw.
inline EnergyReport energy(const RrcTimeline& tl, const RrcConfig& cfg) {
    cfg.validate();
    EnergyReport rep;
    rep.session_id = tl.session_id;
    for (const auto& [state, dwell_s] : tl.dwell()) {
        const double j = dwell_s * cfg.power(state);
        rep.joules_per_state[state] = j;
        rep.joules_total += j;
    }
    if (tl.total_mbit > 0.0) rep.joules_per_bit = rep.joules_total / (tl.total_mbit * 1e6);
    return rep;
}

/// Joules spent inside [t0, t1), clipping timeline segments to the window.
inline double energy_in_window(const RrcTimeline& tl, const RrcConfig& cfg, double t0, double t1) {
    double j = 0.0;
    for (const auto& s : tl.segments) {
        const double a = std::max(t0, s.t0);
        const double b = std::min(t1, s.t1);
        if (b > a) j += (b - a) * cfg.power(s.state);
    }
    // time past the last segment (session shorter than the window) is idle
    if (!tl.segments.empty() && t1 > tl.segments.back().t1)
        j += (t1 - std::max(t0, tl.segments.back().t1)) * cfg.idle_w;
    return j;
}

/// Battery-equivalent playback gain: (e_ref - e_a)/e_ref * t_a seconds.
inline double extra_playtime(double e_ref_j, double e_a_j, double t_a_s) {
    if (e_ref_j <= 0.0)
        throw std::domain_error("extra_playtime: reference energy must be > 0");
    return (e_ref_j - e_a_j) / e_ref_j * t_a_s;
}

inline void save_energy_csv(const EnergyReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write energy report: " + path);
    out << "session_id,joules_total,joules_connected,joules_inactive,joules_idle,"
           "joules_promoting,joules_per_bit\n";
    auto get = [&](RrcState s) {
        auto it = rep.joules_per_state.find(s);
        return it == rep.joules_per_state.end() ? 0.0 : it->second;
    };
    out << rep.session_id << ',' << detail::fmt_g17(rep.joules_total) << ','
        << detail::fmt_g17(get(RrcState::Connected)) << ','
        << detail::fmt_g17(get(RrcState::ConnectedInactive)) << ','
        << detail::fmt_g17(get(RrcState::Idle)) << ','
        << detail::fmt_g17(get(RrcState::Promoting)) << ','
        << (rep.joules_per_bit ? detail::fmt_g17(*rep.joules_per_bit) : "") << "\n";
}

}  // namespace abrlab
