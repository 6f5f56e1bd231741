#pragma once

#include <array>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "abrlab/rng.hpp"

namespace abrlab {

constexpr int kNumLevels = 6;

struct LadderLevel {
    std::string label;
    double bitrate_mbps = 0.0;
    std::vector<double> sizes_mbit;  // one entry per chunk index
};

/// Chunked video description: 6-level bitrate ladder with per-chunk sizes.
struct VideoManifest {
    std::string id = "video";
    double chunk_duration_s = 8.0;
    std::vector<LadderLevel> levels;

    std::size_t n_chunks() const { return levels.empty() ? 0 : levels[0].sizes_mbit.size(); }

    double size_mbit(int level, std::size_t chunk) const {
        return levels[static_cast<std::size_t>(level)].sizes_mbit[chunk];
    }

    std::array<double, kNumLevels> chunk_sizes(std::size_t chunk) const {
        std::array<double, kNumLevels> s{};
        for (int l = 0; l < kNumLevels; ++l) s[l] = size_mbit(l, chunk);
        return s;
    }

    std::array<double, kNumLevels> bitrates() const {
        std::array<double, kNumLevels> b{};
        for (int l = 0; l < kNumLevels; ++l) b[l] = levels[static_cast<std::size_t>(l)].bitrate_mbps;
        return b;
    }

    void validate() const {
        if (levels.size() != kNumLevels)
            throw std::runtime_error("manifest " + id + ": expected " +
                                     std::to_string(kNumLevels) + " ladder levels, got " +
                                     std::to_string(levels.size()));
        if (chunk_duration_s <= 0)
            throw std::runtime_error("manifest " + id + ": chunk_duration must be > 0");
        const std::size_t n = n_chunks();
        if (n == 0) throw std::runtime_error("manifest " + id + ": no chunks");
        for (std::size_t l = 0; l < levels.size(); ++l) {
            if (l > 0 && levels[l].bitrate_mbps <= levels[l - 1].bitrate_mbps)
                throw std::runtime_error("manifest " + id + ": ladder not ascending by bitrate");
            if (levels[l].sizes_mbit.size() != n)
                throw std::runtime_error("manifest " + id + ": level " + levels[l].label +
                                         " has wrong chunk count");
            for (double s : levels[l].sizes_mbit)
                if (!(s > 0.0))
                    throw std::runtime_error("manifest " + id + ": nonpositive chunk size");
        }
    }
};

/// Standard ladder used throughout: 144p..720p at 0.3..4.3 Mbit/s.
inline const std::array<const char*, kNumLevels>& default_labels() {
    static const std::array<const char*, kNumLevels> kLabels = {"144p", "270p", "360p",
                                                                "480p", "570p", "720p"};
    return kLabels;
}

inline const std::array<double, kNumLevels>& default_bitrates_mbps() {
    static const std::array<double, kNumLevels> kRates = {0.3, 0.75, 1.2, 1.85, 2.85, 4.3};
    return kRates;
}

/// Build a manifest with per-chunk sizes fluctuating around bitrate*duration
/// (variable-bitrate encoding look). Deterministic under seed.
inline VideoManifest make_manifest(std::size_t n_chunks, double chunk_duration_s = 8.0,
                                   std::uint64_t seed = 7, double size_jitter = 0.15) {
    VideoManifest m;
    m.chunk_duration_s = chunk_duration_s;
    Rng rng(seed);
    // one shared shape per chunk so levels stay strictly ordered per chunk
    std::vector<double> shape(n_chunks);
    for (auto& s : shape) s = 1.0 + size_jitter * (2.0 * rng.uniform() - 1.0);
    for (int l = 0; l < kNumLevels; ++l) {
        LadderLevel lev;
        lev.label = default_labels()[static_cast<std::size_t>(l)];
        lev.bitrate_mbps = default_bitrates_mbps()[static_cast<std::size_t>(l)];
        lev.sizes_mbit.reserve(n_chunks);
        for (std::size_t c = 0; c < n_chunks; ++c)
            lev.sizes_mbit.push_back(lev.bitrate_mbps * chunk_duration_s * shape[c]);
        m.levels.push_back(std::move(lev));
    }
    m.validate();
    return m;
}

inline void save_manifest(const VideoManifest& m, const std::string& path) {
    nlohmann::json j;
    j["id"] = m.id;
    j["chunk_duration_s"] = m.chunk_duration_s;
    for (const auto& lev : m.levels) {
        nlohmann::json jl;
        jl["label"] = lev.label;
        jl["bitrate_mbps"] = lev.bitrate_mbps;
        jl["sizes_mbit"] = lev.sizes_mbit;
        j["levels"].push_back(jl);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

inline VideoManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    VideoManifest m;
    m.id = j.value("id", path);
    m.chunk_duration_s = j.at("chunk_duration_s").get<double>();
    for (const auto& jl : j.at("levels")) {
        LadderLevel lev;
        lev.label = jl.at("label").get<std::string>();
        lev.bitrate_mbps = jl.at("bitrate_mbps").get<double>();
        lev.sizes_mbit = jl.at("sizes_mbit").get<std::vector<double>>();
        m.levels.push_back(std::move(lev));
    }
    m.validate();
    return m;
}

}  // namespace abrlab
