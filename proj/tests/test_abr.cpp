#include <catch_amalgamated.hpp>

#include <cmath>

#include "abrlab/abr.hpp"
#include "oracles.hpp"

using namespace abrlab;

namespace {

AbrContext random_ctx(Rng& rng, int horizon) {
    AbrContext ctx;
    ctx.ladder_mbps = default_bitrates_mbps();
    ctx.buffer_level_s = rng.uniform(0.0, 60.0);
    ctx.buffer_cap_s = 60.0;
    ctx.chunk_duration_s = 8.0;
    ctx.last_level = static_cast<int>(rng.uniform_int(kNumLevels));
    ctx.horizon = horizon;
    for (int p = 0; p < horizon; ++p) {
        std::array<double, kNumLevels> sizes{};
        const double jitter = rng.uniform(0.8, 1.2);
        for (int m = 0; m < kNumLevels; ++m)
            sizes[static_cast<std::size_t>(m)] =
                ctx.ladder_mbps[static_cast<std::size_t>(m)] * 8.0 * jitter;
        ctx.future_sizes_mbit.push_back(sizes);
    }
    const int n_hist = 1 + static_cast<int>(rng.uniform_int(5));
    for (int i = 0; i < n_hist; ++i)
        ctx.last_throughputs_mbps.push_back(rng.uniform(0.2, 12.0));
    ctx.predicted_throughput_mbps = rng.uniform(0.2, 12.0);
    return ctx;
}

double bola_objective(const AbrContext& ctx, const BolaParams& p, int m) {
    const auto& sizes = ctx.future_sizes_mbit.front();
    const double size_min = *std::min_element(sizes.begin(), sizes.end());
    const double u = std::log(sizes[static_cast<std::size_t>(m)] / size_min);
    const double u_max = std::log(sizes[kNumLevels - 1] / size_min);
    double v = p.v_s;
    if (v <= 0.0) v = std::max(1e-6, ctx.buffer_cap_s - ctx.chunk_duration_s) / (u_max + p.gamma_p);
    return (v * (u + p.gamma_p) - ctx.buffer_level_s) / sizes[static_cast<std::size_t>(m)];
}

}  // namespace

TEST_CASE("bola picks the lowest level on an empty buffer") {
    Rng rng(3);
    AbrContext ctx = random_ctx(rng, 1);
    ctx.buffer_level_s = 0.0;
    BolaParams p;
    p.v_s = 1.0;
    p.gamma_p = 5.0;
    // brute-force argmax over the six objective values
    int best = 0;
    for (int m = 1; m < kNumLevels; ++m)
        if (bola_objective(ctx, p, m) >= bola_objective(ctx, p, best)) best = m;
    CHECK(bola_select(ctx, p) == best);
    CHECK(bola_select(ctx, p) == 0);
}

TEST_CASE("bola saturates to the highest maximal level on a full buffer") {
    Rng rng(5);
    AbrContext ctx = random_ctx(rng, 1);
    BolaParams p;  // derived V
    const auto& sizes = ctx.future_sizes_mbit.front();
    const double size_min = *std::min_element(sizes.begin(), sizes.end());
    const double u_max = std::log(sizes[kNumLevels - 1] / size_min);
    const double v = std::max(1e-6, ctx.buffer_cap_s - ctx.chunk_duration_s) / (u_max + p.gamma_p);
    ctx.buffer_level_s = v * (u_max + p.gamma_p) + 5.0;  // all objectives <= 0
    const int got = bola_select(ctx, p);
    int best = 0;
    for (int m = 1; m < kNumLevels; ++m)
        if (bola_objective(ctx, p, m) >= bola_objective(ctx, p, best)) best = m;
    CHECK(got == best);
    CHECK(bola_objective(ctx, p, got) <= 0.0);
}

TEST_CASE("bola always attains the maximum objective") {
    Rng rng(7);
    for (int k = 0; k < 300; ++k) {
        AbrContext ctx = random_ctx(rng, 1);
        BolaParams p;
        if (rng.bernoulli(0.5)) p.v_s = rng.uniform(0.5, 20.0);
        const int got = bola_select(ctx, p);
        double best = -1e300;
        for (int m = 0; m < kNumLevels; ++m) best = std::max(best, bola_objective(ctx, p, m));
        CHECK(bola_objective(ctx, p, got) == Catch::Approx(best).margin(1e-12));
    }
}

TEST_CASE("bola is monotone nondecreasing in buffer level") {
    Rng rng(9);
    AbrContext ctx = random_ctx(rng, 1);
    BolaParams p;
    int prev = 0;
    for (double buf = 0.0; buf <= 60.0; buf += 0.25) {
        ctx.buffer_level_s = buf;
        const int lvl = bola_select(ctx, p);
        CHECK(lvl >= prev);
        prev = lvl;
    }
}

TEST_CASE("rate-based selector") {
    Rng rng(11);
    AbrContext ctx = random_ctx(rng, 1);

    ctx.last_throughputs_mbps = {10.0, 10.0, 10.0};
    CHECK(rate_based_select(ctx) == kNumLevels - 1);  // ladder tops out at 4.3

    ctx.last_throughputs_mbps = {0.1, 0.2};
    CHECK(rate_based_select(ctx) == 0);

    for (int k = 0; k < 200; ++k) {
        AbrContext c = random_ctx(rng, 1);
        const std::size_t n = std::min<std::size_t>(5, c.last_throughputs_mbps.size());
        std::vector<double> tail(c.last_throughputs_mbps.end() - static_cast<long>(n),
                                 c.last_throughputs_mbps.end());
        const double hm = harmonic_mean(tail);
        int expect = 0;
        for (int m = 0; m < kNumLevels; ++m)
            if (c.ladder_mbps[static_cast<std::size_t>(m)] <= hm) expect = m;
        CHECK(rate_based_select(c) == expect);
    }
}

TEST_CASE("mpc one-step cases follow the 6-way enumeration") {
    Rng rng(13);

    SECTION("abundant bandwidth maximizes R minus smoothness") {
        AbrContext ctx = random_ctx(rng, 1);
        ctx.buffer_level_s = 50.0;
        ctx.predicted_throughput_mbps = 1e6;
        const int got = mpc_select(ctx, MpcVariant::Fast);
        CHECK(got == oracles::mpc_enumerate(ctx, 1e6, kRebufferPenalty));
        // with no rebuffer risk the objective is R - |R - R_last|
        double best = -1e300;
        int expect = 0;
        for (int m = 0; m < kNumLevels; ++m) {
            const double r = ctx.ladder_mbps[static_cast<std::size_t>(m)];
            const double last = ctx.ladder_mbps[static_cast<std::size_t>(ctx.last_level)];
            const double obj = r - std::abs(r - last);
            if (obj > best) {
                best = obj;
                expect = m;
            }
        }
        CHECK(got == expect);
    }

    SECTION("starved bandwidth and empty buffer force the lowest level") {
        AbrContext ctx = random_ctx(rng, 1);
        ctx.buffer_level_s = 1.0;
        ctx.predicted_throughput_mbps = 0.1;  // below the lowest bitrate
        ctx.last_level = 3;
        CHECK(mpc_select(ctx, MpcVariant::Fast) == 0);
    }

    SECTION("robust with zero recent error equals fast") {
        for (int k = 0; k < 50; ++k) {
            AbrContext ctx = random_ctx(rng, 3);
            ctx.max_pred_error = 0.0;
            CHECK(mpc_select(ctx, MpcVariant::Fast) == mpc_select(ctx, MpcVariant::Robust));
        }
    }
}

TEST_CASE("mpc equals the unpruned enumeration exactly for h <= 3") {
    Rng rng(17);
    for (int k = 0; k < 400; ++k) {
        const int h = 1 + static_cast<int>(rng.uniform_int(3));
        AbrContext ctx = random_ctx(rng, h);
        const double used = *ctx.predicted_throughput_mbps;
        CHECK(mpc_select(ctx, MpcVariant::Fast) ==
              oracles::mpc_enumerate(ctx, used, kRebufferPenalty));
    }
}

TEST_CASE("robust mpc is conservative over randomized trials") {
    // Per-instance the smoothness term permits rare reversals (a discounted
    // prediction can favor a flat higher plan over a climbing one), so the
    // conservatism claim is statistical: lower on average, reversals rare.
    Rng rng(19);
    int robust_sum = 0, fast_sum = 0, reversals = 0;
    const int trials = 400;
    for (int k = 0; k < trials; ++k) {
        AbrContext ctx = random_ctx(rng, 3);
        ctx.max_pred_error = rng.uniform(0.1, 2.0);  // discount factor > 1
        const int r = mpc_select(ctx, MpcVariant::Robust);
        const int f = mpc_select(ctx, MpcVariant::Fast);
        robust_sum += r;
        fast_sum += f;
        if (r > f) ++reversals;
    }
    CHECK(robust_sum <= fast_sum);
    CHECK(reversals <= trials / 20);
}

TEST_CASE("mpc refuses oversized horizons and returns levels in range") {
    Rng rng(23);
    AbrContext ctx = random_ctx(rng, 5);
    ctx.horizon = 6;
    CHECK_THROWS_AS(mpc_select(ctx, MpcVariant::Fast), std::invalid_argument);
    for (int k = 0; k < 100; ++k) {
        AbrContext c = random_ctx(rng, 1 + static_cast<int>(rng.uniform_int(5)));
        const int lvl = mpc_select(c, MpcVariant::Fast);
        CHECK(lvl >= 0);
        CHECK(lvl < kNumLevels);
        const int lb = bola_select(c);
        CHECK(lb >= 0);
        CHECK(lb < kNumLevels);
        const int lr = rate_based_select(c);
        CHECK(lr >= 0);
        CHECK(lr < kNumLevels);
    }
}

TEST_CASE("qoe constants") {
    const QoeParams p = qoe_params();
    CHECK(p.mu == 4.3);
    CHECK(p.q(2.5) == 2.5);
    CHECK(p.q(1.0) < p.q(2.0));  // identity is monotone
}
