#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "abrlab/checkpoint.hpp"
#include "abrlab/lstm.hpp"
#include "abrlab/metrics.hpp"
#include "abrlab/predictor.hpp"
#include "oracles.hpp"

using namespace abrlab;

namespace {

ThroughputTrace synth(std::uint64_t seed, double mean, std::size_t steps, double noise = 1.0,
                      double ho_rate = 0.04) {
    SynthConfig cfg;
    cfg.duration_s = static_cast<double>(steps);
    cfg.mean_throughput_mbps = mean;
    cfg.noise_std_mbps = noise;
    cfg.handover_rate = ho_rate;
    cfg.seed = seed;
    return generate_synthetic(cfg);
}

LstmModel tiny_model(std::vector<int> sizes, std::uint64_t seed) {
    LstmModel m;
    m.layer_sizes = std::move(sizes);
    m.dropout_rate = 0.0;
    m.init(seed);
    return m;
}

}  // namespace

TEST_CASE("score recovers perfect fit and the mean predictor") {
    std::vector<double> a{1, 2, 3, 4};
    const PredictionMetrics perfect = score(a, a);
    CHECK(perfect.r2 == Catch::Approx(1.0));
    CHECK(perfect.pearson == Catch::Approx(1.0));
    CHECK(perfect.mae_mbps == 0.0);

    std::vector<double> mean_pred(4, 2.5);
    CHECK(score(mean_pred, a).r2 == Catch::Approx(0.0).margin(1e-12));

    std::vector<double> flat(4, 7.0);
    CHECK_THROWS_AS(score(a, flat), std::domain_error);
}

TEST_CASE("score matches a textbook oracle on random vectors") {
    Rng rng(21);
    std::vector<double> p(100), a(100);
    for (std::size_t i = 0; i < 100; ++i) {
        a[i] = rng.uniform(0, 10);
        p[i] = 0.7 * a[i] + rng.normal(0, 1.5);
    }
    const PredictionMetrics m = score(p, a);
    const auto ref = oracles::score_textbook(p, a);
    CHECK(m.r2 == Catch::Approx(ref.r2).margin(1e-9));
    CHECK(m.pearson == Catch::Approx(ref.pearson).margin(1e-9));
}

TEST_CASE("pearson is invariant under positive affine transforms") {
    Rng rng(5);
    std::vector<double> p(50), a(50), p2(50);
    for (std::size_t i = 0; i < 50; ++i) {
        a[i] = rng.uniform(0, 10);
        p[i] = rng.uniform(0, 10);
        p2[i] = 3.0 * p[i] + 11.0;
    }
    CHECK(score(p, a).pearson == Catch::Approx(score(p2, a).pearson).margin(1e-12));
}

TEST_CASE("moving-average baselines") {
    std::vector<double> flat{4, 4, 4};
    for (auto kind : {MovingAverageKind::ArithmeticMA, MovingAverageKind::EWMA,
                      MovingAverageKind::HarmonicMA})
        CHECK(baseline_predict(kind, flat) == Catch::Approx(4.0));

    std::vector<double> two{1, 3};
    CHECK(baseline_predict(MovingAverageKind::ArithmeticMA, two) == Catch::Approx(2.0));
    CHECK(baseline_predict(MovingAverageKind::HarmonicMA, two) == Catch::Approx(1.5));
    std::vector<double> w{2, 9, 5};
    CHECK(baseline_predict(MovingAverageKind::EWMA, w, 1.0) == 5.0);
    std::vector<double> zeros{0.0, 2.0};
    CHECK(baseline_predict(MovingAverageKind::HarmonicMA, zeros) ==
          Catch::Approx(2.0 / (1.0 / 1e-6 + 0.5)));
}

TEST_CASE("zero-weight LSTM outputs zero") {
    LstmModel m = tiny_model({3, 2}, 1);
    std::vector<double> flat(m.flat_weights().size(), 0.0);
    m.set_flat_weights(flat);
    std::vector<double> x(4 * kNumFeatures, 0.7);
    std::vector<double> y(4, 0.3);
    CHECK(lstm_forward(m, x, y) == 0.0);
}

TEST_CASE("single-unit single-step LSTM matches hand-computed gates") {
    LstmModel m;
    m.layer_sizes = {1};
    m.dropout_rate = 0.0;
    m.init(1);
    // zero everything, then wire only the throughput channel (column 7)
    std::vector<double> flat(m.flat_weights().size(), 0.0);
    m.set_flat_weights(flat);
    auto& l = m.weights.layers[0];
    l.wx(0, kNumFeatures) = 0.5;    // input gate
    l.wx(1, kNumFeatures) = -0.25;  // forget gate
    l.wx(2, kNumFeatures) = 1.0;    // candidate
    l.wx(3, kNumFeatures) = 0.3;    // output gate
    l.b << 0.1, 0.2, -0.1, 0.0;
    m.weights.head_w(0) = 2.0;
    m.weights.head_b = 0.05;

    const double v = 0.8;
    std::vector<double> x(kNumFeatures, 0.0);
    std::vector<double> y{v};

    auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double gi = sigmoid(0.5 * v + 0.1);
    const double gg = std::tanh(1.0 * v - 0.1);
    const double go = sigmoid(0.3 * v + 0.0);
    const double c = gi * gg;  // forget gate idles against c_prev = 0
    const double expect = 2.0 * (go * std::tanh(c)) + 0.05;

    CHECK(lstm_forward(m, x, y) == Catch::Approx(expect).margin(1e-12));
    CHECK(lstm_forward(m, x, y) == lstm_forward(m, x, y));  // deterministic
}

TEST_CASE("LSTM BPTT gradients match central finite differences") {
    // 1-unit, 2-step fixture plus a deeper 2-layer fixture
    for (auto sizes : std::vector<std::vector<int>>{{1}, {3, 2}}) {
        const std::size_t h = sizes.size() == 1 ? 2 : 3;
        LstmModel m = tiny_model(sizes, 7);
        m.h = h;

        SampleSet set;
        set.h = h;
        set.w = 1;
        Rng rng(19);
        for (int s = 0; s < 2; ++s) {
            std::vector<double> x(h * kNumFeatures), y(h);
            for (auto& v : x) v = rng.uniform(0, 1);
            for (auto& v : y) v = rng.uniform(0, 1);
            set.x_windows.push_back(x);
            set.y_windows.push_back(y);
            set.labels.push_back(rng.uniform(0, 1));
        }
        set.norm_stats.min.assign(kNumFeatures + 1, 0.0);
        set.norm_stats.max.assign(kNumFeatures + 1, 1.0);

        const std::vector<std::size_t> idx{0, 1};
        detail::LstmGrads grads = detail::LstmGrads::zeros_like(m);
        lstm_loss_and_grads(m, set, idx, &grads);
        std::vector<double> analytic;
        detail::flatten_into(
            LstmWeights{grads.layers, grads.head_w, grads.head_b}, analytic);

        LstmModel probe = m;
        auto loss_of = [&](const std::vector<double>& theta) {
            probe.set_flat_weights(theta);
            return lstm_loss_and_grads(probe, set, idx, nullptr);
        };
        const auto fd = oracles::finite_difference(loss_of, m.flat_weights(), 1e-6);
        CHECK(oracles::max_rel_error(analytic, fd) < 1e-4);
    }
}

namespace {

SampleSet normalized_samples(const ThroughputTrace& tr, std::size_t h, std::size_t w) {
    return minmax_normalize(create_samples(tr, h, w));
}

}  // namespace

TEST_CASE("training fits a constant-label dataset") {
    ThroughputTrace tr;
    tr.sample_period_s = 1.0;
    tr.throughput_mbps.assign(60, 4.0);
    tr.features.assign(60, TraceFeatures{});
    SampleSet set = create_samples(tr, 4, 2);
    // constant columns normalize to zero; labels normalize to zero as well,
    // so shift the throughput channel stats to keep a nonzero target
    NormStats st;
    st.min.assign(kNumFeatures + 1, 0.0);
    st.max.assign(kNumFeatures + 1, 8.0);
    set = minmax_normalize(set, &st);

    LstmModel m = tiny_model({4}, 3);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 16;
    cfg.learning_rate = 0.2;
    cfg.seed = 3;
    const TrainResult res = train_source(m, set, cfg);
    CHECK(res.best_val_mse < 1e-4);
}

TEST_CASE("training overfits a single sample") {
    ThroughputTrace tr = synth(23, 5.0, 20);
    SampleSet set = normalized_samples(tr, 3, 2);
    set.x_windows.resize(1);
    set.y_windows.resize(1);
    set.labels.resize(1);
    LstmModel m = tiny_model({4}, 5);
    TrainConfig cfg;
    cfg.epochs = 300;
    cfg.batch_size = 1;
    cfg.learning_rate = 0.3;
    cfg.early_stop_patience = 300;
    cfg.seed = 1;
    const TrainResult res = train_source(m, set, cfg);
    CHECK(res.loss_curve.back().train_mse < 1e-3);
}

TEST_CASE("training is reproducible under a fixed seed") {
    const ThroughputTrace tr = synth(31, 5.0, 120);
    const SampleSet set = normalized_samples(tr, 4, 3);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.seed = 11;
    LstmModel a = tiny_model({4, 4}, 9);
    a.dropout_rate = 0.2;  // dropout masks come from the seeded RNG
    LstmModel b = a;
    const TrainResult ra = train_source(a, set, cfg);
    const TrainResult rb = train_source(b, set, cfg);
    REQUIRE(ra.loss_curve.size() == rb.loss_curve.size());
    for (std::size_t i = 0; i < ra.loss_curve.size(); ++i) {
        CHECK(ra.loss_curve[i].train_mse == rb.loss_curve[i].train_mse);
        CHECK(ra.loss_curve[i].val_mse == rb.loss_curve[i].val_mse);
    }
    CHECK(a.flat_weights() == b.flat_weights());
}

TEST_CASE("running-best envelope of the validation curve is nonincreasing") {
    const ThroughputTrace tr = synth(37, 6.0, 150);
    const SampleSet set = normalized_samples(tr, 4, 2);
    LstmModel m = tiny_model({4}, 2);
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.seed = 5;
    const TrainResult res = train_source(m, set, cfg);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : res.loss_curve) {
        const double envelope = std::min(best, e.val_mse);
        CHECK(envelope <= best);
        best = envelope;
    }
    CHECK(res.best_val_mse == best);
}

TEST_CASE("poisoned labels raise TrainingDiverged naming the epoch") {
    ThroughputTrace tr = synth(41, 5.0, 60);
    SampleSet set = normalized_samples(tr, 3, 1);
    set.labels[0] = std::numeric_limits<double>::infinity();
    LstmModel m = tiny_model({3}, 1);
    TrainConfig cfg;
    cfg.epochs = 3;
    try {
        train_source(m, set, cfg);
        FAIL("expected TrainingDiverged");
    } catch (const TrainingDiverged& e) {
        CHECK(e.epoch == 0);
    }
}

TEST_CASE("fine-tune strategies freeze exactly what they promise") {
    const ThroughputTrace src_tr = synth(43, 5.0, 220);
    const SampleSet src = normalized_samples(src_tr, 4, 2);
    LstmModel m = tiny_model({4, 3}, 13);
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.seed = 7;
    train_source(m, src, cfg);
    const std::vector<double> theta_s = m.flat_weights();

    const ThroughputTrace tgt_tr = synth(44, 2.5, 140);
    SampleSet tgt = create_samples(tgt_tr, 4, 2);
    tgt = minmax_normalize(tgt, &src.norm_stats);  // source scaling reused

    SECTION("WeightTransfer takes zero gradient steps") {
        LstmModel wt = m;
        fine_tune(wt, tgt, FineTuneStrategy::WeightTransfer, cfg);
        CHECK(wt.flat_weights() == theta_s);
        const auto delta = wt.flat_delta();
        for (double d : delta) CHECK(d == 0.0);
    }

    SECTION("LastLayerOnly leaves recurrent weights bitwise unchanged") {
        LstmModel last = m;
        fine_tune(last, tgt, FineTuneStrategy::LastLayerOnly, cfg);
        for (std::size_t li = 0; li < m.weights.layers.size(); ++li) {
            CHECK(last.weights.layers[li].wx == m.weights.layers[li].wx);
            CHECK(last.weights.layers[li].wh == m.weights.layers[li].wh);
            CHECK(last.weights.layers[li].b == m.weights.layers[li].b);
        }
        CHECK(last.weights.head_w != m.weights.head_w);
        // theta_T = theta_S + delta holds by construction
        const auto delta = last.flat_delta();
        const auto theta_t = last.flat_weights();
        for (std::size_t i = 0; i < theta_t.size(); ++i)
            CHECK(theta_t[i] == Catch::Approx(theta_s[i] + delta[i]).margin(1e-12));
    }

    SECTION("AllLayers adapts better than WeightTransfer on a shifted target") {
        LstmModel all = m;
        const FineTuneResult fr = fine_tune(all, tgt, FineTuneStrategy::AllLayers, cfg);
        LstmModel wt = m;
        const FineTuneResult fw = fine_tune(wt, tgt, FineTuneStrategy::WeightTransfer, cfg);
        std::vector<double> actual;
        for (std::size_t i : fr.test_idx)
            actual.push_back(src.norm_stats.denorm_throughput(tgt.labels[i]));
        const auto pa = predict_samples(all, tgt, fr.test_idx);
        const auto pw = predict_samples(wt, tgt, fw.test_idx);
        CHECK(score(pa, actual).r2 >= score(pw, actual).r2);
    }
}

TEST_CASE("predict_window falls back to the harmonic mean without history") {
    const ThroughputTrace tr = synth(47, 5.0, 40);
    LstmModel m = tiny_model({3}, 1);
    m.h = 8;
    const Prediction p = predict_window(m, tr, 5, 8);
    CHECK(p.used_fallback);
    std::vector<double> hist(tr.throughput_mbps.begin(), tr.throughput_mbps.begin() + 5);
    CHECK(p.mbps == Catch::Approx(harmonic_mean(hist)));
    const Prediction p0 = predict_window(m, tr, 0, 8);
    CHECK(p0.used_fallback);
    CHECK(p0.mbps == 0.0);
}

TEST_CASE("predictions are finite and nonnegative") {
    const ThroughputTrace tr = synth(53, 4.0, 60);
    LstmModel m = tiny_model({4}, 3);
    m.h = 6;
    // adversarial head bias to push raw output negative
    m.weights.head_b = -100.0;
    for (std::size_t i = 6; i < 20; ++i) {
        const Prediction p = predict_window(m, tr, i, 6);
        CHECK(std::isfinite(p.mbps));
        CHECK(p.mbps >= 0.0);
    }
}

TEST_CASE("trained model tracks a constant trace within 10%") {
    ThroughputTrace tr;
    tr.sample_period_s = 1.0;
    tr.id = "const";
    tr.throughput_mbps.assign(80, 5.0);
    tr.features.assign(80, TraceFeatures{});
    SampleSet set = create_samples(tr, 5, 3);
    NormStats st;
    st.min.assign(kNumFeatures + 1, 0.0);
    st.max.assign(kNumFeatures + 1, 10.0);
    set = minmax_normalize(set, &st);
    LstmModel m = tiny_model({4}, 3);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.learning_rate = 0.2;
    cfg.seed = 2;
    train_source(m, set, cfg);
    const Prediction p = predict_window(m, tr, 20, 5);
    CHECK_FALSE(p.used_fallback);
    CHECK(p.mbps == Catch::Approx(5.0).epsilon(0.10));
}

TEST_CASE("LSTM checkpoints round-trip") {
    const ThroughputTrace tr = synth(59, 5.0, 140);
    const SampleSet set = normalized_samples(tr, 4, 2);
    LstmModel m = tiny_model({4, 3}, 17);
    TrainConfig cfg;
    cfg.epochs = 4;
    train_source(m, set, cfg);
    LstmModel ft = m;
    fine_tune(ft, set, FineTuneStrategy::LastLayerOnly, cfg);

    const std::string path =
        (std::filesystem::temp_directory_path() / "abrlab_lstm.json").string();
    save_lstm(ft, path);
    const LstmModel back = load_lstm(path);
    CHECK(back.flat_weights() == ft.flat_weights());
    CHECK(back.flat_delta() == ft.flat_delta());
    CHECK(back.layer_sizes == ft.layer_sizes);
    CHECK(back.h == ft.h);
    CHECK(back.norm_stats.min == ft.norm_stats.min);
    CHECK(back.norm_stats.max == ft.norm_stats.max);
}
