#include <doctest.h>

#include <cmath>
#include <random>

#include "tnn/train.hpp"

using namespace tnn;

namespace {

ChannelSchema lag_schema() {
    ChannelSchema s;
    s.exogenous = {"xi_0"};
    s.ancillary = {"anc_0"};
    s.targets = {"theta_0"};
    s.divisors = {{"xi_0", 1.0}, {"anc_0", 100.0}, {"theta_0", 100.0}};
    s.sample_time = 0.5;
    return s;
}

/// First-order-lag ground truth: x' = x + T*kappa*gamma*(anc - x).
MeasurementProfile lag_profile(const std::string& id, long K, double x0, double phase) {
    const double T = 0.5, kappa = 1.0, gamma = 0.25;
    MeasurementProfile p;
    p.id = id;
    p.values.resize(K, 3);
    double x = x0;
    for (long k = 0; k < K; ++k) {
        const double anc = 0.5 + 0.3 * std::sin(double(k) / 15.0 + phase);
        p.values(k, 0) = 0.4;
        p.values(k, 1) = anc;
        p.values(k, 2) = x;
        x = x + T * kappa * gamma * (anc - x);
    }
    return p;
}

FoldedProfiles lag_folds() {
    FoldedProfiles f;
    f.train = {lag_profile("t0", 96, 0.3, 0.0), lag_profile("t1", 96, 0.7, 1.5)};
    f.fold1 = {lag_profile("v1", 64, 0.5, 0.7)};
    f.fold2 = {lag_profile("v2", 64, 0.2, 2.1)};
    f.generalization = {lag_profile("g", 64, 0.8, 3.0)};
    return f;
}

TnnTopology lag_topology() {
    return make_topology(1, 1, 1, {LayerSpec{2, Activation::Tanh, 0.0}},
                         {LayerSpec{2, Activation::Tanh, 0.0}});
}

}  // namespace

TEST_CASE("clipping rescales to the threshold and keeps the direction") {
    Eigen::VectorXd g(2);
    g << 3.0, 4.0;  // norm 5
    Eigen::VectorXd clipped = g;
    clip_gradients(clipped, 1.0);
    CHECK(clipped.norm() == doctest::Approx(1.0));
    CHECK(clipped[0] == doctest::Approx(0.6));
    CHECK(clipped[1] == doctest::Approx(0.8));
    // cosine with the original direction stays 1
    CHECK(clipped.dot(g) / (clipped.norm() * g.norm()) == doctest::Approx(1.0));

    Eigen::VectorXd small = 0.1 * g;  // norm 0.5, below threshold
    Eigen::VectorXd untouched = small;
    clip_gradients(untouched, 1.0);
    CHECK(untouched == small);

    CHECK_THROWS_AS(clip_gradients(g, 0.0), ArgumentError);
    Eigen::VectorXd bad(1);
    bad << std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(clip_gradients(bad, 1.0), NumericalError);
}

TEST_CASE("sgd with momentum accumulates velocity") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd g(2);
    g << 1.0, -2.0;
    OptimizerState st;
    optimizer_step(OptimizerKind::SgdMomentum, st, p, g, 0.1);
    CHECK(p[0] == doctest::Approx(-0.1));  // first step: -lr * g
    CHECK(p[1] == doctest::Approx(0.2));
    optimizer_step(OptimizerKind::SgdMomentum, st, p, g, 0.1);
    // velocity 0.9*g + g = 1.9*g
    CHECK(p[0] == doctest::Approx(-0.1 - 0.19));
    CHECK(p[1] == doctest::Approx(0.2 + 0.38));
}

TEST_CASE("adam's first step is nearly a signed learning-rate step") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd g(3);
    g << 5.0, -0.5, 2.0;
    OptimizerState st;
    optimizer_step(OptimizerKind::Adam, st, p, g, 0.01);
    for (int i = 0; i < 3; ++i)
        CHECK(p[i] == doctest::Approx(-0.01 * (g[i] > 0 ? 1.0 : -1.0)).epsilon(1e-6));
}

TEST_CASE("adam and nadam match a straight-line reimplementation") {
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.05;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (OptimizerKind kind : {OptimizerKind::Adam, OptimizerKind::Nadam}) {
        Eigen::VectorXd p = Eigen::VectorXd::Zero(4);
        Eigen::VectorXd ref = p;
        Eigen::VectorXd m = Eigen::VectorXd::Zero(4), v = Eigen::VectorXd::Zero(4);
        OptimizerState st;
        for (int t = 1; t <= 10; ++t) {
            Eigen::VectorXd g(4);
            for (auto& x : g) x = dist(rng);
            optimizer_step(kind, st, p, g, lr);
            // independent elementwise update
            for (int i = 0; i < 4; ++i) {
                m[i] = b1 * m[i] + (1 - b1) * g[i];
                v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
                const double bc1 = 1 - std::pow(b1, t), bc2 = 1 - std::pow(b2, t);
                const double denom = std::sqrt(v[i] / bc2) + eps;
                if (kind == OptimizerKind::Adam)
                    ref[i] -= lr * (m[i] / bc1) / denom;
                else
                    ref[i] -= lr * (b1 * m[i] / bc1 + (1 - b1) * g[i] / bc1) / denom;
            }
            CHECK((p - ref).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
}

TEST_CASE("validation mse is zero for self-consistent data and exact for known errors") {
    const ChannelSchema schema = lag_schema();
    TnnTopology t = make_topology(1, 1, 1, {}, {});
    // constant model: gamma = 0, pi = 0 keeps the state at its initial value
    TnnParameters p = init_tnn_parameters(t, 0);
    for (auto& w : p.gamma.w) w.setZero();
    for (auto& b : p.gamma.b) b.setZero();
    p.gamma.w_r.setZero();
    for (auto& net : p.pi) {
        net.w_r.setZero();
        for (auto& w : net.w) w.setZero();
        for (auto& b : net.b) b.setZero();
    }
    p.theta_c.setZero();

    MeasurementProfile flat;
    flat.id = "flat";
    flat.values = Eigen::MatrixXd::Constant(10, 3, 0.5);
    CHECK(validation_mse(t, p, schema, {flat}) == doctest::Approx(0.0));

    // targets ramp away from the frozen estimate: errors are known exactly
    MeasurementProfile ramp = flat;
    double expect = 0.0;
    for (long k = 0; k < 10; ++k) {
        ramp.values(k, 2) = 0.5 + 0.001 * double(k);
        const double e = 0.001 * double(k) * 100.0;  // Kelvin
        expect += e * e;
    }
    expect /= 10.0;
    CHECK(validation_mse(t, p, schema, {ramp}) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("plain gradient descent decreases the window loss") {
    const ChannelSchema schema = lag_schema();
    const TnnTopology t = lag_topology();
    const MeasurementProfile profile = lag_profile("gd", 32, 0.3, 0.0);
    const Eigen::VectorXd init = profile.targets(schema, 0);
    Eigen::VectorXd flat = flatten_parameters(t, init_tnn_parameters(t, 4));
    Eigen::VectorXd grad;
    double prev = tbptt_gradients(t, unflatten_parameters(t, flat), schema, profile, 0, 32,
                                  init, grad);
    for (int it = 0; it < 30; ++it) {
        flat -= 1e-3 * grad;
        const double loss = tbptt_gradients(t, unflatten_parameters(t, flat), schema, profile,
                                            0, 32, init, grad);
        CHECK(loss <= prev + 1e-12);
        prev = loss;
    }
}

TEST_CASE("fit reports consistent records and snapshots the best epoch") {
    const ChannelSchema schema = lag_schema();
    const TnnTopology t = lag_topology();
    const FoldedProfiles folds = lag_folds();
    TrainConfig config;
    config.max_epochs = 6;
    config.patience = 3;
    config.tbptt_length = 24;
    config.learning_rate = 5e-3;
    config.seed = 11;

    std::vector<std::string> log;
    const FitResult result = fit(t, schema, folds, config, FoldIteration::ValidateOnFold1, &log);
    const TrainReport& r = result.report;
    REQUIRE(!r.epochs.empty());
    CHECK(int(r.epochs.size()) <= config.max_epochs);
    CHECK(log.size() == r.epochs.size());
    for (const auto& line : log)
        CHECK(std::count(line.begin(), line.end(), ',') == 4);  // 5 fields

    double best = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    for (const auto& rec : r.epochs) {
        CHECK(rec.validation_mse >= 0.0);
        CHECK(rec.seconds >= 0.0);
        if (rec.validation_mse < best) {
            best = rec.validation_mse;
            best_epoch = rec.epoch;
        }
    }
    CHECK(r.best_epoch == best_epoch);
    CHECK(r.best_validation_mse == doctest::Approx(best));
    CHECK(int(r.epochs.size()) <= best_epoch + config.patience);
    CHECK(r.parameter_count == count_parameters(t));

    // the returned parameters reproduce the recorded best validation MSE
    const double replay = validation_mse(t, result.parameters, schema, folds.fold1,
                                         config.divergence_bound);
    CHECK(replay == doctest::Approx(r.best_validation_mse).epsilon(1e-12));
}

TEST_CASE("fold iteration controls which fold validates") {
    const ChannelSchema schema = lag_schema();
    const TnnTopology t = lag_topology();
    const FoldedProfiles folds = lag_folds();
    TrainConfig config;
    config.max_epochs = 2;
    config.patience = 2;
    config.seed = 3;

    const FitResult a = fit(t, schema, folds, config, FoldIteration::ValidateOnFold1);
    const FitResult b = fit(t, schema, folds, config, FoldIteration::ValidateOnFold2);
    // the two iterations score different folds, so their curves differ
    CHECK(a.report.epochs[0].validation_mse != b.report.epochs[0].validation_mse);
}

TEST_CASE("fit is deterministic per seed") {
    const ChannelSchema schema = lag_schema();
    const TnnTopology t = lag_topology();
    const FoldedProfiles folds = lag_folds();
    TrainConfig config;
    config.max_epochs = 3;
    config.seed = 21;

    const FitResult a = fit(t, schema, folds, config);
    const FitResult b = fit(t, schema, folds, config);
    CHECK(flatten_parameters(t, a.parameters) == flatten_parameters(t, b.parameters));
    REQUIRE(a.report.epochs.size() == b.report.epochs.size());
    for (std::size_t e = 0; e < a.report.epochs.size(); ++e) {
        CHECK(a.report.epochs[e].train_loss == b.report.epochs[e].train_loss);
        CHECK(a.report.epochs[e].validation_mse == b.report.epochs[e].validation_mse);
    }

    TrainConfig other = config;
    other.seed = 22;
    const FitResult c = fit(t, schema, folds, other);
    CHECK(flatten_parameters(t, a.parameters) != flatten_parameters(t, c.parameters));
}

TEST_CASE("config validation rejects degenerate settings") {
    TrainConfig c;
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = TrainConfig{};
    c.tbptt_length = 1;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = TrainConfig{};
    c.patience = 0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    CHECK_THROWS_AS(optimizer_from_name("rmsprop"), ArgumentError);
    CHECK(optimizer_from_name(optimizer_name(OptimizerKind::Nadam)) == OptimizerKind::Nadam);
}

TEST_CASE("repeated fit aggregates test-fold scores across seeds") {
    const ChannelSchema schema = lag_schema();
    const TnnTopology t = lag_topology();
    const FoldedProfiles folds = lag_folds();
    TrainConfig config;
    config.max_epochs = 2;

    const RepeatedFitResult r = repeated_fit(t, schema, folds, config, {1, 2, 3});
    REQUIRE(r.runs.size() == 3);
    CHECK(r.failures.empty());
    CHECK(r.test_mse.size() == 3);
    CHECK(r.min_test_mse <= r.mean_test_mse);
    CHECK(r.mean_test_mse <= r.max_test_mse);
    const double mean = (r.test_mse[0] + r.test_mse[1] + r.test_mse[2]) / 3.0;
    CHECK(r.mean_test_mse == doctest::Approx(mean));
    CHECK_THROWS_AS(repeated_fit(t, schema, folds, config, {}), ArgumentError);
}
