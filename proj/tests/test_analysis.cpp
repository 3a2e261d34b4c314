#include <doctest.h>

#include <cmath>

#include "tnn/analysis.hpp"

using namespace tnn;

namespace {

ChannelSchema make_schema(int m, int n, int o) {
    ChannelSchema s;
    for (int i = 0; i < o; ++i) {
        s.exogenous.push_back("xi_" + std::to_string(i));
        s.divisors[s.exogenous.back()] = 1.0;
    }
    for (int i = 0; i < n; ++i) {
        s.ancillary.push_back("anc_" + std::to_string(i));
        s.divisors[s.ancillary.back()] = 100.0;
    }
    for (int i = 0; i < m; ++i) {
        s.targets.push_back("theta_" + std::to_string(i));
        s.divisors[s.targets.back()] = 100.0;
    }
    s.sample_time = 0.5;
    return s;
}

TnnParameters constant_parameters(const TnnTopology& topology, const Eigen::VectorXd& pi_bias,
                                  const Eigen::VectorXd& gamma_bias,
                                  const Eigen::VectorXd& theta_c) {
    TnnParameters p = init_tnn_parameters(topology, 0);
    for (auto& net : p.pi) {
        net.w_r.setZero();
        for (auto& w : net.w) w.setZero();
        for (auto& b : net.b) b.setZero();
    }
    p.gamma.w_r.setZero();
    for (auto& w : p.gamma.w) w.setZero();
    for (auto& b : p.gamma.b) b.setZero();
    p.pi[0].b.back() = pi_bias;
    p.gamma.b.back() = gamma_bias;
    p.theta_c = theta_c;
    return p;
}

/// Model whose state never moves: zero losses, zero conductances.
TnnModel frozen_model(int m, int n, int o) {
    TnnTopology t = make_topology(m, n, o, {}, {});
    const TnnParameters p =
        constant_parameters(t, Eigen::VectorXd::Zero(m),
                            Eigen::VectorXd::Zero(t.pair_count()), Eigen::VectorXd::Zero(m));
    return TnnModel{t, p, make_schema(m, n, o)};
}

MeasurementProfile constant_profile(const std::string& id, long K, int channels, double value) {
    MeasurementProfile p;
    p.id = id;
    p.values = Eigen::MatrixXd::Constant(K, channels, value);
    return p;
}

ChannelSchema lag_schema() { return make_schema(1, 1, 1); }

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

}  // namespace

TEST_CASE("perfect reproduction scores zero error") {
    const TnnModel model = frozen_model(2, 1, 1);
    const MeasurementProfile p = constant_profile("c", 20, 4, 0.5);
    const EvalReport r = evaluate(model, {p});
    CHECK(r.aggregate_mse == 0.0);
    CHECK(r.linf == 0.0);
    CHECK(r.per_target_mse.maxCoeff() == 0.0);
    CHECK(r.parameter_count == count_parameters(model.topology));
    CHECK(r.failed_profiles.empty());
}

TEST_CASE("hand-computed errors: residuals 1 K and -3 K give MSE 5 and linf 3") {
    const TnnModel model = frozen_model(1, 1, 1);
    // frozen state stays at the fixed init; choose targets around it
    EvalOptions opts;
    opts.init_mode = InitMode::Fixed;
    opts.fixed_value_kelvin = 50.0;  // normalized 0.5
    MeasurementProfile p = constant_profile("h", 2, 3, 0.4);
    p.values(0, 2) = 0.5 - 0.01;  // error +1 K
    p.values(1, 2) = 0.5 + 0.03;  // error -3 K
    const EvalReport r = evaluate(model, {p}, opts);
    CHECK(r.aggregate_mse == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(r.linf == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("a constant 1 K bias gives MSE 1") {
    const TnnModel model = frozen_model(1, 1, 1);
    EvalOptions opts;
    opts.init_mode = InitMode::Fixed;
    opts.fixed_value_kelvin = 41.0;  // 1 K above every target
    MeasurementProfile p = constant_profile("b", 30, 3, 0.4);
    const EvalReport r = evaluate(model, {p}, opts);
    CHECK(r.aggregate_mse == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.linf == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ambient init seeds every target from the first ancillary sample") {
    const TnnModel model = frozen_model(2, 1, 1);
    MeasurementProfile p = constant_profile("a", 10, 5, 0.4);
    p.values.col(1).setConstant(0.7);  // ancillary channel
    EvalOptions opts;
    opts.init_mode = InitMode::Ambient;
    const EvalReport r = evaluate(model, {p}, opts);
    // frozen at 0.7 against targets 0.4: 30 K error on both targets
    CHECK(r.linf == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(r.aggregate_mse == doctest::Approx(900.0).epsilon(1e-12));
}

TEST_CASE("conductance medians of a bias-only model are the absolute biases") {
    const int m = 2, n = 1;
    TnnTopology t = make_topology(m, n, 1, {}, {});
    Eigen::VectorXd gamma_bias(t.pair_count());
    gamma_bias << 0.4, -0.1, 0.25;
    const TnnParameters p = constant_parameters(t, Eigen::VectorXd::Zero(m), gamma_bias,
                                                Eigen::VectorXd::Zero(m));
    const TnnModel model{t, p, make_schema(m, n, 1)};
    const ConductanceProfile prof = conductance_medians({model}, {1.0}, 5.0, 101, 9);
    CHECK(prof.models_used == 1);
    CHECK(prof.medians[0] == doctest::Approx(0.4));
    CHECK(prof.medians[1] == doctest::Approx(0.1));
    CHECK(prof.medians[2] == doctest::Approx(0.25));
}

TEST_CASE("masked slots have zero median and the cutoff filters models") {
    TnnTopology t = make_topology(2, 1, 1, {}, {});
    t.mask = {1};
    Eigen::VectorXd gamma_bias(t.pair_count());
    gamma_bias << 0.4, 0.9, 0.25;
    const TnnParameters p = constant_parameters(t, Eigen::VectorXd::Zero(2), gamma_bias,
                                                Eigen::VectorXd::Zero(2));
    const TnnModel model{t, p, make_schema(2, 1, 1)};
    const ConductanceProfile prof = conductance_medians({model, model}, {1.0, 99.0}, 5.0, 51, 2);
    CHECK(prof.models_used == 1);  // the 99 K^2 model is filtered out
    CHECK(prof.medians[1] == 0.0);
    CHECK_THROWS_AS(conductance_medians({model}, {99.0}, 5.0, 51, 2), ArgumentError);
    CHECK_THROWS_AS(conductance_medians({model}, {1.0, 2.0}, 5.0, 51, 2), ArgumentError);
}

TEST_CASE("conductance medians are invariant under model ordering") {
    TnnTopology t = make_topology(2, 1, 1, {LayerSpec{3, Activation::Sigmoid, 0.0}},
                                  {LayerSpec{3, Activation::Sigmoid, 0.0}});
    const ChannelSchema schema = make_schema(2, 1, 1);
    const TnnModel a{t, init_tnn_parameters(t, 1), schema};
    const TnnModel b{t, init_tnn_parameters(t, 2), schema};
    const TnnModel c{t, init_tnn_parameters(t, 3), schema};
    const ConductanceProfile fwd = conductance_medians({a, b, c}, {1, 1, 1}, 5.0, 201, 7);
    const ConductanceProfile rev = conductance_medians({c, a, b}, {1, 1, 1}, 5.0, 201, 7);
    CHECK(fwd.medians == rev.medians);  // bitwise: same per-model input draws
}

TEST_CASE("pruning thresholds extend the mask monotonically") {
    TnnTopology t = make_topology(2, 1, 1, {}, {});
    ConductanceProfile prof;
    prof.medians = Eigen::VectorXd(3);
    prof.medians << 0.4, 0.05, 0.25;

    const PruneResult none = prune(t, prof, 0.0);
    CHECK(none.newly_masked.empty());

    const PruneResult one = prune(t, prof, 0.1);
    CHECK(one.newly_masked == std::vector<int>{1});
    CHECK(one.topology.mask.count(1) == 1);

    const PruneResult all = prune(t, prof, 1.0);
    CHECK(all.newly_masked.size() == 3);
    CHECK(!all.warnings.empty());  // every node isolated

    // monotone: a lower threshold's mask is a subset of a higher one's
    for (double lo : {0.0, 0.1, 0.3}) {
        for (double hi : {0.3, 0.5, 1.0}) {
            if (lo > hi) continue;
            const auto a = prune(t, prof, lo);
            const auto b = prune(t, prof, hi);
            for (int s : a.topology.mask) CHECK(b.topology.mask.count(s) == 1);
        }
    }

    // already-masked slots are not reported again
    TnnTopology masked = t;
    masked.mask = {1};
    const PruneResult again = prune(masked, prof, 0.1);
    CHECK(again.newly_masked.empty());

    CHECK_THROWS_AS(prune(t, prof, -0.1), ArgumentError);
    ConductanceProfile bad;
    bad.medians = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(prune(t, bad, 0.1), ShapeError);
}

TEST_CASE("detuned starts recover in closed-form time, monotone in the offset") {
    // exact first-order lag model: errors decay as offset * (1 - T k g)^k
    const double gamma = 0.1, T = 0.5;
    TnnTopology t = make_topology(1, 1, 1, {}, {});
    const TnnParameters p = constant_parameters(t, Eigen::VectorXd::Zero(1),
                                                Eigen::VectorXd::Constant(1, gamma),
                                                Eigen::VectorXd::Zero(1));
    ChannelSchema schema = lag_schema();
    const TnnModel model{t, p, schema};

    // the profile is the model's own trajectory, so truth-start error is zero
    MeasurementProfile profile = constant_profile("lag", 240, 3, 0.0);
    profile.values.col(0).setConstant(0.4);
    profile.values.col(1).setConstant(0.6);
    double x = 0.2;
    for (long k = 0; k < 240; ++k) {
        profile.values(k, 2) = x;
        x = x + T * gamma * (0.6 - x);
    }

    const auto rows = detuned_init_study(model, profile, {0.0, 15.0, 30.0, 60.0});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].recovery_seconds[0] == 0.0);
    const double rate = 1.0 - T * gamma;
    double prev = -1.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double offset = rows[i].offset_kelvin;
        const double rec = rows[i].recovery_seconds[0];
        REQUIRE(std::isfinite(rec));
        CHECK(rec >= prev);
        prev = rec;
        // analytic first step index with error <= 10 K
        long k_star = 0;
        while (offset * std::pow(rate, double(k_star)) > 10.0 + 1e-12) ++k_star;
        CHECK(rec == doctest::Approx(double(k_star) * T));
    }
}

TEST_CASE("a rollout that never reenters the band reports infinity") {
    // gamma = 0: the detuned state never moves back toward the truth
    const TnnModel model = frozen_model(1, 1, 1);
    MeasurementProfile profile = constant_profile("stuck", 50, 3, 0.5);
    const auto rows = detuned_init_study(model, profile, {30.0});
    CHECK(rows[0].recovery_seconds[0] == kNeverRecovers);
}

TEST_CASE("grid search scores candidates and keeps the non-dominated subset") {
    const ChannelSchema schema = lag_schema();
    FoldedProfiles folds;
    folds.train = {lag_profile("t0", 96, 0.3, 0.0)};
    folds.fold1 = {lag_profile("v1", 48, 0.5, 0.7)};
    folds.fold2 = {lag_profile("v2", 48, 0.2, 2.1)};
    folds.generalization = {lag_profile("g", 48, 0.8, 3.0)};

    TrainConfig config;
    config.max_epochs = 2;
    config.patience = 2;
    config.tbptt_length = 24;

    GridSearchOptions options;
    options.layer_range = {1};
    options.unit_grid = {1, 2};
    const GridSearchResult result = grid_search(schema, folds, config, {1}, options);
    REQUIRE(result.candidates.size() == 4);  // 1x2 pi grid x 1x2 gamma grid
    for (const auto& c : result.candidates) {
        CHECK(!c.failed);
        CHECK(c.parameter_count > 0);
        CHECK(c.generalization_mse >= 0.0);
    }
    REQUIRE(!result.pareto.empty());
    // verify the non-dominated definition directly
    for (std::size_t i = 0; i < result.candidates.size(); ++i) {
        const auto& a = result.candidates[i];
        bool dominated = false;
        for (const auto& b : result.candidates) {
            if (&a == &b) continue;
            if (b.parameter_count <= a.parameter_count &&
                b.generalization_mse <= a.generalization_mse &&
                (b.parameter_count < a.parameter_count ||
                 b.generalization_mse < a.generalization_mse))
                dominated = true;
        }
        const bool on_front =
            std::find(result.pareto.begin(), result.pareto.end(), i) != result.pareto.end();
        CHECK(on_front == !dominated);
    }
}

TEST_CASE("grid search is deterministic across thread counts and budgets") {
    const ChannelSchema schema = lag_schema();
    FoldedProfiles folds;
    folds.train = {lag_profile("t0", 64, 0.3, 0.0)};
    folds.fold1 = {lag_profile("v1", 32, 0.5, 0.7)};
    folds.fold2 = {lag_profile("v2", 32, 0.2, 2.1)};
    folds.generalization = {lag_profile("g", 32, 0.8, 3.0)};
    TrainConfig config;
    config.max_epochs = 1;

    GridSearchOptions options;
    options.layer_range = {1};
    options.unit_grid = {1, 2};
    options.jobs = 1;
    const GridSearchResult serial = grid_search(schema, folds, config, {1}, options);
    options.jobs = 3;
    const GridSearchResult parallel = grid_search(schema, folds, config, {1}, options);
    REQUIRE(serial.candidates.size() == parallel.candidates.size());
    for (std::size_t i = 0; i < serial.candidates.size(); ++i) {
        CHECK(serial.candidates[i].pi_units == parallel.candidates[i].pi_units);
        CHECK(serial.candidates[i].generalization_mse ==
              parallel.candidates[i].generalization_mse);
    }
    CHECK(serial.pareto == parallel.pareto);

    options.jobs = 1;
    options.budget = 2;
    options.sample_seed = 5;
    const GridSearchResult a = grid_search(schema, folds, config, {1}, options);
    const GridSearchResult b = grid_search(schema, folds, config, {1}, options);
    REQUIRE(a.candidates.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(a.candidates[i].pi_units == b.candidates[i].pi_units);
        CHECK(a.candidates[i].gamma_units == b.candidates[i].gamma_units);
    }

    GridSearchOptions empty;
    empty.layer_range = {};
    CHECK_THROWS_AS(grid_search(schema, folds, config, {1}, empty), ArgumentError);
    CHECK_THROWS_AS(grid_search(schema, folds, config, {}, options), ArgumentError);
}

TEST_CASE("default unit grid is the exponential ladder") {
    const GridSearchOptions options;
    CHECK(options.unit_grid == std::vector<int>{1, 2, 4, 8, 16, 32, 64, 128});
    CHECK(options.layer_range == std::vector<int>{1, 2, 3});
}
