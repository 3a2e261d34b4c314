#include <doctest.h>

#include <cmath>
#include <random>

#include "tnn/nn.hpp"

using namespace tnn;

namespace {

const Activation kAllActivations[] = {Activation::Sigmoid, Activation::Tanh, Activation::Linear,
                                      Activation::Relu,    Activation::BiasedElu,
                                      Activation::Sinus};

MlpSpec random_spec(std::mt19937_64& rng, int layers) {
    std::uniform_int_distribution<int> width(1, 5);
    MlpSpec spec;
    spec.state_width = width(rng);
    spec.input_width = width(rng);
    spec.use_recurrent_input = true;
    for (int l = 0; l < layers; ++l) {
        LayerSpec layer;
        layer.units = width(rng);
        layer.activation = kAllActivations[std::uniform_int_distribution<int>(0, 5)(rng)];
        spec.layers.push_back(layer);
    }
    return spec;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

/// Straight-line reference evaluation, independent of the engine's loops.
Eigen::VectorXd naive_forward(const MlpSpec& spec, const MlpParameters& p,
                              const Eigen::VectorXd& state, const Eigen::VectorXd& input) {
    Eigen::VectorXd h = input;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const int units = spec.layers[l].units;
        Eigen::VectorXd z(units);
        for (int u = 0; u < units; ++u) {
            double acc = p.b[l][u];
            for (int c = 0; c < h.size(); ++c) acc += p.w[l](u, c) * h[c];
            if (l == 0)
                for (int c = 0; c < state.size(); ++c) acc += p.w_r(u, c) * state[c];
            z[u] = acc;
        }
        h.resize(units);
        for (int u = 0; u < units; ++u) h[u] = activate(spec.layers[l].activation, z[u]);
    }
    return h;
}

// flat parameter vector helpers for the finite-difference oracle
Eigen::VectorXd pack(const MlpParameters& p) {
    std::vector<double> v;
    auto put = [&](const Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
    };
    put(p.w_r);
    for (std::size_t l = 0; l < p.w.size(); ++l) {
        put(p.w[l]);
        for (Eigen::Index i = 0; i < p.b[l].size(); ++i) v.push_back(p.b[l][i]);
    }
    return Eigen::Map<Eigen::VectorXd>(v.data(), long(v.size()));
}

MlpParameters unpack(const MlpParameters& shape, const Eigen::VectorXd& flat) {
    MlpParameters p = shape;
    long off = 0;
    auto get = [&](Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[off++];
    };
    get(p.w_r);
    for (std::size_t l = 0; l < p.w.size(); ++l) {
        get(p.w[l]);
        for (Eigen::Index i = 0; i < p.b[l].size(); ++i) p.b[l][i] = flat[off++];
    }
    return p;
}

}  // namespace

TEST_CASE("zero parameters with sigmoid output give 0.5 everywhere") {
    MlpSpec spec;
    spec.state_width = 2;
    spec.input_width = 3;
    spec.layers = {LayerSpec{4, Activation::Sigmoid, 0.0}};
    MlpParameters p = init_parameters(spec, 0);
    p.w_r.setZero();
    p.w[0].setZero();
    const Eigen::VectorXd out =
        mlp_forward(spec, p, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3));
    for (int i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(0.5));
}

TEST_CASE("single linear identity layer passes phi through") {
    MlpSpec spec;
    spec.state_width = 3;
    spec.input_width = 3;
    spec.layers = {LayerSpec{3, Activation::Linear, 0.0}};
    MlpParameters p = init_parameters(spec, 1);
    p.w_r.setZero();
    p.w[0] = Eigen::MatrixXd::Identity(3, 3);
    p.b[0].setZero();
    std::mt19937_64 rng(7);
    const Eigen::VectorXd phi = random_vector(rng, 3);
    const Eigen::VectorXd out = mlp_forward(spec, p, random_vector(rng, 3), phi);
    CHECK((out - phi).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("forward matches a naive straight-line evaluation") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const MlpSpec spec = random_spec(rng, 1 + trial % 3);
        const MlpParameters p = init_parameters(spec, std::uint64_t(trial));
        const Eigen::VectorXd state = random_vector(rng, spec.state_width);
        const Eigen::VectorXd input = random_vector(rng, spec.input_width);
        const Eigen::VectorXd got = mlp_forward(spec, p, state, input);
        const Eigen::VectorXd want = naive_forward(spec, p, state, input);
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("forward is pure") {
    std::mt19937_64 rng(3);
    const MlpSpec spec = random_spec(rng, 2);
    const MlpParameters p = init_parameters(spec, 5);
    const Eigen::VectorXd state = random_vector(rng, spec.state_width);
    const Eigen::VectorXd input = random_vector(rng, spec.input_width);
    const Eigen::VectorXd a = mlp_forward(spec, p, state, input);
    const Eigen::VectorXd b = mlp_forward(spec, p, state, input);
    CHECK(a == b);
}

TEST_CASE("analytic gradients match central finite differences") {
    std::mt19937_64 rng(2024);
    // every activation at every layer count 1..3
    for (Activation act : kAllActivations) {
        for (int layers = 1; layers <= 3; ++layers) {
            MlpSpec spec = random_spec(rng, layers);
            for (auto& l : spec.layers) l.activation = act;
            spec.layers[0].l2_rate = 1e-3;  // exercise the penalty term too
            MlpParameters p = init_parameters(spec, std::uint64_t(layers) * 17);
            const Eigen::VectorXd state = random_vector(rng, spec.state_width);
            const Eigen::VectorXd input = random_vector(rng, spec.input_width);
            const Eigen::VectorXd cot = random_vector(rng, spec.output_width());

            // scalar objective: <cot, f(theta)> + l2 penalty
            auto objective = [&](const Eigen::VectorXd& flat) {
                const MlpParameters q = unpack(p, flat);
                return cot.dot(mlp_forward(spec, q, state, input)) + l2_penalty(spec, q);
            };

            MlpCache cache;
            mlp_forward(spec, p, state, input, &cache);
            const MlpGradients grads = mlp_backward(spec, p, cache, cot);
            MlpParameters as_params = p;
            as_params.w_r = grads.w_r;
            as_params.w = grads.w;
            as_params.b = grads.b;
            const Eigen::VectorXd analytic = pack(as_params);

            Eigen::VectorXd flat = pack(p);
            const double h = 1e-6;
            for (long i = 0; i < flat.size(); ++i) {
                Eigen::VectorXd fp = flat, fm = flat;
                fp[i] += h;
                fm[i] -= h;
                const double fd = (objective(fp) - objective(fm)) / (2.0 * h);
                const double denom = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
                CHECK(std::abs(analytic[i] - fd) / denom < 1e-4);
            }
        }
    }
}

TEST_CASE("zero cotangent leaves only the l2 terms") {
    std::mt19937_64 rng(11);
    MlpSpec spec = random_spec(rng, 2);
    spec.layers[0].l2_rate = 0.01;
    spec.layers[1].l2_rate = 0.0;
    const MlpParameters p = init_parameters(spec, 9);
    MlpCache cache;
    mlp_forward(spec, p, random_vector(rng, spec.state_width),
                random_vector(rng, spec.input_width), &cache);
    const MlpGradients g =
        mlp_backward(spec, p, cache, Eigen::VectorXd::Zero(spec.output_width()));
    CHECK((g.w[0] - 0.02 * p.w[0]).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((g.w_r - 0.02 * p.w_r).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(g.w[1].cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.b[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.b[1].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mismatched cotangent width is a contract violation") {
    std::mt19937_64 rng(13);
    const MlpSpec spec = random_spec(rng, 1);
    const MlpParameters p = init_parameters(spec, 1);
    MlpCache cache;
    mlp_forward(spec, p, random_vector(rng, spec.state_width),
                random_vector(rng, spec.input_width), &cache);
    CHECK_THROWS_AS(mlp_backward(spec, p, cache,
                                 Eigen::VectorXd::Zero(spec.output_width() + 1)),
                    ShapeError);
}

TEST_CASE("initialization is deterministic per seed") {
    std::mt19937_64 rng(5);
    const MlpSpec spec = random_spec(rng, 2);
    const MlpParameters a = init_parameters(spec, 123);
    const MlpParameters b = init_parameters(spec, 123);
    const MlpParameters c = init_parameters(spec, 124);
    CHECK(a.w[0] == b.w[0]);
    CHECK(a.w_r == b.w_r);
    CHECK(a.w[0] != c.w[0]);
    CHECK(a.b[0].cwiseAbs().maxCoeff() == 0.0);  // biases start at zero
}

TEST_CASE("glorot weight variance is close to 2/(fan_in+fan_out)") {
    MlpSpec spec;
    spec.state_width = 0;
    spec.use_recurrent_input = false;
    spec.input_width = 40;
    spec.layers = {LayerSpec{250, Activation::Linear, 0.0}};  // 10^4 draws
    const MlpParameters p = init_parameters(spec, 77);
    const double var = p.w[0].array().square().mean();
    const double expected = 2.0 / double(40 + 250);
    CHECK(var > 0.8 * expected);
    CHECK(var < 1.2 * expected);
}

TEST_CASE("biased elu stays strictly positive on [-50, 50]") {
    for (double x = -50.0; x <= 50.0; x += 0.25)
        CHECK(activate(Activation::BiasedElu, x) > 0.0);
}
