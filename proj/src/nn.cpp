#include "tnn/nn.hpp"

#include <cmath>
#include <random>

namespace tnn {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Tanh: return "tanh";
        case Activation::Linear: return "linear";
        case Activation::Relu: return "relu";
        case Activation::BiasedElu: return "biased_elu";
        case Activation::Sinus: return "sinus";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "tanh") return Activation::Tanh;
    if (name == "linear") return Activation::Linear;
    if (name == "relu") return Activation::Relu;
    if (name == "biased_elu") return Activation::BiasedElu;
    if (name == "sinus" || name == "sin") return Activation::Sinus;
    throw ArgumentError("unknown activation: " + name);
}

double activate(Activation a, double x) {
    switch (a) {
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::Tanh: return std::tanh(x);
        case Activation::Linear: return x;
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::BiasedElu: return x > 0.0 ? x + 1.0 : std::exp(x);  // elu(x)+1
        case Activation::Sinus: return std::sin(x);
    }
    return x;
}

double activate_grad(Activation a, double x) {
    switch (a) {
        case Activation::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
        case Activation::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::Linear: return 1.0;
        case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::BiasedElu: return x > 0.0 ? 1.0 : std::exp(x);
        case Activation::Sinus: return std::cos(x);
    }
    return 1.0;
}

void MlpSpec::validate() const {
    if (layers.empty()) throw ArgumentError("MlpSpec needs at least one layer");
    if (input_width < 0 || state_width < 0) throw ArgumentError("MlpSpec widths must be >= 0");
    for (const auto& l : layers) {
        if (l.units < 1) throw ArgumentError("layer width must be >= 1");
        if (l.l2_rate < 0.0) throw ArgumentError("l2 rate must be >= 0");
    }
}

namespace {

int fan_in(const MlpSpec& spec, std::size_t layer) {
    if (layer == 0) return spec.input_width;
    return spec.layers[layer - 1].units;
}

}  // namespace

void MlpParameters::check_shapes(const MlpSpec& spec) const {
    if (w.size() != spec.layers.size() || b.size() != spec.layers.size())
        throw ShapeError("parameter layer count does not match spec");
    if (spec.use_recurrent_input && spec.state_width > 0) {
        if (w_r.rows() != spec.layers[0].units || w_r.cols() != spec.state_width)
            throw ShapeError("W_r shape mismatch");
    }
    for (std::size_t l = 0; l < w.size(); ++l) {
        if (w[l].rows() != spec.layers[l].units || w[l].cols() != fan_in(spec, l))
            throw ShapeError("W shape mismatch at layer " + std::to_string(l));
        if (b[l].size() != spec.layers[l].units)
            throw ShapeError("b shape mismatch at layer " + std::to_string(l));
    }
}

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const MlpParameters& params,
                            const Eigen::VectorXd& state, const Eigen::VectorXd& input,
                            MlpCache* cache) {
    if (input.size() != spec.input_width) throw ShapeError("mlp_forward: input width mismatch");
    const bool rec = spec.use_recurrent_input && spec.state_width > 0;
    if (rec && state.size() != spec.state_width)
        throw ShapeError("mlp_forward: state width mismatch");

    Eigen::VectorXd h;
    std::vector<Eigen::VectorXd> pre, post;
    pre.reserve(spec.layers.size());
    post.reserve(spec.layers.size());
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        Eigen::VectorXd z;
        if (l == 0) {
            z = params.w[0] * input + params.b[0];
            if (rec) z.noalias() += params.w_r * state;
        } else {
            z = params.w[l] * h + params.b[l];
        }
        h = z.unaryExpr([&](double x) { return activate(spec.layers[l].activation, x); });
        if (cache) {
            pre.push_back(z);
            post.push_back(h);
        }
    }
    if (cache) {
        cache->state = state;
        cache->input = input;
        cache->pre = std::move(pre);
        cache->post = std::move(post);
    }
    return h;
}

MlpGradients zero_gradients(const MlpSpec& spec) {
    MlpGradients g;
    const bool rec = spec.use_recurrent_input && spec.state_width > 0;
    g.w_r = Eigen::MatrixXd::Zero(rec ? spec.layers[0].units : 0, rec ? spec.state_width : 0);
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        g.w.emplace_back(Eigen::MatrixXd::Zero(spec.layers[l].units, fan_in(spec, l)));
        g.b.emplace_back(Eigen::VectorXd::Zero(spec.layers[l].units));
    }
    g.state_cotangent = Eigen::VectorXd::Zero(spec.state_width);
    g.input_cotangent = Eigen::VectorXd::Zero(spec.input_width);
    return g;
}

void mlp_backward_accumulate(const MlpSpec& spec, const MlpParameters& params,
                             const MlpCache& cache, const Eigen::VectorXd& cotangent,
                             MlpGradients& grads) {
    if (cache.pre.size() != spec.layers.size())
        throw ShapeError("mlp_backward: cache does not match spec");
    if (cotangent.size() != spec.output_width())
        throw ShapeError("mlp_backward: cotangent width mismatch");

    const bool rec = spec.use_recurrent_input && spec.state_width > 0;
    Eigen::VectorXd delta = cotangent;
    for (std::size_t li = spec.layers.size(); li-- > 0;) {
        const auto& layer = spec.layers[li];
        // through the activation
        Eigen::VectorXd dz(delta.size());
        for (Eigen::Index i = 0; i < delta.size(); ++i)
            dz[i] = delta[i] * activate_grad(layer.activation, cache.pre[li][i]);

        const Eigen::VectorXd& below =
            li == 0 ? cache.input : cache.post[li - 1];
        grads.w[li].noalias() += dz * below.transpose();
        grads.b[li] += dz;
        if (li == 0) {
            grads.input_cotangent.noalias() += params.w[0].transpose() * dz;
            if (rec) {
                grads.w_r.noalias() += dz * cache.state.transpose();
                grads.state_cotangent.noalias() += params.w_r.transpose() * dz;
            }
        } else {
            delta = params.w[li].transpose() * dz;
        }
    }
}

MlpGradients mlp_backward(const MlpSpec& spec, const MlpParameters& params,
                          const MlpCache& cache, const Eigen::VectorXd& cotangent) {
    MlpGradients g = zero_gradients(spec);
    mlp_backward_accumulate(spec, params, cache, cotangent, g);
    // l2 term, applied once per backward call
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const double a = spec.layers[l].l2_rate;
        if (a == 0.0) continue;
        g.w[l] += 2.0 * a * params.w[l];
        if (l == 0 && spec.use_recurrent_input && spec.state_width > 0)
            g.w_r += 2.0 * a * params.w_r;
    }
    return g;
}

double l2_penalty(const MlpSpec& spec, const MlpParameters& params) {
    double p = 0.0;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const double a = spec.layers[l].l2_rate;
        if (a == 0.0) continue;
        p += a * params.w[l].squaredNorm();
        if (l == 0 && spec.use_recurrent_input && spec.state_width > 0)
            p += a * params.w_r.squaredNorm();
    }
    return p;
}

MlpParameters init_parameters(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    MlpParameters p;
    const bool rec = spec.use_recurrent_input && spec.state_width > 0;

    auto glorot = [&](Eigen::MatrixXd& m, int fin, int fout) {
        const double limit = std::sqrt(6.0 / double(fin + fout));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
    };

    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const int fout = spec.layers[l].units;
        // layer 0 sees state and input concatenated for fan-in purposes
        const int fin = (l == 0 && rec) ? spec.input_width + spec.state_width : fan_in(spec, l);
        if (l == 0 && rec) {
            p.w_r.resize(fout, spec.state_width);
            glorot(p.w_r, fin, fout);
        } else if (l == 0) {
            p.w_r.resize(0, 0);
        }
        p.w.emplace_back(fout, fan_in(spec, l));
        glorot(p.w.back(), fin, fout);
        p.b.emplace_back(Eigen::VectorXd::Zero(fout));
    }
    return p;
}

int count_mlp_parameters(const MlpSpec& spec) {
    int n = 0;
    const bool rec = spec.use_recurrent_input && spec.state_width > 0;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        n += spec.layers[l].units * fan_in(spec, l);  // W
        n += spec.layers[l].units;                    // b
        if (l == 0 && rec) n += spec.layers[0].units * spec.state_width;  // W_r
    }
    return n;
}

}  // namespace tnn
