#pragma once

// Minimal dense feed-forward engine with exact reverse-mode gradients.
// Realizes the power-loss and conductance approximators of the thermal cell.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tnn/errors.hpp"

namespace tnn {

enum class Activation { Sigmoid, Tanh, Linear, Relu, BiasedElu, Sinus };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

double activate(Activation a, double x);
double activate_grad(Activation a, double x);

struct LayerSpec {
    int units = 1;
    Activation activation = Activation::Linear;
    double l2_rate = 0.0;  // weight decay on W (and W_r for layer 0), not biases
};

/// Architecture of one MLP. Layer 0 optionally receives the recurrent state
/// through a separate weight matrix W_r; all layers see the previous layer's
/// post-activation. `layers.back().units` is the output width.
struct MlpSpec {
    int state_width = 0;   // width of the recurrent state input (0 if unused)
    int input_width = 0;   // width of the exogenous input phi
    bool use_recurrent_input = true;
    std::vector<LayerSpec> layers;

    int output_width() const { return layers.empty() ? 0 : layers.back().units; }
    void validate() const;
};

struct MlpParameters {
    Eigen::MatrixXd w_r;                // layers[0].units x state_width (may be 0x0)
    std::vector<Eigen::MatrixXd> w;     // w[l]: layers[l].units x fan_in(l)
    std::vector<Eigen::VectorXd> b;     // b[l]: layers[l].units

    void check_shapes(const MlpSpec& spec) const;
};

/// Per-layer pre/post activations retained for the backward pass, together
/// with the inputs that produced them.
struct MlpCache {
    Eigen::VectorXd state;
    Eigen::VectorXd input;
    std::vector<Eigen::VectorXd> pre;   // W x + b per layer
    std::vector<Eigen::VectorXd> post;  // sigma(pre) per layer
};

struct MlpGradients {
    Eigen::MatrixXd w_r;
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    Eigen::VectorXd state_cotangent;
    Eigen::VectorXd input_cotangent;
};

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const MlpParameters& params,
                            const Eigen::VectorXd& state, const Eigen::VectorXd& input,
                            MlpCache* cache = nullptr);

/// Reverse pass through a cached forward evaluation. Gradients include the
/// l2 term 2*alpha*W per layer; biases carry no penalty.
MlpGradients mlp_backward(const MlpSpec& spec, const MlpParameters& params,
                          const MlpCache& cache, const Eigen::VectorXd& cotangent);

/// Accumulate into pre-allocated gradients (shapes must match); used by the
/// rollout backward loop to avoid per-step allocation churn.
void mlp_backward_accumulate(const MlpSpec& spec, const MlpParameters& params,
                             const MlpCache& cache, const Eigen::VectorXd& cotangent,
                             MlpGradients& grads);

MlpGradients zero_gradients(const MlpSpec& spec);

/// Sum of alpha_l * ||W||_F^2 over layers (the penalty the l2 gradient
/// terms correspond to).
double l2_penalty(const MlpSpec& spec, const MlpParameters& params);

/// Glorot-uniform weights, zero biases, deterministic per seed.
MlpParameters init_parameters(const MlpSpec& spec, std::uint64_t seed);

int count_mlp_parameters(const MlpSpec& spec);

}  // namespace tnn
