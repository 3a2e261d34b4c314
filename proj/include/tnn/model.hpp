#pragma once

// The thermal cell: a recurrent state-space model over m node temperatures
// whose power losses (pi), thermal conductances (gamma), and inverse
// capacitances (kappa) are learned function approximators.

#include <Eigen/Dense>
#include <set>
#include <string>
#include <vector>

#include "tnn/data.hpp"
#include "tnn/nn.hpp"

namespace tnn {

/// Canonical bijection between unordered node pairs {i, j}, i < j, over the
/// m state nodes followed by the n ancillary nodes, and flat output slots of
/// the conductance network.
class ConductancePairIndex {
public:
    explicit ConductancePairIndex(int node_count);

    int node_count() const { return nodes_; }
    int pair_count() const { return nodes_ * (nodes_ - 1) / 2; }

    /// Slot of the unordered pair; symmetric in its arguments.
    int slot(int i, int j) const;
    /// Inverse mapping: slot -> (i, j) with i < j.
    std::pair<int, int> pair(int slot) const;

private:
    int nodes_;
};

struct TnnTopology {
    int m = 1;  // state nodes (targets)
    int n = 0;  // ancillary nodes
    int o = 0;  // observables

    // One spec when dedicated_branches is false; m specs (output width 1,
    // identical inputs) when true.
    std::vector<MlpSpec> pi;
    MlpSpec gamma;
    bool dedicated_branches = false;
    std::set<int> mask;  // gamma slots forced to zero conductance

    int pair_count() const { return (m + n) * (m + n - 1) / 2; }
    int scheduling_width() const { return n + o; }  // phi = [anc; obs]
    void validate() const;
};

/// Convenience constructor: hidden layers given as (units, activation, l2)
/// triples, linear output layers sized from the topology.
TnnTopology make_topology(int m, int n, int o, const std::vector<LayerSpec>& pi_hidden,
                          const std::vector<LayerSpec>& gamma_hidden,
                          bool dedicated_branches = false);

struct TnnParameters {
    std::vector<MlpParameters> pi;  // size matches topology.pi
    MlpParameters gamma;
    Eigen::VectorXd theta_c;  // log10 inverse capacitances, kappa = 10^theta_c
};

TnnParameters init_tnn_parameters(const TnnTopology& topology, std::uint64_t seed);

/// Flat-vector view of the trainable parameters (optimizer/serialization
/// order: theta_c, pi networks, gamma network; within a network W_r, then
/// W/b per layer, row-major).
long flat_parameter_size(const TnnTopology& topology);
Eigen::VectorXd flatten_parameters(const TnnTopology& topology, const TnnParameters& params);
TnnParameters unflatten_parameters(const TnnTopology& topology, const Eigen::VectorXd& flat);

/// Evaluated thermal quantities at one step, all elementwise non-negative.
struct ThermalParameters {
    Eigen::VectorXd kappa;  // m
    Eigen::VectorXd pi;     // m
    Eigen::VectorXd gamma;  // pair_count, masked slots exactly 0
};

ThermalParameters evaluate_thermal_parameters(const TnnTopology& topology,
                                              const TnnParameters& params,
                                              const Eigen::VectorXd& state,
                                              const Eigen::VectorXd& ancillary,
                                              const Eigen::VectorXd& observables);

/// One explicit-Euler step of the node ODE with the given thermal
/// parameters. Ancillary-ancillary slots of gamma are never read.
Eigen::VectorXd cell_step(const TnnTopology& topology, double sample_time,
                          const Eigen::VectorXd& state, const Eigen::VectorXd& ancillary,
                          const ThermalParameters& thermal);

struct RolloutOptions {
    double divergence_bound = 10.0;  // normalized units
};

/// Roll the cell over a whole profile. Row k of the result is the estimate
/// at sample k; row 0 is the provided initial state.
Eigen::MatrixXd rollout(const TnnTopology& topology, const TnnParameters& params,
                        const ChannelSchema& schema, const MeasurementProfile& profile,
                        const Eigen::VectorXd& initial_state,
                        const RolloutOptions& options = {});

/// Loss and exact gradients over one TBPTT window [start, start+length).
/// The entering state is treated as a constant (gradient truncation
/// boundary); predictions at samples start+1 .. start+length-1 are scored
/// against the profile's targets. Loss is the mean squared error in
/// normalized units plus the networks' l2 penalties. Returns the loss and
/// writes gradients for the flat parameter vector; `final_state` (when
/// non-null) receives the last estimate for chaining the next window.
double tbptt_gradients(const TnnTopology& topology, const TnnParameters& params,
                       const ChannelSchema& schema, const MeasurementProfile& profile,
                       long start, long length, const Eigen::VectorXd& initial_state,
                       Eigen::VectorXd& gradient, Eigen::VectorXd* final_state = nullptr,
                       const RolloutOptions& options = {});

/// Exact count of trainable scalars. Masked gamma slots remove their output
/// unit (its incoming weights and bias) from the count.
long count_parameters(const TnnTopology& topology);

/// Self-describing model document: topology, parameters, pruning mask and
/// normalization schema in one JSON file.
struct TnnModel {
    TnnTopology topology;
    TnnParameters parameters;
    ChannelSchema schema;
};

void save_model(const TnnModel& model, const std::string& path);
TnnModel load_model(const std::string& path);
std::string model_to_json(const TnnModel& model);
TnnModel model_from_json(const std::string& text);

}  // namespace tnn
