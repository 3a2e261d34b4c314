#pragma once

// Evaluation metrics and the analysis studies: conductance-median pruning,
// detuned initial conditions, and the model-size grid search.

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tnn/data.hpp"
#include "tnn/model.hpp"
#include "tnn/train.hpp"

namespace tnn {

enum class InitMode { GroundTruth, Ambient, Fixed };

struct EvalOptions {
    InitMode init_mode = InitMode::GroundTruth;
    double fixed_value_kelvin = 25.0;  // used by InitMode::Fixed, channel units
    double divergence_bound = 10.0;
};

struct EvalReport {
    Eigen::VectorXd per_target_mse;  // K^2
    double aggregate_mse = 0.0;      // mean of per-target MSEs
    double linf = 0.0;               // max |error| over targets and samples, K
    long parameter_count = 0;
    std::uint64_t seed = 0;
    std::string fold_id;
    std::vector<std::string> failed_profiles;  // diverged rollouts, excluded with a flag
};

/// Roll the model over each profile and score errors in Kelvin after
/// denormalization, sample-weighted across profiles.
EvalReport evaluate(const TnnModel& model, const std::vector<MeasurementProfile>& profiles,
                    const EvalOptions& options = {});

struct ConductanceProfile {
    Eigen::VectorXd medians;     // per-pair median activation, >= 0
    double mse_cutoff = 5.0;     // model filter (K^2)
    int models_used = 0;
};

/// Median-of-medians conductance activation: every model whose MSE is below
/// the cutoff is fed `samples` i.i.d. uniform[0, 1.3] inputs (state and phi
/// alike); per-pair medians per model, then the median across models.
ConductanceProfile conductance_medians(const std::vector<TnnModel>& models,
                                       const std::vector<double>& model_mse, double mse_cutoff,
                                       int samples, std::uint64_t seed);

struct PruneResult {
    TnnTopology topology;                 // mask extended, weights untouched
    std::vector<int> newly_masked;
    std::vector<std::string> warnings;    // nodes left dynamically isolated
};

/// Add every pair whose median lies below the threshold to the pruning
/// mask. The pruned topology retrains from scratch.
PruneResult prune(const TnnTopology& topology, const ConductanceProfile& profile,
                  double threshold);

constexpr double kNeverRecovers = std::numeric_limits<double>::infinity();

struct RecoveryRow {
    double offset_kelvin = 0.0;
    std::vector<double> recovery_seconds;  // per target; inf when never in band
};

struct InitStudyOptions {
    double band_kelvin = 10.0;
    double divergence_bound = 10.0;
};

/// Start rollouts from truth[0] + offset on every target and report, per
/// target, the first time after which the Kelvin error stays inside the
/// band for the remainder of the profile.
std::vector<RecoveryRow> detuned_init_study(const TnnModel& model,
                                            const MeasurementProfile& profile,
                                            const std::vector<double>& offsets_kelvin,
                                            const InitStudyOptions& options = {});

struct GridCandidate {
    int pi_layers = 1;
    int pi_units = 1;
    int gamma_layers = 1;
    int gamma_units = 1;
    long parameter_count = 0;
    double generalization_mse = 0.0;  // K^2, mean over seeds
    bool failed = false;
    std::string error;
};

struct GridSearchOptions {
    std::vector<int> layer_range = {1, 2, 3};
    std::vector<int> unit_grid = {1, 2, 4, 8, 16, 32, 64, 128};  // exponential
    int budget = 0;  // 0 = full grid; otherwise a seeded random sample
    std::uint64_t sample_seed = 0;
    int jobs = 1;    // candidate fan-out; results stay in deterministic order
    Activation hidden_activation = Activation::Tanh;
    std::set<int> mask;  // pruning mask applied to every candidate
};

struct GridSearchResult {
    std::vector<GridCandidate> candidates;
    std::vector<std::size_t> pareto;  // indices of the non-dominated subset
};

/// Train each sampled (L_pi, n_pi, L_gamma, n_gamma) configuration with the
/// fixed TrainConfig and score the generalization fold; returns all points
/// and the non-dominated (parameter count, MSE) subset.
GridSearchResult grid_search(const ChannelSchema& schema, const FoldedProfiles& folds,
                             const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                             const GridSearchOptions& options);

}  // namespace tnn
