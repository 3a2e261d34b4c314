#pragma once

// Optimizers, gradient clipping and the epoch loop with fold-based early
// stopping.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tnn/data.hpp"
#include "tnn/model.hpp"

namespace tnn {

enum class OptimizerKind { Adam, Nadam, SgdMomentum };

OptimizerKind optimizer_from_name(const std::string& name);
const char* optimizer_name(OptimizerKind k);

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::Nadam;
    double learning_rate = 1e-2;
    long tbptt_length = 128;      // samples per window
    double clip_norm = 1.0;       // global l2 threshold; <= 0 disables clipping
    int max_epochs = 100;
    int patience = 10;            // early-stopping patience in epochs
    std::uint64_t seed = 0;
    bool reset_state_with_ground_truth = false;  // per-window ground-truth reset
    double divergence_bound = 10.0;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;        // mean window loss, normalized units
    double validation_mse = 0.0;    // full-rollout MSE on the validation fold, K^2
    double gradient_norm = 0.0;     // mean pre-clip global norm
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_validation_mse = 0.0;
    double wall_clock_seconds = 0.0;
    std::uint64_t seed = 0;
    long parameter_count = 0;
};

/// Scale all gradients by threshold/norm when the global l2 norm exceeds
/// the threshold. Direction is preserved.
void clip_gradients(Eigen::VectorXd& gradients, double threshold);

/// First-order moment state shared by all optimizer kinds.
struct OptimizerState {
    Eigen::VectorXd m;  // first moment / momentum
    Eigen::VectorXd v;  // second moment (unused by SGD)
    long step = 0;
};

/// One parameter update in place. Adam/Nadam use beta1=0.9, beta2=0.999,
/// eps=1e-8 with bias correction; SGD uses momentum 0.9.
void optimizer_step(OptimizerKind kind, OptimizerState& state, Eigen::VectorXd& params,
                    const Eigen::VectorXd& gradients, double learning_rate);

/// Full-rollout mean squared error in Kelvin^2 over a set of profiles,
/// ground-truth initialized, sample-weighted. Diverged profiles count as
/// the divergence bound error unless `strict`.
double validation_mse(const TnnTopology& topology, const TnnParameters& params,
                      const ChannelSchema& schema, const std::vector<MeasurementProfile>& profiles,
                      double divergence_bound = 10.0);

/// Which fold validates (the other is scored as test set by the caller).
enum class FoldIteration { ValidateOnFold1, ValidateOnFold2 };

struct FitResult {
    TnnParameters parameters;  // best-epoch snapshot
    TrainReport report;
};

/// Train on the folded profiles: every epoch slices each training profile
/// into consecutive TBPTT windows whose initial state chains from the
/// previous window (value only), scores the validation fold by full
/// rollouts, and stops when validation MSE fails to improve for `patience`
/// epochs.
FitResult fit(const TnnTopology& topology, const ChannelSchema& schema,
              const FoldedProfiles& folds, const TrainConfig& config,
              FoldIteration iteration = FoldIteration::ValidateOnFold1,
              std::vector<std::string>* log_lines = nullptr);

struct RepeatedFitResult {
    std::vector<FitResult> runs;           // successful runs, per seed order
    std::vector<std::uint64_t> seeds;      // seeds of successful runs
    std::vector<std::string> failures;     // per-seed error messages
    double mean_test_mse = 0.0;
    double min_test_mse = 0.0;
    double max_test_mse = 0.0;
    std::vector<double> test_mse;          // per successful run, on the test fold
};

/// Re-run fit across seeds, scoring each run's test fold (the fold not used
/// for validation). Per-seed failures are recorded, not propagated.
RepeatedFitResult repeated_fit(const TnnTopology& topology, const ChannelSchema& schema,
                               const FoldedProfiles& folds, const TrainConfig& config,
                               const std::vector<std::uint64_t>& seeds,
                               FoldIteration iteration = FoldIteration::ValidateOnFold1);

}  // namespace tnn
