#pragma once

// Synthetic ground-truth LPTN: a plant with known capacitances, conductance
// functions, and loss functions, used to generate datasets on which
// identification quality is exactly measurable.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tnn/data.hpp"
#include "tnn/model.hpp"

namespace tnn {

/// Closed-form conductance primitive per node pair. Evaluations are clamped
/// at zero so a conductance never turns negative.
struct ConductanceFunction {
    enum class Kind { Constant, AffineInObservable, PolynomialInState };
    Kind kind = Kind::Constant;
    double c0 = 0.0;          // constant term
    double c1 = 0.0;          // slope (affine) / linear coefficient (polynomial)
    double c2 = 0.0;          // quadratic coefficient (polynomial)
    int observable = 0;       // index into xi (affine)
    int node = 0;             // state node whose temperature drives the polynomial

    double evaluate(const Eigen::VectorXd& state, const Eigen::VectorXd& observables) const;
};

/// Power-loss primitive per state node.
struct LossFunction {
    enum class Kind { Constant, QuadraticInObservable };
    Kind kind = Kind::Constant;
    double c0 = 0.0;
    double c1 = 0.0;       // coefficient of xi[observable]^2
    int observable = 0;

    double evaluate(const Eigen::VectorXd& observables) const;
};

/// Excitation generator: each observable and ancillary channel alternates
/// between random constant dwell segments and a bounded random walk.
struct ExcitationSpec {
    long dwell_min = 40;   // samples
    long dwell_max = 400;
    double level_min = 0.0;
    double level_max = 1.0;
    double walk_sigma = 0.01;
};

struct PlantSpec {
    int m = 1;
    int n = 0;
    int o = 0;
    Eigen::VectorXd capacitances;                    // C_i > 0, normalized J/K
    std::map<int, ConductanceFunction> conductances; // keyed by pair slot; absent = 0
    std::vector<LossFunction> losses;                // one per state node
    ExcitationSpec excitation;
    int substeps = 10;

    int pair_count() const { return (m + n) * (m + n - 1) / 2; }
    void validate() const;
};

/// The default verification plant: m=3, n=1 with one affine
/// speed-dependent conductance, one constant pair, one disconnected pair,
/// and quadratic-in-current losses. Observables are (speed, current).
PlantSpec default_plant();

/// Channel schema matching a plant's generated datasets.
ChannelSchema plant_schema(const PlantSpec& spec, double sample_time);

struct SyntheticDataset {
    std::vector<MeasurementProfile> profiles;
    // true per-step thermal parameters, aligned with the profiles
    std::vector<Eigen::MatrixXd> gamma_true;  // K x pair_count
    std::vector<Eigen::MatrixXd> loss_true;   // K x m
};

/// Integrate the plant with explicit Euler at T_s/substeps, sample at T_s,
/// and package the result in the measurement schema. One profile per entry
/// in `profile_seconds`; deterministic per seed.
SyntheticDataset simulate(const PlantSpec& spec, const std::vector<double>& profile_seconds,
                          double sample_time, std::uint64_t seed);

/// Convenience overload: `profiles` equal slices of `duration` seconds.
SyntheticDataset simulate(const PlantSpec& spec, double duration, double sample_time,
                          std::uint64_t seed, int profiles = 1);

/// Copy of the spec with one pair's conductance identically zero.
PlantSpec disconnected_pair_spec(const PlantSpec& base, int pair_slot);

/// Write the dataset as the ingestible CSV plus a truth sidecar CSV
/// (per-step gamma_true and loss_true).
void write_dataset_csv(const SyntheticDataset& dataset, const PlantSpec& spec,
                       const std::string& csv_path, const std::string& truth_path);

}  // namespace tnn
