#pragma once

// Measurement-profile loading, normalization, subsequence splitting and
// cross-validation fold handling.

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tnn/errors.hpp"

namespace tnn {

/// Names and normalization divisors of the measured channels. Column order
/// throughout the toolkit is exogenous, ancillary, target.
struct ChannelSchema {
    std::vector<std::string> exogenous;  // observables xi (e.g. u_s, i_s, omega)
    std::vector<std::string> ancillary;  // boundary temperatures (ambient, coolant)
    std::vector<std::string> targets;    // temperatures the model estimates
    std::map<std::string, double> divisors;  // per-channel normalization divisor
    double sample_time = 0.5;                // T_s in seconds

    int observable_count() const { return int(exogenous.size()); }
    int ancillary_count() const { return int(ancillary.size()); }
    int target_count() const { return int(targets.size()); }
    int channel_count() const { return observable_count() + ancillary_count() + target_count(); }

    std::vector<std::string> all_channels() const;
    double divisor_for(const std::string& channel) const;
    void validate() const;
};

/// One contiguous drive cycle, normalized. Immutable after construction.
struct MeasurementProfile {
    std::string id;
    Eigen::MatrixXd values;  // K x (o+n+m), columns ordered per schema

    long length() const { return values.rows(); }

    // column-block views over the schema layout
    Eigen::VectorXd observables(const ChannelSchema& s, long k) const {
        return values.row(k).segment(0, s.observable_count()).transpose();
    }
    Eigen::VectorXd ancillaries(const ChannelSchema& s, long k) const {
        return values.row(k).segment(s.observable_count(), s.ancillary_count()).transpose();
    }
    Eigen::VectorXd targets(const ChannelSchema& s, long k) const {
        return values.row(k).segment(s.observable_count() + s.ancillary_count(),
                                     s.target_count()).transpose();
    }
};

enum class FoldSet { Train, Fold1, Fold2, Generalization };

FoldSet fold_set_from_name(const std::string& name);
const char* fold_set_name(FoldSet s);

/// Assignment of every profile id to exactly one set.
struct FoldPlan {
    std::map<std::string, FoldSet> assignment;
};

struct FoldedProfiles {
    std::vector<MeasurementProfile> train;
    std::vector<MeasurementProfile> fold1;
    std::vector<MeasurementProfile> fold2;
    std::vector<MeasurementProfile> generalization;
};

/// u_s = hypot(u_d, u_q), i_s = hypot(i_d, i_q).
std::pair<double, double> derive_vector_norms(double u_d, double u_q, double i_d, double i_q);

/// Read a CSV with a `profile_id` column and either the schema channels
/// directly or the raw d/q components they derive from. Values come out
/// normalized by the schema divisors; rows are grouped by profile id in
/// order of first appearance. Unknown columns are ignored (reported through
/// `warnings` when non-null).
std::vector<MeasurementProfile> ingest_csv(const std::string& path, const ChannelSchema& schema,
                                           std::vector<std::string>* warnings = nullptr);

/// Cut a profile into consecutive non-overlapping windows of `length`
/// samples; a trailing remainder shorter than 2 samples is dropped.
std::vector<MeasurementProfile> split_subsequences(const MeasurementProfile& profile, long length);

/// Partition profiles per plan. Every profile id must be assigned; the
/// fold and generalization sets must be non-empty.
FoldedProfiles make_folds(const std::vector<MeasurementProfile>& profiles, const FoldPlan& plan);

}  // namespace tnn
