#include "tnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace tnn {

OptimizerKind optimizer_from_name(const std::string& name) {
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "nadam") return OptimizerKind::Nadam;
    if (name == "sgd" || name == "sgd_momentum") return OptimizerKind::SgdMomentum;
    throw ArgumentError("unknown optimizer: " + name);
}

const char* optimizer_name(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::Nadam: return "nadam";
        case OptimizerKind::SgdMomentum: return "sgd_momentum";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ArgumentError("learning rate must be > 0");
    if (tbptt_length < 2) throw ArgumentError("TBPTT length must be >= 2");
    if (patience < 1) throw ArgumentError("patience must be >= 1");
    if (max_epochs < 1) throw ArgumentError("max epochs must be >= 1");
}

void clip_gradients(Eigen::VectorXd& gradients, double threshold) {
    if (threshold <= 0.0) throw ArgumentError("clip threshold must be > 0");
    if (!gradients.allFinite()) throw NumericalError("non-finite gradient before clipping");
    const double norm = gradients.norm();
    if (norm > threshold) gradients *= threshold / norm;
}

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
constexpr double kMomentum = 0.9;
}  // namespace

void optimizer_step(OptimizerKind kind, OptimizerState& state, Eigen::VectorXd& params,
                    const Eigen::VectorXd& gradients, double learning_rate) {
    if (learning_rate <= 0.0) throw ArgumentError("learning rate must be > 0");
    if (state.step == 0) {
        state.m = Eigen::VectorXd::Zero(params.size());
        state.v = Eigen::VectorXd::Zero(params.size());
    }
    if (state.m.size() != params.size() || gradients.size() != params.size())
        throw ShapeError("optimizer state does not match the parameter layout");
    ++state.step;
    const double t = double(state.step);

    switch (kind) {
        case OptimizerKind::SgdMomentum:
            state.m = kMomentum * state.m + gradients;
            params -= learning_rate * state.m;
            break;
        case OptimizerKind::Adam: {
            state.m = kBeta1 * state.m + (1.0 - kBeta1) * gradients;
            state.v = kBeta2 * state.v + (1.0 - kBeta2) * gradients.cwiseAbs2();
            const double bc1 = 1.0 - std::pow(kBeta1, t);
            const double bc2 = 1.0 - std::pow(kBeta2, t);
            params -= (learning_rate / bc1) *
                      state.m.cwiseQuotient(((state.v / bc2).cwiseSqrt().array() + kEps).matrix());
            break;
        }
        case OptimizerKind::Nadam: {
            state.m = kBeta1 * state.m + (1.0 - kBeta1) * gradients;
            state.v = kBeta2 * state.v + (1.0 - kBeta2) * gradients.cwiseAbs2();
            const double bc1 = 1.0 - std::pow(kBeta1, t);
            const double bc2 = 1.0 - std::pow(kBeta2, t);
            // Nesterov-accelerated first moment
            const Eigen::VectorXd m_bar =
                kBeta1 * state.m / bc1 + (1.0 - kBeta1) * gradients / bc1;
            params -= learning_rate *
                      m_bar.cwiseQuotient(((state.v / bc2).cwiseSqrt().array() + kEps).matrix());
            break;
        }
    }
}

double validation_mse(const TnnTopology& topology, const TnnParameters& params,
                      const ChannelSchema& schema, const std::vector<MeasurementProfile>& profiles,
                      double divergence_bound) {
    RolloutOptions opts;
    opts.divergence_bound = divergence_bound;
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(topology.m);
    long count = 0;
    Eigen::VectorXd divisors(topology.m);
    for (int i = 0; i < topology.m; ++i) divisors[i] = schema.divisor_for(schema.targets[i]);

    for (const auto& profile : profiles) {
        const long off = schema.observable_count() + schema.ancillary_count();
        try {
            const Eigen::MatrixXd est =
                rollout(topology, params, schema, profile, profile.targets(schema, 0), opts);
            for (long k = 0; k < profile.length(); ++k)
                for (int i = 0; i < topology.m; ++i) {
                    const double e = (est(k, i) - profile.values(k, off + i)) * divisors[i];
                    sq[i] += e * e;
                }
            count += profile.length();
        } catch (const DivergenceError&) {
            // score a diverged rollout at the bound, never silently skip it
            const double e = divergence_bound * divisors.maxCoeff();
            sq.array() += e * e * double(profile.length());
            count += profile.length();
        }
    }
    if (count == 0) return 0.0;
    return sq.sum() / double(count) / double(topology.m);
}

FitResult fit(const TnnTopology& topology, const ChannelSchema& schema,
              const FoldedProfiles& folds, const TrainConfig& config, FoldIteration iteration,
              std::vector<std::string>* log_lines) {
    topology.validate();
    config.validate();
    if (folds.train.empty()) throw ConfigError("training set is empty");
    if (schema.target_count() != topology.m || schema.ancillary_count() != topology.n ||
        schema.observable_count() != topology.o)
        throw ShapeError("schema does not match topology");

    const std::vector<MeasurementProfile>& val =
        iteration == FoldIteration::ValidateOnFold1 ? folds.fold1 : folds.fold2;

    TnnParameters params = init_tnn_parameters(topology, config.seed);
    Eigen::VectorXd flat = flatten_parameters(topology, params);
    OptimizerState opt_state;

    RolloutOptions ropts;
    ropts.divergence_bound = config.divergence_bound;

    TrainReport report;
    report.seed = config.seed;
    report.parameter_count = count_parameters(topology);

    Eigen::VectorXd best_flat = flat;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    int since_best = 0;

    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto e0 = std::chrono::steady_clock::now();
        double loss_sum = 0.0, grad_norm_sum = 0.0;
        long windows = 0, diverged = 0;

        for (const auto& profile : folds.train) {
            Eigen::VectorXd state = profile.targets(schema, 0);
            long start = 0;
            while (profile.length() - start >= 2) {
                const long len = std::min(config.tbptt_length, profile.length() - start);
                if (len < 2) break;
                if (config.reset_state_with_ground_truth && start > 0)
                    state = profile.targets(schema, start);
                Eigen::VectorXd grad, final_state;
                ++windows;
                try {
                    const double loss =
                        tbptt_gradients(topology, params, schema, profile, start, len, state,
                                        grad, &final_state, ropts);
                    grad_norm_sum += grad.norm();
                    if (config.clip_norm > 0.0) clip_gradients(grad, config.clip_norm);
                    optimizer_step(config.optimizer, opt_state, flat, grad, config.learning_rate);
                    params = unflatten_parameters(topology, flat);
                    loss_sum += loss;
                    state = final_state;  // value only; gradient already truncated
                } catch (const DivergenceError&) {
                    ++diverged;
                    // restart the chain from ground truth at the next window
                    const long next = start + len - 1;
                    if (next < profile.length()) state = profile.targets(schema, next);
                }
                start += len - 1;
            }
        }
        if (windows > 0 && diverged * 2 > windows)
            throw TrainingError("more than half of the TBPTT windows diverged in epoch " +
                                std::to_string(epoch) + "; try a smaller learning rate");

        const double val_mse =
            validation_mse(topology, params, schema, val, config.divergence_bound);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = windows > diverged ? loss_sum / double(windows - diverged) : 0.0;
        rec.validation_mse = val_mse;
        rec.gradient_norm = windows > diverged ? grad_norm_sum / double(windows - diverged) : 0.0;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - e0).count();
        report.epochs.push_back(rec);
        if (log_lines) {
            std::ostringstream os;
            os << epoch << "," << rec.train_loss << "," << rec.validation_mse << ","
               << rec.gradient_norm << "," << rec.seconds;
            log_lines->push_back(os.str());
        }

        if (val_mse < best_val) {
            best_val = val_mse;
            best_flat = flat;
            best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }

    report.best_epoch = best_epoch;
    report.best_validation_mse = best_val;
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    FitResult result;
    result.parameters = unflatten_parameters(topology, best_flat);
    result.report = std::move(report);
    return result;
}

RepeatedFitResult repeated_fit(const TnnTopology& topology, const ChannelSchema& schema,
                               const FoldedProfiles& folds, const TrainConfig& config,
                               const std::vector<std::uint64_t>& seeds, FoldIteration iteration) {
    if (seeds.empty()) throw ArgumentError("repeated_fit needs at least one seed");
    const std::vector<MeasurementProfile>& test =
        iteration == FoldIteration::ValidateOnFold1 ? folds.fold2 : folds.fold1;

    RepeatedFitResult out;
    for (std::uint64_t seed : seeds) {
        TrainConfig c = config;
        c.seed = seed;
        try {
            FitResult run = fit(topology, schema, folds, c, iteration);
            const double mse = validation_mse(topology, run.parameters, schema, test,
                                              config.divergence_bound);
            out.runs.push_back(std::move(run));
            out.seeds.push_back(seed);
            out.test_mse.push_back(mse);
        } catch (const std::exception& e) {
            out.failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
        }
    }
    if (!out.test_mse.empty()) {
        out.min_test_mse = *std::min_element(out.test_mse.begin(), out.test_mse.end());
        out.max_test_mse = *std::max_element(out.test_mse.begin(), out.test_mse.end());
        double s = 0.0;
        for (double v : out.test_mse) s += v;
        out.mean_test_mse = s / double(out.test_mse.size());
    }
    return out;
}

}  // namespace tnn
