#include "tnn/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

namespace tnn {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) throw ArgumentError("median of empty set");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + long(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + long(mid) - 1, v.end());
    return 0.5 * (v[mid - 1] + hi);
}

}  // namespace

EvalReport evaluate(const TnnModel& model, const std::vector<MeasurementProfile>& profiles,
                    const EvalOptions& options) {
    const TnnTopology& topology = model.topology;
    const ChannelSchema& schema = model.schema;
    const int m = topology.m;

    Eigen::VectorXd divisors(m);
    for (int i = 0; i < m; ++i) divisors[i] = schema.divisor_for(schema.targets[i]);

    RolloutOptions ropts;
    ropts.divergence_bound = options.divergence_bound;

    EvalReport report;
    report.per_target_mse = Eigen::VectorXd::Zero(m);
    report.parameter_count = count_parameters(topology);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(m);
    long count = 0;
    double linf = 0.0;

    for (const auto& profile : profiles) {
        Eigen::VectorXd init(m);
        switch (options.init_mode) {
            case InitMode::GroundTruth: init = profile.targets(schema, 0); break;
            case InitMode::Ambient: {
                // ambient approximation: first ancillary channel, or the
                // fixed value when the schema has no ancillary node
                if (schema.ancillary_count() > 0)
                    init.setConstant(profile.ancillaries(schema, 0)[0]);
                else
                    init.setConstant(options.fixed_value_kelvin /
                                     schema.divisor_for(schema.targets[0]));
                break;
            }
            case InitMode::Fixed:
                for (int i = 0; i < m; ++i) init[i] = options.fixed_value_kelvin / divisors[i];
                break;
        }
        try {
            const Eigen::MatrixXd est =
                rollout(topology, model.parameters, schema, profile, init, ropts);
            const long off = schema.observable_count() + schema.ancillary_count();
            for (long k = 0; k < profile.length(); ++k)
                for (int i = 0; i < m; ++i) {
                    const double e = (est(k, i) - profile.values(k, off + i)) * divisors[i];
                    sq[i] += e * e;
                    linf = std::max(linf, std::abs(e));
                }
            count += profile.length();
        } catch (const DivergenceError&) {
            report.failed_profiles.push_back(profile.id);
        }
    }
    if (count > 0) report.per_target_mse = sq / double(count);
    report.aggregate_mse = report.per_target_mse.mean();
    report.linf = linf;
    return report;
}

ConductanceProfile conductance_medians(const std::vector<TnnModel>& models,
                                       const std::vector<double>& model_mse, double mse_cutoff,
                                       int samples, std::uint64_t seed) {
    if (models.size() != model_mse.size())
        throw ArgumentError("one MSE value per model is required");
    if (samples < 1) throw ArgumentError("sample count must be >= 1");

    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < models.size(); ++i)
        if (model_mse[i] < mse_cutoff) selected.push_back(i);
    if (selected.empty())
        throw ArgumentError("no model below the MSE cutoff of " + std::to_string(mse_cutoff));

    const int pairs = models[selected.front()].topology.pair_count();
    // per-model median over random inputs, then median across models
    std::vector<std::vector<double>> per_model;
    per_model.resize(std::size_t(pairs));
    for (std::size_t mi : selected) {
        const TnnModel& model = models[mi];
        if (model.topology.pair_count() != pairs)
            throw ShapeError("models disagree on the pair count");
        std::mt19937_64 rng(seed);  // same input draw for every model
        std::uniform_real_distribution<double> uni(0.0, 1.3);
        std::vector<std::vector<double>> activations;
        activations.resize(std::size_t(pairs));
        for (int s = 0; s < samples; ++s) {
            Eigen::VectorXd state(model.topology.m);
            Eigen::VectorXd anc(model.topology.n);
            Eigen::VectorXd obs(model.topology.o);
            for (auto& x : state) x = uni(rng);
            for (auto& x : anc) x = uni(rng);
            for (auto& x : obs) x = uni(rng);
            const ThermalParameters tp = evaluate_thermal_parameters(
                model.topology, model.parameters, state, anc, obs);
            for (int p = 0; p < pairs; ++p)
                activations[std::size_t(p)].push_back(tp.gamma[p]);
        }
        for (int p = 0; p < pairs; ++p)
            per_model[std::size_t(p)].push_back(median(activations[std::size_t(p)]));
    }

    ConductanceProfile profile;
    profile.medians = Eigen::VectorXd(pairs);
    for (int p = 0; p < pairs; ++p) profile.medians[p] = median(per_model[std::size_t(p)]);
    profile.mse_cutoff = mse_cutoff;
    profile.models_used = int(selected.size());
    return profile;
}

PruneResult prune(const TnnTopology& topology, const ConductanceProfile& profile,
                  double threshold) {
    if (threshold < 0.0) throw ArgumentError("prune threshold must be >= 0");
    if (profile.medians.size() != topology.pair_count())
        throw ShapeError("conductance profile does not match the topology");

    PruneResult result;
    result.topology = topology;
    for (int s = 0; s < topology.pair_count(); ++s) {
        if (profile.medians[s] < threshold && !topology.mask.count(s)) {
            result.topology.mask.insert(s);
            result.newly_masked.push_back(s);
        }
    }

    const ConductancePairIndex index(topology.m + topology.n);
    for (int i = 0; i < topology.m; ++i) {
        bool all_masked = true;
        for (int j = 0; j < topology.m + topology.n && all_masked; ++j)
            if (j != i && !result.topology.mask.count(index.slot(i, j))) all_masked = false;
        if (all_masked)
            result.warnings.push_back("state node " + std::to_string(i) +
                                      " has every conductance pruned and becomes dynamically "
                                      "isolated unless its losses are nonzero");
    }
    return result;
}

std::vector<RecoveryRow> detuned_init_study(const TnnModel& model,
                                            const MeasurementProfile& profile,
                                            const std::vector<double>& offsets_kelvin,
                                            const InitStudyOptions& options) {
    const TnnTopology& topology = model.topology;
    const ChannelSchema& schema = model.schema;
    const int m = topology.m;
    Eigen::VectorXd divisors(m);
    for (int i = 0; i < m; ++i) divisors[i] = schema.divisor_for(schema.targets[i]);

    RolloutOptions ropts;
    ropts.divergence_bound = options.divergence_bound;

    std::vector<RecoveryRow> rows;
    for (double offset : offsets_kelvin) {
        Eigen::VectorXd init = profile.targets(schema, 0);
        for (int i = 0; i < m; ++i) init[i] += offset / divisors[i];

        RecoveryRow row;
        row.offset_kelvin = offset;
        row.recovery_seconds.assign(std::size_t(m), kNeverRecovers);
        try {
            const Eigen::MatrixXd est =
                rollout(topology, model.parameters, schema, profile, init, ropts);
            const long off = schema.observable_count() + schema.ancillary_count();
            const long K = profile.length();
            for (int i = 0; i < m; ++i) {
                // last sample outside the band determines the recovery time
                long last_outside = -1;
                for (long k = 0; k < K; ++k) {
                    const double e = (est(k, i) - profile.values(k, off + i)) * divisors[i];
                    if (std::abs(e) > options.band_kelvin) last_outside = k;
                }
                if (last_outside + 1 < K)
                    row.recovery_seconds[std::size_t(i)] =
                        double(last_outside + 1) * schema.sample_time;
            }
        } catch (const DivergenceError&) {
            // never recovers; keep the infinities
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

GridSearchResult grid_search(const ChannelSchema& schema, const FoldedProfiles& folds,
                             const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                             const GridSearchOptions& options) {
    if (options.layer_range.empty() || options.unit_grid.empty())
        throw ArgumentError("grid search needs a non-empty grid");
    if (seeds.empty()) throw ArgumentError("grid search needs at least one seed");

    std::vector<GridCandidate> grid;
    for (int lp : options.layer_range)
        for (int np : options.unit_grid)
            for (int lg : options.layer_range)
                for (int ng : options.unit_grid) {
                    GridCandidate c;
                    c.pi_layers = lp;
                    c.pi_units = np;
                    c.gamma_layers = lg;
                    c.gamma_units = ng;
                    grid.push_back(c);
                }
    if (options.budget > 0 && options.budget < int(grid.size())) {
        std::mt19937_64 rng(options.sample_seed);
        std::shuffle(grid.begin(), grid.end(), rng);
        grid.resize(std::size_t(options.budget));
    }

    GridSearchResult result;
    result.candidates = grid;
    auto run_candidate = [&](GridCandidate& c) {
        std::vector<LayerSpec> pi_hidden(std::size_t(c.pi_layers),
                                         LayerSpec{c.pi_units, options.hidden_activation, 0.0});
        std::vector<LayerSpec> gamma_hidden(std::size_t(c.gamma_layers),
                                            LayerSpec{c.gamma_units, options.hidden_activation, 0.0});
        try {
            TnnTopology topology =
                make_topology(schema.target_count(), schema.ancillary_count(),
                              schema.observable_count(), pi_hidden, gamma_hidden);
            topology.mask = options.mask;
            c.parameter_count = count_parameters(topology);

            double mse_sum = 0.0;
            int ok = 0;
            for (std::uint64_t seed : seeds) {
                TrainConfig tc = config;
                tc.seed = seed;
                FitResult run = fit(topology, schema, folds, tc);
                TnnModel model{topology, run.parameters, schema};
                mse_sum += evaluate(model, folds.generalization).aggregate_mse;
                ++ok;
            }
            c.generalization_mse = mse_sum / double(ok);
        } catch (const std::exception& e) {
            c.failed = true;
            c.error = e.what();
        }
    };

    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        for (auto& c : result.candidates) run_candidate(c);
    } else {
        // candidates are independent; each thread owns its slice of the vector
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < result.candidates.size(); i = next++)
                    run_candidate(result.candidates[i]);
            });
        for (auto& th : pool) th.join();
    }

    // non-dominated subset over (parameter count, MSE), failures excluded
    for (std::size_t i = 0; i < result.candidates.size(); ++i) {
        const auto& a = result.candidates[i];
        if (a.failed) continue;
        bool dominated = false;
        for (std::size_t j = 0; j < result.candidates.size() && !dominated; ++j) {
            if (i == j) continue;
            const auto& b = result.candidates[j];
            if (b.failed) continue;
            const bool no_worse = b.parameter_count <= a.parameter_count &&
                                  b.generalization_mse <= a.generalization_mse;
            const bool better = b.parameter_count < a.parameter_count ||
                                b.generalization_mse < a.generalization_mse;
            if (no_worse && better) dominated = true;
        }
        if (!dominated) result.pareto.push_back(i);
    }
    return result;
}

}  // namespace tnn
