#include "tnn/plant.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace tnn {

double ConductanceFunction::evaluate(const Eigen::VectorXd& state,
                                     const Eigen::VectorXd& observables) const {
    double v = 0.0;
    switch (kind) {
        case Kind::Constant: v = c0; break;
        case Kind::AffineInObservable: v = c0 + c1 * observables[observable]; break;
        case Kind::PolynomialInState: {
            const double x = state[node];
            v = c0 + c1 * x + c2 * x * x;
            break;
        }
    }
    return v > 0.0 ? v : 0.0;
}

double LossFunction::evaluate(const Eigen::VectorXd& observables) const {
    switch (kind) {
        case Kind::Constant: return c0 > 0.0 ? c0 : 0.0;
        case Kind::QuadraticInObservable: {
            const double x = observables[observable];
            const double v = c0 + c1 * x * x;
            return v > 0.0 ? v : 0.0;
        }
    }
    return 0.0;
}

void PlantSpec::validate() const {
    if (m < 1) throw ArgumentError("plant needs at least one state node");
    if (n < 0 || o < 0) throw ArgumentError("plant node counts must be >= 0");
    if (capacitances.size() != m) throw ArgumentError("plant needs one capacitance per state node");
    for (int i = 0; i < m; ++i)
        if (capacitances[i] <= 0.0) throw ArgumentError("capacitances must be > 0");
    if (long(losses.size()) != m) throw ArgumentError("plant needs one loss function per state node");
    if (substeps < 1) throw ArgumentError("substeps must be >= 1");
    for (const auto& [slot, fn] : conductances) {
        if (slot < 0 || slot >= pair_count()) throw ArgumentError("conductance slot out of range");
        if (fn.kind == ConductanceFunction::Kind::AffineInObservable &&
            (fn.observable < 0 || fn.observable >= o))
            throw ArgumentError("conductance observable index out of range");
        if (fn.kind == ConductanceFunction::Kind::PolynomialInState &&
            (fn.node < 0 || fn.node >= m))
            throw ArgumentError("conductance state node out of range");
    }
    for (const auto& fn : losses)
        if (fn.kind == LossFunction::Kind::QuadraticInObservable &&
            (fn.observable < 0 || fn.observable >= o))
            throw ArgumentError("loss observable index out of range");
}

PlantSpec default_plant() {
    PlantSpec spec;
    spec.m = 3;
    spec.n = 1;
    spec.o = 2;  // (speed, current)
    spec.capacitances = Eigen::VectorXd(3);
    spec.capacitances << 2.0, 4.0, 3.0;  // seconds-scale time constants

    const ConductancePairIndex index(spec.m + spec.n);
    auto constant = [](double c) {
        ConductanceFunction f;
        f.kind = ConductanceFunction::Kind::Constant;
        f.c0 = c;
        return f;
    };
    ConductanceFunction affine;  // speed-dependent (convection-like)
    affine.kind = ConductanceFunction::Kind::AffineInObservable;
    affine.observable = 0;
    affine.c0 = 0.5;
    affine.c1 = 1.0;

    spec.conductances[index.slot(0, 1)] = affine;
    // pair (0, 2) stays disconnected
    spec.conductances[index.slot(1, 2)] = constant(1.0);
    spec.conductances[index.slot(0, 3)] = constant(0.8);
    spec.conductances[index.slot(1, 3)] = constant(0.6);
    spec.conductances[index.slot(2, 3)] = constant(1.2);

    auto quad = [](double c, int obs) {
        LossFunction f;
        f.kind = LossFunction::Kind::QuadraticInObservable;
        f.c1 = c;
        f.observable = obs;
        return f;
    };
    spec.losses = {quad(1.0, 1), quad(0.5, 1), quad(0.3, 1)};
    spec.substeps = 10;
    return spec;
}

ChannelSchema plant_schema(const PlantSpec& spec, double sample_time) {
    ChannelSchema schema;
    for (int i = 0; i < spec.o; ++i) schema.exogenous.push_back("xi_" + std::to_string(i));
    for (int i = 0; i < spec.n; ++i) schema.ancillary.push_back("anc_" + std::to_string(i));
    for (int i = 0; i < spec.m; ++i) schema.targets.push_back("theta_" + std::to_string(i));
    for (const auto& name : schema.exogenous) schema.divisors[name] = 1.0;
    for (const auto& name : schema.ancillary) schema.divisors[name] = 100.0;
    for (const auto& name : schema.targets) schema.divisors[name] = 100.0;
    schema.sample_time = sample_time;
    return schema;
}

namespace {

/// Dwell/random-walk excitation for one channel.
Eigen::VectorXd generate_excitation(const ExcitationSpec& e, long samples, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> level(e.level_min, e.level_max);
    std::uniform_int_distribution<long> dwell(e.dwell_min, std::max(e.dwell_min, e.dwell_max));
    std::normal_distribution<double> step(0.0, e.walk_sigma);

    Eigen::VectorXd out(samples);
    double value = level(rng);
    long k = 0;
    bool walking = false;
    while (k < samples) {
        const long seg = std::min(dwell(rng), samples - k);
        if (!walking) {
            value = level(rng);
            for (long i = 0; i < seg; ++i) out[k++] = value;
        } else {
            for (long i = 0; i < seg; ++i) {
                value = std::clamp(value + step(rng), e.level_min, e.level_max);
                out[k++] = value;
            }
        }
        walking = !walking;
    }
    return out;
}

void check_stability(const PlantSpec& spec, const Eigen::VectorXd& state,
                     const Eigen::VectorXd& gamma, long sample) {
    if (state.allFinite() && state.cwiseAbs().maxCoeff() <= 1e3) return;
    int node = 0;
    double worst = 0.0;
    for (int i = 0; i < spec.m; ++i)
        if (!std::isfinite(state[i]) || std::abs(state[i]) > worst) {
            worst = std::abs(state[i]);
            node = i;
        }
    const ConductancePairIndex index(spec.m + spec.n);
    int bad_slot = -1;
    double g_max = -1.0;
    for (int j = 0; j < spec.m + spec.n; ++j) {
        if (j == node) continue;
        const int sl = index.slot(node, j);
        if (gamma[sl] > g_max) {
            g_max = gamma[sl];
            bad_slot = sl;
        }
    }
    if (bad_slot < 0)
        throw NumericalError("plant integration unstable at sample " + std::to_string(sample) +
                             ": node " + std::to_string(node) + " diverged");
    const auto [pi, pj] = index.pair(bad_slot);
    throw NumericalError("plant integration unstable at sample " + std::to_string(sample) +
                         ": node " + std::to_string(node) + " diverged; strongest conductance is "
                         "pair (" + std::to_string(pi) + ", " + std::to_string(pj) + ")");
}

}  // namespace

SyntheticDataset simulate(const PlantSpec& spec, const std::vector<double>& profile_seconds,
                          double sample_time, std::uint64_t seed) {
    spec.validate();
    if (sample_time <= 0.0) throw ArgumentError("sample time must be > 0");
    const ConductancePairIndex index(spec.m + spec.n);
    SyntheticDataset out;

    std::mt19937_64 rng(seed);
    int profile_no = 0;
    for (double duration : profile_seconds) {
        if (duration < 2.0 * sample_time)
            throw ArgumentError("profile duration must cover at least 2 samples");
        const long K = long(duration / sample_time) + 1;

        Eigen::MatrixXd obs(K, spec.o), anc(K, spec.n);
        for (int c = 0; c < spec.o; ++c) obs.col(c) = generate_excitation(spec.excitation, K, rng);
        for (int c = 0; c < spec.n; ++c) anc.col(c) = generate_excitation(spec.excitation, K, rng);

        std::uniform_real_distribution<double> init(0.2, 0.8);
        Eigen::VectorXd state(spec.m);
        for (int i = 0; i < spec.m; ++i) state[i] = init(rng);

        Eigen::MatrixXd values(K, spec.o + spec.n + spec.m);
        Eigen::MatrixXd gamma_true(K, spec.pair_count());
        Eigen::MatrixXd loss_true(K, spec.m);

        auto eval_gamma = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& x) {
            Eigen::VectorXd g = Eigen::VectorXd::Zero(spec.pair_count());
            for (const auto& [slot, fn] : spec.conductances) g[slot] = fn.evaluate(s, x);
            return g;
        };

        const double dt = sample_time / double(spec.substeps);
        for (long k = 0; k < K; ++k) {
            const Eigen::VectorXd xi = obs.row(k).transpose();
            const Eigen::VectorXd at = anc.row(k).transpose();
            values.row(k).segment(0, spec.o) = xi.transpose();
            values.row(k).segment(spec.o, spec.n) = at.transpose();
            values.row(k).segment(spec.o + spec.n, spec.m) = state.transpose();
            gamma_true.row(k) = eval_gamma(state, xi).transpose();
            for (int i = 0; i < spec.m; ++i) loss_true(k, i) = spec.losses[std::size_t(i)].evaluate(xi);

            if (k + 1 == K) break;
            // zero-order hold on the inputs across the sample interval
            for (int sub = 0; sub < spec.substeps; ++sub) {
                const Eigen::VectorXd g = eval_gamma(state, xi);
                Eigen::VectorXd deriv(spec.m);
                for (int i = 0; i < spec.m; ++i) {
                    double acc = spec.losses[std::size_t(i)].evaluate(xi);
                    for (int j = 0; j < spec.m; ++j)
                        if (j != i) acc += (state[j] - state[i]) * g[index.slot(i, j)];
                    for (int a = 0; a < spec.n; ++a)
                        acc += (at[a] - state[i]) * g[index.slot(i, spec.m + a)];
                    deriv[i] = acc / spec.capacitances[i];
                }
                state += dt * deriv;
                check_stability(spec, state, g, k);
            }
        }

        MeasurementProfile profile;
        profile.id = "plant-" + std::to_string(seed) + "-" + std::to_string(profile_no++);
        profile.values = std::move(values);
        out.profiles.push_back(std::move(profile));
        out.gamma_true.push_back(std::move(gamma_true));
        out.loss_true.push_back(std::move(loss_true));
    }
    return out;
}

SyntheticDataset simulate(const PlantSpec& spec, double duration, double sample_time,
                          std::uint64_t seed, int profiles) {
    if (profiles < 1) throw ArgumentError("profile count must be >= 1");
    std::vector<double> seconds(std::size_t(profiles), duration / double(profiles));
    return simulate(spec, seconds, sample_time, seed);
}

PlantSpec disconnected_pair_spec(const PlantSpec& base, int pair_slot) {
    if (pair_slot < 0 || pair_slot >= base.pair_count())
        throw ArgumentError("pair slot out of range");
    PlantSpec spec = base;
    spec.conductances.erase(pair_slot);
    return spec;
}

void write_dataset_csv(const SyntheticDataset& dataset, const PlantSpec& spec,
                       const std::string& csv_path, const std::string& truth_path) {
    const ChannelSchema schema = plant_schema(spec, 1.0);  // divisors only
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write '" + csv_path + "'");
    csv.precision(17);
    csv << "profile_id";
    for (const auto& name : schema.all_channels()) csv << "," << name;
    csv << "\n";
    const auto channels = schema.all_channels();
    for (const auto& profile : dataset.profiles) {
        for (long k = 0; k < profile.length(); ++k) {
            csv << profile.id;
            for (std::size_t c = 0; c < channels.size(); ++c)
                csv << "," << profile.values(k, long(c)) * schema.divisor_for(channels[c]);
            csv << "\n";
        }
    }

    std::ofstream truth(truth_path);
    if (!truth) throw std::runtime_error("cannot write '" + truth_path + "'");
    truth.precision(17);
    truth << "profile_id,k";
    for (int s = 0; s < spec.pair_count(); ++s) truth << ",gamma_" << s;
    for (int i = 0; i < spec.m; ++i) truth << ",p_" << i;
    truth << "\n";
    for (std::size_t p = 0; p < dataset.profiles.size(); ++p) {
        const auto& profile = dataset.profiles[p];
        for (long k = 0; k < profile.length(); ++k) {
            truth << profile.id << "," << k;
            for (int s = 0; s < spec.pair_count(); ++s) truth << "," << dataset.gamma_true[p](k, s);
            for (int i = 0; i < spec.m; ++i) truth << "," << dataset.loss_true[p](k, i);
            truth << "\n";
        }
    }
}

}  // namespace tnn
