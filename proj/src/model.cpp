#include "tnn/model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace tnn {

using nlohmann::json;

namespace {
constexpr double kLn10 = 2.302585092994045684;
}

ConductancePairIndex::ConductancePairIndex(int node_count) : nodes_(node_count) {
    if (node_count < 1) throw ArgumentError("pair index needs at least one node");
}

int ConductancePairIndex::slot(int i, int j) const {
    if (i == j || i < 0 || j < 0 || i >= nodes_ || j >= nodes_)
        throw ArgumentError("invalid node pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    if (i > j) std::swap(i, j);
    // lexicographic over the strict upper triangle
    return i * (2 * nodes_ - i - 1) / 2 + (j - i - 1);
}

std::pair<int, int> ConductancePairIndex::pair(int slot) const {
    if (slot < 0 || slot >= pair_count()) throw ArgumentError("invalid pair slot " + std::to_string(slot));
    int i = 0;
    int row_len = nodes_ - 1;
    while (slot >= row_len) {
        slot -= row_len;
        ++i;
        --row_len;
    }
    return {i, i + 1 + slot};
}

void TnnTopology::validate() const {
    if (m < 1) throw ArgumentError("topology needs at least one state node");
    if (n < 0 || o < 0) throw ArgumentError("node/observable counts must be >= 0");
    const std::size_t expected_pi = dedicated_branches ? std::size_t(m) : 1;
    if (pi.size() != expected_pi)
        throw ShapeError("topology holds " + std::to_string(pi.size()) + " pi specs, expected " +
                         std::to_string(expected_pi));
    for (const auto& spec : pi) {
        spec.validate();
        if (spec.state_width != m || spec.input_width != scheduling_width())
            throw ShapeError("pi spec input widths do not match topology");
        if (spec.output_width() != (dedicated_branches ? 1 : m))
            throw ShapeError("pi spec output width does not match topology");
    }
    gamma.validate();
    if (gamma.state_width != m || gamma.input_width != scheduling_width())
        throw ShapeError("gamma spec input widths do not match topology");
    if (gamma.output_width() != pair_count())
        throw ShapeError("gamma spec output width must equal the pair count");
    for (int s : mask)
        if (s < 0 || s >= pair_count()) throw ArgumentError("mask slot out of range");
}

TnnTopology make_topology(int m, int n, int o, const std::vector<LayerSpec>& pi_hidden,
                          const std::vector<LayerSpec>& gamma_hidden, bool dedicated_branches) {
    TnnTopology t;
    t.m = m;
    t.n = n;
    t.o = o;
    t.dedicated_branches = dedicated_branches;

    auto build = [&](const std::vector<LayerSpec>& hidden, int out_width) {
        MlpSpec spec;
        spec.state_width = m;
        spec.input_width = n + o;
        spec.use_recurrent_input = true;
        spec.layers = hidden;
        spec.layers.push_back(LayerSpec{out_width, Activation::Linear, 0.0});
        return spec;
    };
    if (dedicated_branches) {
        for (int i = 0; i < m; ++i) t.pi.push_back(build(pi_hidden, 1));
    } else {
        t.pi.push_back(build(pi_hidden, m));
    }
    t.gamma = build(gamma_hidden, t.pair_count());
    t.validate();
    return t;
}

TnnParameters init_tnn_parameters(const TnnTopology& topology, std::uint64_t seed) {
    topology.validate();
    TnnParameters p;
    std::uint64_t s = seed;
    for (const auto& spec : topology.pi) p.pi.push_back(init_parameters(spec, s++));
    p.gamma = init_parameters(topology.gamma, s++);
    // kappa starts at 1 (theta_c = 0): unit inverse capacitance in
    // normalized coordinates
    p.theta_c = Eigen::VectorXd::Zero(topology.m);
    return p;
}

namespace {

long mlp_flat_size(const MlpSpec& spec) { return count_mlp_parameters(spec); }

void write_mlp(const MlpParameters& p, Eigen::VectorXd& out, long& off) {
    auto put = [&](const Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) out[off++] = m(r, c);
    };
    if (p.w_r.size() > 0) put(p.w_r);
    for (std::size_t l = 0; l < p.w.size(); ++l) {
        put(p.w[l]);
        for (Eigen::Index i = 0; i < p.b[l].size(); ++i) out[off++] = p.b[l][i];
    }
}

void read_mlp(MlpParameters& p, const Eigen::VectorXd& in, long& off) {
    auto get = [&](Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = in[off++];
    };
    if (p.w_r.size() > 0) get(p.w_r);
    for (std::size_t l = 0; l < p.w.size(); ++l) {
        get(p.w[l]);
        for (Eigen::Index i = 0; i < p.b[l].size(); ++i) p.b[l][i] = in[off++];
    }
}

}  // namespace

long flat_parameter_size(const TnnTopology& topology) {
    long n = topology.m;
    for (const auto& spec : topology.pi) n += mlp_flat_size(spec);
    n += mlp_flat_size(topology.gamma);
    return n;
}

Eigen::VectorXd flatten_parameters(const TnnTopology& topology, const TnnParameters& params) {
    Eigen::VectorXd out(flat_parameter_size(topology));
    long off = 0;
    for (Eigen::Index i = 0; i < params.theta_c.size(); ++i) out[off++] = params.theta_c[i];
    for (const auto& p : params.pi) write_mlp(p, out, off);
    write_mlp(params.gamma, out, off);
    return out;
}

TnnParameters unflatten_parameters(const TnnTopology& topology, const Eigen::VectorXd& flat) {
    if (flat.size() != flat_parameter_size(topology))
        throw ShapeError("flat parameter vector has wrong length");
    TnnParameters p = init_tnn_parameters(topology, 0);  // shape template
    long off = 0;
    for (Eigen::Index i = 0; i < p.theta_c.size(); ++i) p.theta_c[i] = flat[off++];
    for (auto& mp : p.pi) read_mlp(mp, flat, off);
    read_mlp(p.gamma, flat, off);
    return p;
}

namespace {

/// Forward evaluation with everything the backward pass needs.
struct ThermalCache {
    std::vector<MlpCache> pi;       // one per branch
    MlpCache gamma;
    Eigen::VectorXd pi_pre;         // pre-abs outputs
    Eigen::VectorXd gamma_pre;
    ThermalParameters value;
    Eigen::VectorXd q;              // bracket term of the node update, per node
};

ThermalParameters evaluate_impl(const TnnTopology& topology, const TnnParameters& params,
                                const Eigen::VectorXd& state, const Eigen::VectorXd& ancillary,
                                const Eigen::VectorXd& observables, ThermalCache* cache) {
    if (state.size() != topology.m) throw ShapeError("state width mismatch");
    if (ancillary.size() != topology.n) throw ShapeError("ancillary width mismatch");
    if (observables.size() != topology.o) throw ShapeError("observable width mismatch");

    Eigen::VectorXd phi(topology.n + topology.o);
    phi << ancillary, observables;

    ThermalParameters out;
    out.kappa = params.theta_c.unaryExpr([](double t) { return std::pow(10.0, t); });

    Eigen::VectorXd pi_pre(topology.m);
    if (topology.dedicated_branches) {
        if (cache) cache->pi.resize(std::size_t(topology.m));
        for (int i = 0; i < topology.m; ++i) {
            MlpCache* c = cache ? &cache->pi[std::size_t(i)] : nullptr;
            pi_pre[i] = mlp_forward(topology.pi[std::size_t(i)], params.pi[std::size_t(i)],
                                    state, phi, c)[0];
        }
    } else {
        if (cache) cache->pi.resize(1);
        MlpCache* c = cache ? &cache->pi[0] : nullptr;
        pi_pre = mlp_forward(topology.pi[0], params.pi[0], state, phi, c);
    }
    Eigen::VectorXd gamma_pre =
        mlp_forward(topology.gamma, params.gamma, state, phi, cache ? &cache->gamma : nullptr);

    out.pi = pi_pre.cwiseAbs();
    out.gamma = gamma_pre.cwiseAbs();
    for (int s : topology.mask) out.gamma[s] = 0.0;

    if (cache) {
        cache->pi_pre = std::move(pi_pre);
        cache->gamma_pre = std::move(gamma_pre);
        cache->value = out;
    }
    return out;
}

}  // namespace

ThermalParameters evaluate_thermal_parameters(const TnnTopology& topology,
                                              const TnnParameters& params,
                                              const Eigen::VectorXd& state,
                                              const Eigen::VectorXd& ancillary,
                                              const Eigen::VectorXd& observables) {
    return evaluate_impl(topology, params, state, ancillary, observables, nullptr);
}

namespace {

Eigen::VectorXd cell_step_impl(const TnnTopology& topology, double sample_time,
                               const Eigen::VectorXd& state, const Eigen::VectorXd& ancillary,
                               const ThermalParameters& thermal, Eigen::VectorXd* q_out) {
    const ConductancePairIndex index(topology.m + topology.n);
    Eigen::VectorXd q(topology.m);
    for (int i = 0; i < topology.m; ++i) {
        double acc = thermal.pi[i];
        for (int j = 0; j < topology.m; ++j) {
            if (j == i) continue;
            acc += (state[j] - state[i]) * thermal.gamma[index.slot(i, j)];
        }
        for (int a = 0; a < topology.n; ++a)
            acc += (ancillary[a] - state[i]) * thermal.gamma[index.slot(i, topology.m + a)];
        q[i] = acc;
    }
    Eigen::VectorXd next = state + sample_time * thermal.kappa.cwiseProduct(q);
    if (q_out) *q_out = std::move(q);
    return next;
}

}  // namespace

Eigen::VectorXd cell_step(const TnnTopology& topology, double sample_time,
                          const Eigen::VectorXd& state, const Eigen::VectorXd& ancillary,
                          const ThermalParameters& thermal) {
    if (sample_time <= 0.0) throw ArgumentError("sample time must be > 0");
    if (!state.allFinite() || !ancillary.allFinite())
        throw NumericalError("non-finite input to cell_step");
    return cell_step_impl(topology, sample_time, state, ancillary, thermal, nullptr);
}

Eigen::MatrixXd rollout(const TnnTopology& topology, const TnnParameters& params,
                        const ChannelSchema& schema, const MeasurementProfile& profile,
                        const Eigen::VectorXd& initial_state, const RolloutOptions& options) {
    if (schema.target_count() != topology.m || schema.ancillary_count() != topology.n ||
        schema.observable_count() != topology.o)
        throw ShapeError("profile schema does not match topology");
    if (initial_state.size() != topology.m) throw ShapeError("initial state width mismatch");

    const long K = profile.length();
    Eigen::MatrixXd traj(K, topology.m);
    Eigen::VectorXd state = initial_state;
    traj.row(0) = state.transpose();
    for (long k = 0; k + 1 < K; ++k) {
        const Eigen::VectorXd anc = profile.ancillaries(schema, k);
        const Eigen::VectorXd obs = profile.observables(schema, k);
        const ThermalParameters thermal =
            evaluate_thermal_parameters(topology, params, state, anc, obs);
        state = cell_step_impl(topology, schema.sample_time, state, anc, thermal, nullptr);
        if (!state.allFinite() || state.cwiseAbs().maxCoeff() > options.divergence_bound)
            throw DivergenceError("rollout diverged at step " + std::to_string(k + 1) +
                                      " of profile '" + profile.id + "'",
                                  k + 1);
        traj.row(k + 1) = state.transpose();
    }
    return traj;
}

double tbptt_gradients(const TnnTopology& topology, const TnnParameters& params,
                       const ChannelSchema& schema, const MeasurementProfile& profile,
                       long start, long length, const Eigen::VectorXd& initial_state,
                       Eigen::VectorXd& gradient, Eigen::VectorXd* final_state,
                       const RolloutOptions& options) {
    if (length < 2) throw ArgumentError("TBPTT window must span at least 2 samples");
    if (start < 0 || start + length > profile.length())
        throw ArgumentError("TBPTT window exceeds the profile");
    const int m = topology.m;
    const long steps = length - 1;
    const ConductancePairIndex index(topology.m + topology.n);
    const double T = schema.sample_time;

    // forward with caches
    std::vector<ThermalCache> caches;
    caches.resize(std::size_t(steps));
    std::vector<Eigen::VectorXd> states;
    states.resize(std::size_t(steps) + 1);
    std::vector<Eigen::VectorXd> residuals;
    residuals.resize(std::size_t(steps));
    states[0] = initial_state;
    double sum_sq = 0.0;
    for (long k = 0; k < steps; ++k) {
        const Eigen::VectorXd anc = profile.ancillaries(schema, start + k);
        const Eigen::VectorXd obs = profile.observables(schema, start + k);
        ThermalCache& c = caches[std::size_t(k)];
        evaluate_impl(topology, params, states[std::size_t(k)], anc, obs, &c);
        states[std::size_t(k) + 1] =
            cell_step_impl(topology, T, states[std::size_t(k)], anc, c.value, &c.q);
        const Eigen::VectorXd& s = states[std::size_t(k) + 1];
        if (!s.allFinite() || s.cwiseAbs().maxCoeff() > options.divergence_bound)
            throw DivergenceError("TBPTT window diverged at step " + std::to_string(start + k + 1),
                                  start + k + 1);
        residuals[std::size_t(k)] = s - profile.targets(schema, start + k + 1);
        sum_sq += residuals[std::size_t(k)].squaredNorm();
    }
    const double norm = 1.0 / double(steps * m);
    double loss = sum_sq * norm;
    for (std::size_t i = 0; i < topology.pi.size(); ++i)
        loss += l2_penalty(topology.pi[i], params.pi[i]);
    loss += l2_penalty(topology.gamma, params.gamma);

    // backward
    Eigen::VectorXd dtheta_c = Eigen::VectorXd::Zero(m);
    std::vector<MlpGradients> dpi;
    for (const auto& spec : topology.pi) dpi.push_back(zero_gradients(spec));
    MlpGradients dgamma = zero_gradients(topology.gamma);

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
    for (long k = steps - 1; k >= 0; --k) {
        const ThermalCache& c = caches[std::size_t(k)];
        const Eigen::VectorXd& s = states[std::size_t(k)];
        const Eigen::VectorXd anc = profile.ancillaries(schema, start + k);

        lambda += 2.0 * norm * residuals[std::size_t(k)];

        // through the Euler update
        const Eigen::VectorXd dq = T * lambda.cwiseProduct(c.value.kappa);
        dtheta_c += kLn10 * T * lambda.cwiseProduct(c.value.kappa).cwiseProduct(c.q);

        Eigen::VectorXd dpi_post = dq;
        Eigen::VectorXd dgamma_post = Eigen::VectorXd::Zero(topology.pair_count());
        Eigen::VectorXd dstate = lambda;  // identity term
        for (int i = 0; i < m; ++i) {
            double diag = 0.0;
            for (int j = 0; j < m; ++j) {
                if (j == i) continue;
                const int sl = index.slot(i, j);
                const double g = c.value.gamma[sl];
                dgamma_post[sl] += dq[i] * (s[j] - s[i]);
                dstate[j] += dq[i] * g;
                diag -= g;
            }
            for (int a = 0; a < topology.n; ++a) {
                const int sl = index.slot(i, m + a);
                dgamma_post[sl] += dq[i] * (anc[a] - s[i]);
                diag -= c.value.gamma[sl];
            }
            dstate[i] += dq[i] * diag;
        }

        // through the elementwise absolute value; masked slots carry no gradient
        auto sgn = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
        Eigen::VectorXd dpi_pre(m);
        for (int i = 0; i < m; ++i) dpi_pre[i] = dpi_post[i] * sgn(c.pi_pre[i]);
        Eigen::VectorXd dgamma_pre = Eigen::VectorXd::Zero(topology.pair_count());
        for (int sl = 0; sl < topology.pair_count(); ++sl)
            if (!topology.mask.count(sl)) dgamma_pre[sl] = dgamma_post[sl] * sgn(c.gamma_pre[sl]);

        if (topology.dedicated_branches) {
            for (int i = 0; i < m; ++i) {
                Eigen::VectorXd cot(1);
                cot[0] = dpi_pre[i];
                auto& g = dpi[std::size_t(i)];
                const Eigen::VectorXd saved = g.state_cotangent;
                g.state_cotangent.setZero();
                mlp_backward_accumulate(topology.pi[std::size_t(i)], params.pi[std::size_t(i)],
                                        c.pi[std::size_t(i)], cot, g);
                dstate += g.state_cotangent;
                g.state_cotangent = saved;
            }
        } else {
            auto& g = dpi[0];
            const Eigen::VectorXd saved = g.state_cotangent;
            g.state_cotangent.setZero();
            mlp_backward_accumulate(topology.pi[0], params.pi[0], c.pi[0], dpi_pre, g);
            dstate += g.state_cotangent;
            g.state_cotangent = saved;
        }
        {
            const Eigen::VectorXd saved = dgamma.state_cotangent;
            dgamma.state_cotangent.setZero();
            mlp_backward_accumulate(topology.gamma, params.gamma, c.gamma, dgamma_pre, dgamma);
            dstate += dgamma.state_cotangent;
            dgamma.state_cotangent = saved;
        }

        lambda = dstate;
    }

    // l2 terms, once per window
    for (std::size_t i = 0; i < topology.pi.size(); ++i) {
        const auto& spec = topology.pi[i];
        for (std::size_t l = 0; l < spec.layers.size(); ++l) {
            const double a = spec.layers[l].l2_rate;
            if (a == 0.0) continue;
            dpi[i].w[l] += 2.0 * a * params.pi[i].w[l];
            if (l == 0 && spec.use_recurrent_input && spec.state_width > 0)
                dpi[i].w_r += 2.0 * a * params.pi[i].w_r;
        }
    }
    for (std::size_t l = 0; l < topology.gamma.layers.size(); ++l) {
        const double a = topology.gamma.layers[l].l2_rate;
        if (a == 0.0) continue;
        dgamma.w[l] += 2.0 * a * params.gamma.w[l];
        if (l == 0) dgamma.w_r += 2.0 * a * params.gamma.w_r;
    }

    // pack into the flat layout
    gradient.resize(flat_parameter_size(topology));
    long off = 0;
    for (int i = 0; i < m; ++i) gradient[off++] = dtheta_c[i];
    auto write_grad = [&](const MlpGradients& g) {
        MlpParameters tmp;
        tmp.w_r = g.w_r;
        tmp.w = g.w;
        tmp.b = g.b;
        write_mlp(tmp, gradient, off);
    };
    for (const auto& g : dpi) write_grad(g);
    write_grad(dgamma);

    if (final_state) *final_state = states.back();
    return loss;
}

long count_parameters(const TnnTopology& topology) {
    topology.validate();
    long n = topology.m;
    for (const auto& spec : topology.pi) n += count_mlp_parameters(spec);
    n += count_mlp_parameters(topology.gamma);

    // a fully masked gamma slot removes its output unit
    const auto& g = topology.gamma;
    const std::size_t out_layer = g.layers.size() - 1;
    const long rec_cost = (out_layer == 0 && g.use_recurrent_input) ? g.state_width : 0;
    const long unit_cost =
        (out_layer == 0 ? g.input_width + rec_cost : long(g.layers[out_layer - 1].units)) + 1;
    n -= long(topology.mask.size()) * unit_cost;
    return n;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

json spec_to_json(const MlpSpec& spec) {
    json layers = json::array();
    for (const auto& l : spec.layers)
        layers.push_back({{"units", l.units},
                          {"activation", activation_name(l.activation)},
                          {"l2_rate", l.l2_rate}});
    return {{"state_width", spec.state_width},
            {"input_width", spec.input_width},
            {"use_recurrent_input", spec.use_recurrent_input},
            {"layers", layers}};
}

MlpSpec spec_from_json(const json& j) {
    MlpSpec spec;
    spec.state_width = j.at("state_width").get<int>();
    spec.input_width = j.at("input_width").get<int>();
    spec.use_recurrent_input = j.at("use_recurrent_input").get<bool>();
    for (const auto& lj : j.at("layers"))
        spec.layers.push_back(LayerSpec{lj.at("units").get<int>(),
                                        activation_from_name(lj.at("activation").get<std::string>()),
                                        lj.at("l2_rate").get<double>()});
    return spec;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    std::vector<double> data;
    data.reserve(std::size_t(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto shape = j.at("shape");
    Eigen::MatrixXd m(shape.at(0).get<long>(), shape.at(1).get<long>());
    const auto& data = j.at("data");
    if (long(data.size()) != m.size()) throw ParseError("array data does not match its shape");
    long idx = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data.at(std::size_t(idx++)).get<double>();
    return m;
}

json mlp_params_to_json(const MlpParameters& p) {
    json w = json::array(), b = json::array();
    for (const auto& wm : p.w) w.push_back(matrix_to_json(wm));
    for (const auto& bv : p.b) b.push_back(matrix_to_json(bv));
    return {{"w_r", matrix_to_json(p.w_r)}, {"w", w}, {"b", b}};
}

MlpParameters mlp_params_from_json(const json& j) {
    MlpParameters p;
    p.w_r = matrix_from_json(j.at("w_r"));
    for (const auto& wj : j.at("w")) p.w.push_back(matrix_from_json(wj));
    for (const auto& bj : j.at("b")) p.b.push_back(Eigen::VectorXd(matrix_from_json(bj)));
    return p;
}

json schema_to_json(const ChannelSchema& s) {
    return {{"exogenous", s.exogenous},
            {"ancillary", s.ancillary},
            {"targets", s.targets},
            {"divisors", s.divisors},
            {"sample_time", s.sample_time}};
}

ChannelSchema schema_from_json(const json& j) {
    ChannelSchema s;
    s.exogenous = j.at("exogenous").get<std::vector<std::string>>();
    s.ancillary = j.at("ancillary").get<std::vector<std::string>>();
    s.targets = j.at("targets").get<std::vector<std::string>>();
    s.divisors = j.at("divisors").get<std::map<std::string, double>>();
    s.sample_time = j.at("sample_time").get<double>();
    return s;
}

}  // namespace

std::string model_to_json(const TnnModel& model) {
    json pi_specs = json::array(), pi_params = json::array();
    for (const auto& spec : model.topology.pi) pi_specs.push_back(spec_to_json(spec));
    for (const auto& p : model.parameters.pi) pi_params.push_back(mlp_params_to_json(p));
    std::vector<double> theta_c(model.parameters.theta_c.data(),
                                model.parameters.theta_c.data() + model.parameters.theta_c.size());
    json doc = {
        {"format", "tnn-model"},
        {"version", 1},
        {"topology",
         {{"m", model.topology.m},
          {"n", model.topology.n},
          {"o", model.topology.o},
          {"dedicated_branches", model.topology.dedicated_branches},
          {"mask", std::vector<int>(model.topology.mask.begin(), model.topology.mask.end())},
          {"pi", pi_specs},
          {"gamma", spec_to_json(model.topology.gamma)}}},
        {"parameters", {{"theta_c", theta_c}, {"pi", pi_params}, {"gamma", mlp_params_to_json(model.parameters.gamma)}}},
        {"schema", schema_to_json(model.schema)},
    };
    return doc.dump(2);
}

TnnModel model_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed model document: ") + e.what());
    }
    if (doc.value("format", "") != "tnn-model") throw SchemaError("not a tnn model file");
    TnnModel model;
    try {
    const json& t = doc.at("topology");
    model.topology.m = t.at("m").get<int>();
    model.topology.n = t.at("n").get<int>();
    model.topology.o = t.at("o").get<int>();
    model.topology.dedicated_branches = t.at("dedicated_branches").get<bool>();
    for (int s : t.at("mask").get<std::vector<int>>()) model.topology.mask.insert(s);
    for (const auto& sj : t.at("pi")) model.topology.pi.push_back(spec_from_json(sj));
    model.topology.gamma = spec_from_json(t.at("gamma"));
    model.topology.validate();

    const json& p = doc.at("parameters");
    const auto theta_c = p.at("theta_c").get<std::vector<double>>();
    model.parameters.theta_c =
        Eigen::Map<const Eigen::VectorXd>(theta_c.data(), long(theta_c.size()));
    for (const auto& pj : p.at("pi")) model.parameters.pi.push_back(mlp_params_from_json(pj));
    model.parameters.gamma = mlp_params_from_json(p.at("gamma"));
    for (std::size_t i = 0; i < model.topology.pi.size(); ++i)
        model.parameters.pi[i].check_shapes(model.topology.pi[i]);
    model.parameters.gamma.check_shapes(model.topology.gamma);

    model.schema = schema_from_json(doc.at("schema"));
    model.schema.validate();
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed model document: ") + e.what());
    }
    return model;
}

void save_model(const TnnModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << model_to_json(model) << "\n";
}

TnnModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return model_from_json(text);
}

}  // namespace tnn
