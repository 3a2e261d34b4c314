#include "tnn/config.hpp"

#include <cstdint>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

namespace tnn {

using nlohmann::json;

namespace {

/// Environment override: TNN_<SECTION>_<KEY> (upper case) replaces the
/// config value when set.
void apply_env(json& section, const std::string& section_name, const char* key) {
    std::string var = "TNN_" + section_name + "_" + key;
    for (auto& c : var) c = char(std::toupper(static_cast<unsigned char>(c)));
    const char* value = std::getenv(var.c_str());
    if (!value) return;
    // numbers and booleans parse as JSON, everything else stays a string
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded() || parsed.is_string() ||
        (section.contains(key) && section[key].is_string()))
        section[key] = std::string(value);
    else
        section[key] = parsed;
}

ChannelSchema parse_schema(const json& j) {
    ChannelSchema s;
    s.exogenous = j.value("exogenous", std::vector<std::string>{});
    s.ancillary = j.value("ancillary", std::vector<std::string>{});
    s.targets = j.at("targets").get<std::vector<std::string>>();
    s.divisors = j.at("divisors").get<std::map<std::string, double>>();
    s.sample_time = j.value("sample_time", 0.5);
    s.validate();
    return s;
}

std::vector<LayerSpec> parse_hidden(const json& j) {
    std::vector<LayerSpec> layers;
    for (const auto& lj : j)
        layers.push_back(LayerSpec{lj.at("units").get<int>(),
                                   activation_from_name(lj.value("activation", "tanh")),
                                   lj.value("l2_rate", 0.0)});
    return layers;
}

TrainConfig parse_train(const json& j) {
    TrainConfig c;
    c.optimizer = optimizer_from_name(j.value("optimizer", "nadam"));
    c.learning_rate = j.value("learning_rate", 1e-2);
    c.tbptt_length = j.value("tbptt_length", 128L);
    c.clip_norm = j.value("clip_norm", 1.0);
    c.max_epochs = j.value("max_epochs", 100);
    c.patience = j.value("patience", 10);
    c.seed = j.value("seed", std::uint64_t(0));
    c.reset_state_with_ground_truth = j.value("reset_state_with_ground_truth", false);
    c.divergence_bound = j.value("divergence_bound", 10.0);
    c.validate();
    return c;
}

PlantSpec parse_plant(const json& j) {
    PlantSpec spec = j.value("preset", "default") == "default" ? default_plant() : PlantSpec{};
    if (j.contains("m")) spec.m = j.at("m").get<int>();
    if (j.contains("n")) spec.n = j.at("n").get<int>();
    if (j.contains("o")) spec.o = j.at("o").get<int>();
    if (j.contains("capacitances")) {
        const auto caps = j.at("capacitances").get<std::vector<double>>();
        spec.capacitances = Eigen::Map<const Eigen::VectorXd>(caps.data(), long(caps.size()));
    }
    if (j.contains("substeps")) spec.substeps = j.at("substeps").get<int>();
    if (j.contains("conductances")) {
        spec.conductances.clear();
        const ConductancePairIndex index(spec.m + spec.n);
        for (const auto& cj : j.at("conductances")) {
            ConductanceFunction f;
            const std::string kind = cj.value("kind", "constant");
            if (kind == "constant") {
                f.kind = ConductanceFunction::Kind::Constant;
            } else if (kind == "affine_in_observable") {
                f.kind = ConductanceFunction::Kind::AffineInObservable;
                f.observable = cj.value("observable", 0);
            } else if (kind == "polynomial_in_state") {
                f.kind = ConductanceFunction::Kind::PolynomialInState;
                f.node = cj.value("node", 0);
            } else {
                throw ConfigError("unknown conductance kind '" + kind + "'");
            }
            f.c0 = cj.value("c0", 0.0);
            f.c1 = cj.value("c1", 0.0);
            f.c2 = cj.value("c2", 0.0);
            const auto pair = cj.at("pair").get<std::vector<int>>();
            if (pair.size() != 2) throw ConfigError("conductance pair must have two nodes");
            spec.conductances[index.slot(pair[0], pair[1])] = f;
        }
    }
    if (j.contains("losses")) {
        spec.losses.clear();
        for (const auto& lj : j.at("losses")) {
            LossFunction f;
            const std::string kind = lj.value("kind", "constant");
            if (kind == "constant")
                f.kind = LossFunction::Kind::Constant;
            else if (kind == "quadratic_in_observable")
                f.kind = LossFunction::Kind::QuadraticInObservable;
            else
                throw ConfigError("unknown loss kind '" + kind + "'");
            f.c0 = lj.value("c0", 0.0);
            f.c1 = lj.value("c1", 0.0);
            f.observable = lj.value("observable", 0);
            spec.losses.push_back(f);
        }
    }
    if (j.contains("excitation")) {
        const auto& ej = j.at("excitation");
        spec.excitation.dwell_min = ej.value("dwell_min", spec.excitation.dwell_min);
        spec.excitation.dwell_max = ej.value("dwell_max", spec.excitation.dwell_max);
        spec.excitation.level_min = ej.value("level_min", spec.excitation.level_min);
        spec.excitation.level_max = ej.value("level_max", spec.excitation.level_max);
        spec.excitation.walk_sigma = ej.value("walk_sigma", spec.excitation.walk_sigma);
    }
    spec.validate();
    return spec;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    try {
        if (doc.contains("train"))
            for (const char* key : {"optimizer", "learning_rate", "tbptt_length", "clip_norm",
                                    "max_epochs", "patience", "seed"})
                apply_env(doc["train"], "train", key);
        if (doc.contains("schema")) apply_env(doc["schema"], "schema", "sample_time");
        if (doc.contains("plant"))
            for (const char* key : {"duration", "profiles", "substeps"})
                apply_env(doc["plant"], "plant", key);
        if (doc.contains("data")) apply_env(doc["data"], "data", "subsequence_length");

        RunConfig config;
        if (doc.contains("schema")) {
            config.schema = parse_schema(doc.at("schema"));
            config.has_schema = true;
        }
        if (doc.contains("folds"))
            for (const auto& [id, set] : doc.at("folds").items())
                config.folds.assignment[id] = fold_set_from_name(set.get<std::string>());
        if (doc.contains("train")) config.train = parse_train(doc.at("train"));
        if (doc.contains("data"))
            config.subsequence_length = doc.at("data").value("subsequence_length", 0L);
        if (doc.contains("plant")) {
            config.plant = parse_plant(doc.at("plant"));
            config.plant_duration = doc.at("plant").value("duration", 7200.0);
            config.plant_profiles = doc.at("plant").value("profiles", 4);
            config.has_plant = true;
            if (!config.has_schema) {
                config.schema = plant_schema(config.plant, doc.at("plant").value("sample_time", 0.5));
                config.has_schema = true;
            }
        }
        if (doc.contains("topology")) {
            const auto& tj = doc.at("topology");
            if (!config.has_schema)
                throw ConfigError("a topology requires a schema (or plant) section");
            config.topology = make_topology(
                config.schema.target_count(), config.schema.ancillary_count(),
                config.schema.observable_count(),
                parse_hidden(tj.value("pi_hidden", json::array())),
                parse_hidden(tj.value("gamma_hidden", json::array())),
                tj.value("dedicated_branches", false));
            for (int s : tj.value("mask", std::vector<int>{})) config.topology.mask.insert(s);
            config.topology.validate();
            config.has_topology = true;
        }
        return config;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "' for digest");
    std::uint64_t h = 1469598103934665603ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= std::uint8_t(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    json digests = json::array();
    for (const auto& [file, digest] : manifest.input_digests)
        digests.push_back({{"path", file}, {"digest", digest}});
    json doc = {{"command", manifest.command},
                {"config", manifest.config_snapshot},
                {"seeds", manifest.seeds},
                {"version", manifest.version},
                {"inputs", digests},
                {"outputs", manifest.output_paths}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
    out << doc.dump(2) << "\n";
}

}  // namespace tnn
