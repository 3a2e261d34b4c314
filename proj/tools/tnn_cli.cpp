// Single entry point for the toolkit workflows: simulate, train, eval,
// prune, init-study, grid and model inspection.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "tnn/analysis.hpp"
#include "tnn/config.hpp"
#include "tnn/plant.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "tnn 0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitTraining = 4;
constexpr int kExitCheck = 5;

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) seeds.push_back(std::stoull(item));
    }
    return seeds;
}

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// Atomic-ish file write: temp file in the target directory, then rename,
/// so a failed run leaves no partial output behind.
void write_file(const std::string& path, const std::string& content) {
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.good()) {
            out.close();
            fs::remove(tmp);
            throw std::runtime_error("write failed for '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, target);
}

void emit_manifest(const std::string& command, const std::string& config_snapshot,
                   const std::vector<std::uint64_t>& seeds,
                   const std::vector<std::string>& inputs,
                   const std::vector<std::string>& outputs, const std::string& path) {
    tnn::RunManifest m;
    m.command = command;
    m.config_snapshot = config_snapshot;
    m.seeds = seeds;
    m.version = kVersion;
    for (const auto& in : inputs) m.input_digests.emplace_back(in, tnn::file_digest(in));
    m.output_paths = outputs;
    tnn::write_manifest(m, path);
}

tnn::FoldedProfiles load_folds(const tnn::RunConfig& config, const std::string& data_csv) {
    auto profiles = tnn::ingest_csv(data_csv, config.schema);
    if (config.subsequence_length >= 2) {
        std::vector<tnn::MeasurementProfile> split;
        for (const auto& p : profiles)
            for (auto& s : tnn::split_subsequences(p, config.subsequence_length))
                split.push_back(std::move(s));
        profiles = std::move(split);
    }
    return tnn::make_folds(profiles, config.folds);
}

std::string eval_report_csv(const tnn::EvalReport& report, const tnn::ChannelSchema& schema) {
    std::ostringstream os;
    os.precision(12);
    os << "target,mse_k2\n";
    for (int i = 0; i < report.per_target_mse.size(); ++i)
        os << schema.targets[std::size_t(i)] << "," << report.per_target_mse[i] << "\n";
    os << "aggregate," << report.aggregate_mse << "\n";
    os << "linf_k," << report.linf << "\n";
    os << "parameter_count," << report.parameter_count << "\n";
    for (const auto& id : report.failed_profiles) os << "failed_profile," << id << "\n";
    return os.str();
}

std::string eval_report_json(const tnn::EvalReport& report, const tnn::ChannelSchema& schema) {
    json per_target;
    for (int i = 0; i < report.per_target_mse.size(); ++i)
        per_target[schema.targets[std::size_t(i)]] = report.per_target_mse[i];
    json doc = {{"per_target_mse", per_target},
                {"aggregate_mse", report.aggregate_mse},
                {"linf", report.linf},
                {"parameter_count", report.parameter_count},
                {"failed_profiles", report.failed_profiles}};
    return doc.dump(2) + "\n";
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::uint64_t seed) {
    const tnn::RunConfig config = tnn::load_config(config_path);
    if (!config.has_plant) throw tnn::ConfigError("simulate needs a 'plant' config section");

    const auto dataset = tnn::simulate(config.plant, config.plant_duration,
                                       config.schema.sample_time, seed, config.plant_profiles);
    fs::create_directories(out_dir);
    const std::string csv_path = (fs::path(out_dir) / "data.csv").string();
    const std::string truth_path = (fs::path(out_dir) / "truth.csv").string();
    // write through temp files so a failure leaves nothing half-written
    tnn::write_dataset_csv(dataset, config.plant, csv_path + ".tmp", truth_path + ".tmp");
    fs::rename(csv_path + ".tmp", csv_path);
    fs::rename(truth_path + ".tmp", truth_path);
    emit_manifest("simulate", read_file(config_path), {seed}, {config_path},
                  {csv_path, truth_path}, (fs::path(out_dir) / "manifest.json").string());
    std::cout << "wrote " << csv_path << " (" << dataset.profiles.size() << " profiles)\n";
    return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& data_csv,
              const std::string& out_path, const std::string& seeds_csv, bool dry_run) {
    const tnn::RunConfig config = tnn::load_config(config_path);
    if (!config.has_topology) throw tnn::ConfigError("train needs a 'topology' config section");

    if (dry_run) {
        std::cout << "parameter count: " << tnn::count_parameters(config.topology) << "\n";
        return kExitOk;
    }
    const tnn::FoldedProfiles folds = load_folds(config, data_csv);

    std::vector<std::uint64_t> seeds =
        seeds_csv.empty() ? std::vector<std::uint64_t>{config.train.seed} : parse_seeds(seeds_csv);

    std::vector<std::string> outputs;
    std::ostringstream aggregate;
    aggregate.precision(12);
    aggregate << "seed,best_epoch,best_validation_mse_k2,epochs,seconds\n";
    bool any_failed = false;
    for (std::uint64_t seed : seeds) {
        tnn::TrainConfig tc = config.train;
        tc.seed = seed;
        std::vector<std::string> log_lines;
        tnn::FitResult run;
        try {
            run = tnn::fit(config.topology, config.schema, folds, tc,
                           tnn::FoldIteration::ValidateOnFold1, &log_lines);
        } catch (const tnn::TrainingError& e) {
            std::cerr << "seed " << seed << ": " << e.what() << "\n";
            any_failed = true;
            // flush whatever epochs completed
            std::string log = "epoch,train_loss,validation_mse_k2,grad_norm,seconds\n";
            for (const auto& l : log_lines) log += l + "\n";
            write_file(out_path + ".seed" + std::to_string(seed) + ".log.csv", log);
            continue;
        }

        const bool suffixed = seeds.size() > 1;
        const std::string model_path =
            suffixed ? out_path + ".seed" + std::to_string(seed) + ".json" : out_path;
        tnn::save_model({config.topology, run.parameters, config.schema}, model_path);
        outputs.push_back(model_path);

        std::string log = "epoch,train_loss,validation_mse_k2,grad_norm,seconds\n";
        for (const auto& l : log_lines) log += l + "\n";
        const std::string log_path = model_path + ".log.csv";
        write_file(log_path, log);
        outputs.push_back(log_path);

        json summary = {{"seed", seed},
                        {"best_epoch", run.report.best_epoch},
                        {"best_validation_mse_k2", run.report.best_validation_mse},
                        {"parameter_count", run.report.parameter_count},
                        {"wall_clock_seconds", run.report.wall_clock_seconds}};
        write_file(model_path + ".summary.json", summary.dump(2) + "\n");
        outputs.push_back(model_path + ".summary.json");

        aggregate << seed << "," << run.report.best_epoch << ","
                  << run.report.best_validation_mse << "," << run.report.epochs.size() << ","
                  << run.report.wall_clock_seconds << "\n";
        std::cout << "seed " << seed << ": best val MSE " << run.report.best_validation_mse
                  << " K^2 at epoch " << run.report.best_epoch << "\n";
    }
    if (seeds.size() > 1) {
        write_file(out_path + ".aggregate.csv", aggregate.str());
        outputs.push_back(out_path + ".aggregate.csv");
    }
    emit_manifest("train", read_file(config_path), seeds, {config_path, data_csv}, outputs,
                  out_path + ".manifest.json");
    return any_failed ? kExitTraining : kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_csv,
             const std::string& out_path, const std::string& format, const std::string& init_mode,
             double fixed_value, double max_mse) {
    const tnn::TnnModel model = tnn::load_model(model_path);
    const auto profiles = tnn::ingest_csv(data_csv, model.schema);

    tnn::EvalOptions opts;
    if (init_mode == "ground_truth") opts.init_mode = tnn::InitMode::GroundTruth;
    else if (init_mode == "ambient") opts.init_mode = tnn::InitMode::Ambient;
    else if (init_mode == "fixed") opts.init_mode = tnn::InitMode::Fixed;
    else throw tnn::ConfigError("unknown init mode '" + init_mode + "'");
    opts.fixed_value_kelvin = fixed_value;

    const tnn::EvalReport report = tnn::evaluate(model, profiles, opts);
    const std::string text = format == "json" ? eval_report_json(report, model.schema)
                                              : eval_report_csv(report, model.schema);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_file(out_path, text);
        emit_manifest("eval", "", {}, {model_path, data_csv}, {out_path},
                      out_path + ".manifest.json");
    }
    if (max_mse > 0.0 && report.aggregate_mse > max_mse) {
        std::cerr << "check failed: aggregate MSE " << report.aggregate_mse << " > " << max_mse
                  << "\n";
        return kExitCheck;
    }
    return kExitOk;
}

int cmd_prune(const std::vector<std::string>& model_paths, const std::string& data_csv,
              double cutoff, int samples, double threshold, std::uint64_t seed,
              const std::string& out_path, const std::string& format) {
    std::vector<tnn::TnnModel> models;
    std::vector<double> mses;
    for (const auto& path : model_paths) {
        models.push_back(tnn::load_model(path));
        const auto profiles = tnn::ingest_csv(data_csv, models.back().schema);
        mses.push_back(tnn::evaluate(models.back(), profiles).aggregate_mse);
    }
    const tnn::ConductanceProfile profile =
        tnn::conductance_medians(models, mses, cutoff, samples, seed);
    const tnn::PruneResult pruned = tnn::prune(models.front().topology, profile, threshold);

    const tnn::ConductancePairIndex index(models.front().topology.m + models.front().topology.n);
    std::string text;
    if (format == "json") {
        json medians = json::array();
        for (int s = 0; s < profile.medians.size(); ++s) {
            const auto [i, j] = index.pair(s);
            medians.push_back({{"slot", s}, {"i", i}, {"j", j}, {"median", profile.medians[s]}});
        }
        json doc = {{"medians", medians},
                    {"models_used", profile.models_used},
                    {"mask", std::vector<int>(pruned.topology.mask.begin(), pruned.topology.mask.end())},
                    {"newly_masked", pruned.newly_masked},
                    {"warnings", pruned.warnings}};
        text = doc.dump(2) + "\n";
    } else {
        std::ostringstream os;
        os.precision(12);
        os << "slot,i,j,median,masked\n";
        for (int s = 0; s < profile.medians.size(); ++s) {
            const auto [i, j] = index.pair(s);
            os << s << "," << i << "," << j << "," << profile.medians[s] << ","
               << (pruned.topology.mask.count(s) ? 1 : 0) << "\n";
        }
        text = os.str();
    }
    for (const auto& w : pruned.warnings) std::cerr << "warning: " << w << "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_file(out_path, text);
        std::vector<std::string> inputs = model_paths;
        inputs.push_back(data_csv);
        emit_manifest("prune", "", {seed}, inputs, {out_path}, out_path + ".manifest.json");
    }
    return kExitOk;
}

int cmd_init_study(const std::string& model_path, const std::string& data_csv,
                   const std::string& offsets_csv, const std::string& profile_id,
                   const std::string& out_path, const std::string& format) {
    const tnn::TnnModel model = tnn::load_model(model_path);
    const auto profiles = tnn::ingest_csv(data_csv, model.schema);
    const tnn::MeasurementProfile* profile = &profiles.front();
    if (!profile_id.empty()) {
        profile = nullptr;
        for (const auto& p : profiles)
            if (p.id == profile_id) profile = &p;
        if (!profile) throw tnn::ConfigError("profile '" + profile_id + "' not in the data");
    }
    const auto offsets = parse_doubles(offsets_csv);
    const auto rows = tnn::detuned_init_study(model, *profile, offsets);

    std::string text;
    if (format == "json") {
        json jrows = json::array();
        for (const auto& row : rows)
            jrows.push_back({{"offset_k", row.offset_kelvin},
                             {"recovery_seconds", row.recovery_seconds}});
        text = json{{"profile", profile->id}, {"rows", jrows}}.dump(2) + "\n";
    } else {
        std::ostringstream os;
        os.precision(12);
        os << "offset_k";
        for (const auto& t : model.schema.targets) os << ",recovery_s_" << t;
        os << "\n";
        for (const auto& row : rows) {
            os << row.offset_kelvin;
            for (double r : row.recovery_seconds) os << "," << r;
            os << "\n";
        }
        text = os.str();
    }
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_file(out_path, text);
        emit_manifest("init-study", "", {}, {model_path, data_csv}, {out_path},
                      out_path + ".manifest.json");
    }
    return kExitOk;
}

int cmd_grid(const std::string& config_path, const std::string& data_csv, int budget,
             const std::string& seeds_csv, int jobs, const std::string& out_path,
             const std::string& format) {
    const tnn::RunConfig config = tnn::load_config(config_path);
    const tnn::FoldedProfiles folds = load_folds(config, data_csv);
    std::vector<std::uint64_t> seeds =
        seeds_csv.empty() ? std::vector<std::uint64_t>{config.train.seed} : parse_seeds(seeds_csv);

    tnn::GridSearchOptions opts;
    opts.budget = budget;
    opts.jobs = jobs > 0 ? jobs : int(std::thread::hardware_concurrency());
    if (config.has_topology) opts.mask = config.topology.mask;
    const tnn::GridSearchResult result =
        tnn::grid_search(config.schema, folds, config.train, seeds, opts);

    std::set<std::size_t> pareto(result.pareto.begin(), result.pareto.end());
    std::string text;
    if (format == "json") {
        json jc = json::array();
        for (std::size_t i = 0; i < result.candidates.size(); ++i) {
            const auto& c = result.candidates[i];
            jc.push_back({{"pi_layers", c.pi_layers},
                          {"pi_units", c.pi_units},
                          {"gamma_layers", c.gamma_layers},
                          {"gamma_units", c.gamma_units},
                          {"parameter_count", c.parameter_count},
                          {"generalization_mse_k2", c.generalization_mse},
                          {"pareto", pareto.count(i) > 0},
                          {"failed", c.failed}});
        }
        text = json{{"candidates", jc}}.dump(2) + "\n";
    } else {
        std::ostringstream os;
        os.precision(12);
        os << "pi_layers,pi_units,gamma_layers,gamma_units,parameter_count,"
              "generalization_mse_k2,pareto,failed\n";
        for (std::size_t i = 0; i < result.candidates.size(); ++i) {
            const auto& c = result.candidates[i];
            os << c.pi_layers << "," << c.pi_units << "," << c.gamma_layers << ","
               << c.gamma_units << "," << c.parameter_count << "," << c.generalization_mse << ","
               << (pareto.count(i) ? 1 : 0) << "," << (c.failed ? 1 : 0) << "\n";
        }
        text = os.str();
    }
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_file(out_path, text);
        emit_manifest("grid", read_file(config_path), seeds, {config_path, data_csv}, {out_path},
                      out_path + ".manifest.json");
    }
    return kExitOk;
}

int cmd_inspect(const std::string& model_path) {
    const tnn::TnnModel model = tnn::load_model(model_path);
    std::cout << "m=" << model.topology.m << " n=" << model.topology.n
              << " o=" << model.topology.o << "\n";
    std::cout << "parameter count: " << tnn::count_parameters(model.topology) << "\n";
    std::cout << "dedicated pi branches: " << (model.topology.dedicated_branches ? "yes" : "no")
              << "\n";
    std::cout << "masked slots:";
    for (int s : model.topology.mask) std::cout << " " << s;
    std::cout << "\n";
    std::cout << "kappa:";
    for (int i = 0; i < model.parameters.theta_c.size(); ++i)
        std::cout << " " << std::pow(10.0, model.parameters.theta_c[i]);
    std::cout << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermal neural network toolkit"};
    app.require_subcommand(1);

    std::string config_path, data_csv, out_path, model_path, format = "csv";
    std::string seeds_csv, init_mode = "ground_truth", offsets_csv = "10,20,30", profile_id;
    std::vector<std::string> model_paths;
    std::uint64_t seed = 0;
    double threshold = 0.0, cutoff = 5.0, fixed_value = 25.0, max_mse = 0.0;
    int budget = 0, samples = 1000, jobs = 0;
    bool dry_run = false;

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic plant dataset");
    sim->add_option("--config", config_path, "Config file")->required();
    sim->add_option("--out", out_path, "Output directory")->required();
    sim->add_option("--seed", seed, "Generation seed");

    auto* train = app.add_subcommand("train", "Train a model");
    train->add_option("--config", config_path, "Config file")->required();
    train->add_option("--data", data_csv, "Data CSV")->required();
    train->add_option("--out", out_path, "Output model path")->required();
    train->add_option("--seeds", seeds_csv, "Comma-separated seeds");
    train->add_flag("--dry-run", dry_run, "Validate config and print the parameter count");

    auto* eval = app.add_subcommand("eval", "Evaluate a model on a dataset");
    eval->add_option("--model", model_path, "Model file")->required();
    eval->add_option("--data", data_csv, "Data CSV")->required();
    eval->add_option("--out", out_path, "Report path (stdout when omitted)");
    eval->add_option("--format", format, "csv|json");
    eval->add_option("--init", init_mode, "ground_truth|ambient|fixed");
    eval->add_option("--fixed-value", fixed_value, "Initial value for --init fixed (channel units)");
    eval->add_option("--max-mse", max_mse, "Fail (exit 5) when aggregate MSE exceeds this");

    auto* prune = app.add_subcommand("prune", "Conductance-median pruning analysis");
    prune->add_option("--models", model_paths, "Trained model files")->required();
    prune->add_option("--data", data_csv, "Data CSV for the MSE filter")->required();
    prune->add_option("--cutoff", cutoff, "MSE cutoff (K^2) for model selection");
    prune->add_option("--samples", samples, "Random inputs per model");
    prune->add_option("--threshold", threshold, "Median threshold below which pairs are masked");
    prune->add_option("--seed", seed, "Input sampling seed");
    prune->add_option("--out", out_path, "Report path (stdout when omitted)");
    prune->add_option("--format", format, "csv|json");

    auto* study = app.add_subcommand("init-study", "Detuned initial-condition recovery study");
    study->add_option("--model", model_path, "Model file")->required();
    study->add_option("--data", data_csv, "Data CSV")->required();
    study->add_option("--offsets", offsets_csv, "Comma-separated offsets in Kelvin");
    study->add_option("--profile", profile_id, "Profile id (default: first)");
    study->add_option("--out", out_path, "Report path (stdout when omitted)");
    study->add_option("--format", format, "csv|json");

    auto* grid = app.add_subcommand("grid", "Topology grid search (Pareto front)");
    grid->add_option("--config", config_path, "Config file")->required();
    grid->add_option("--data", data_csv, "Data CSV")->required();
    grid->add_option("--budget", budget, "Candidate budget (0 = full grid)");
    grid->add_option("--seeds", seeds_csv, "Comma-separated seeds");
    grid->add_option("--jobs", jobs, "Parallel candidates (default: cores)");
    grid->add_option("--out", out_path, "Report path (stdout when omitted)");
    grid->add_option("--format", format, "csv|json");

    auto* inspect = app.add_subcommand("inspect", "Print a model summary");
    inspect->add_option("--model", model_path, "Model file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_path, seed);
        if (train->parsed()) return cmd_train(config_path, data_csv, out_path, seeds_csv, dry_run);
        if (eval->parsed())
            return cmd_eval(model_path, data_csv, out_path, format, init_mode, fixed_value,
                            max_mse);
        if (prune->parsed())
            return cmd_prune(model_paths, data_csv, cutoff, samples, threshold, seed, out_path,
                             format);
        if (study->parsed())
            return cmd_init_study(model_path, data_csv, offsets_csv, profile_id, out_path, format);
        if (grid->parsed())
            return cmd_grid(config_path, data_csv, budget, seeds_csv, jobs, out_path, format);
        if (inspect->parsed()) return cmd_inspect(model_path);
    } catch (const tnn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const tnn::SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const tnn::TrainingError& e) {
        std::cerr << "training failure: " << e.what() << "\n";
        return kExitTraining;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const tnn::ParseError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::runtime_error& e) {
        // file-open failures and similar
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
