// pybind11 surface of the thermal network toolkit: dataset handling, the
// synthetic plant, model construction, training and evaluation.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tnn/analysis.hpp"
#include "tnn/data.hpp"
#include "tnn/model.hpp"
#include "tnn/nn.hpp"
#include "tnn/plant.hpp"
#include "tnn/train.hpp"

namespace py = pybind11;

namespace {

tnn::FoldedProfiles make_folds_from_dict(const std::vector<tnn::MeasurementProfile>& profiles,
                                         const std::map<std::string, std::string>& assignment) {
    tnn::FoldPlan plan;
    for (const auto& [id, name] : assignment) {
        plan.assignment[id] = tnn::fold_set_from_name(name);
    }
    return tnn::make_folds(profiles, plan);
}

}  // namespace

PYBIND11_MODULE(_tnn, mod) {
    mod.doc() = "Thermal neural network core (lumped-parameter recurrent state-space model)";

    py::register_exception<tnn::SchemaError>(mod, "SchemaError");
    py::register_exception<tnn::ParseError>(mod, "ParseError");
    py::register_exception<tnn::ShapeError>(mod, "ShapeError");
    py::register_exception<tnn::ArgumentError>(mod, "ArgumentError", PyExc_ValueError);
    py::register_exception<tnn::NumericalError>(mod, "NumericalError");
    py::register_exception<tnn::TrainingError>(mod, "TrainingError");
    py::register_exception<tnn::ConfigError>(mod, "ConfigError");

    py::enum_<tnn::Activation>(mod, "Activation")
        .value("sigmoid", tnn::Activation::Sigmoid)
        .value("tanh", tnn::Activation::Tanh)
        .value("linear", tnn::Activation::Linear)
        .value("relu", tnn::Activation::Relu)
        .value("biased_elu", tnn::Activation::BiasedElu)
        .value("sinus", tnn::Activation::Sinus);

    py::class_<tnn::LayerSpec>(mod, "LayerSpec")
        .def(py::init([](int units, tnn::Activation activation, double l2_rate) {
                 return tnn::LayerSpec{units, activation, l2_rate};
             }),
             py::arg("units"), py::arg("activation") = tnn::Activation::Tanh,
             py::arg("l2_rate") = 0.0)
        .def_readwrite("units", &tnn::LayerSpec::units)
        .def_readwrite("activation", &tnn::LayerSpec::activation)
        .def_readwrite("l2_rate", &tnn::LayerSpec::l2_rate);

    py::class_<tnn::ChannelSchema>(mod, "ChannelSchema")
        .def(py::init<>())
        .def_readwrite("exogenous", &tnn::ChannelSchema::exogenous)
        .def_readwrite("ancillary", &tnn::ChannelSchema::ancillary)
        .def_readwrite("targets", &tnn::ChannelSchema::targets)
        .def_readwrite("divisors", &tnn::ChannelSchema::divisors)
        .def_readwrite("sample_time", &tnn::ChannelSchema::sample_time)
        .def("validate", &tnn::ChannelSchema::validate)
        .def("all_channels", &tnn::ChannelSchema::all_channels);

    py::class_<tnn::MeasurementProfile>(mod, "MeasurementProfile")
        .def(py::init<>())
        .def_readwrite("id", &tnn::MeasurementProfile::id)
        .def_readwrite("values", &tnn::MeasurementProfile::values)
        .def("__len__", &tnn::MeasurementProfile::length);

    py::class_<tnn::FoldedProfiles>(mod, "FoldedProfiles")
        .def_readwrite("train", &tnn::FoldedProfiles::train)
        .def_readwrite("fold1", &tnn::FoldedProfiles::fold1)
        .def_readwrite("fold2", &tnn::FoldedProfiles::fold2)
        .def_readwrite("generalization", &tnn::FoldedProfiles::generalization);

    mod.def(
        "ingest_csv",
        [](const std::string& path, const tnn::ChannelSchema& schema) {
            std::vector<std::string> warnings;
            auto profiles = tnn::ingest_csv(path, schema, &warnings);
            return py::make_tuple(profiles, warnings);
        },
        py::arg("path"), py::arg("schema"),
        "Load normalized profiles from a CSV; returns (profiles, warnings).");
    mod.def("split_subsequences", &tnn::split_subsequences, py::arg("profile"), py::arg("length"));
    mod.def("make_folds", &make_folds_from_dict, py::arg("profiles"), py::arg("assignment"),
            "Partition profiles per an id -> fold-name mapping.");

    py::class_<tnn::TnnTopology>(mod, "TnnTopology")
        .def_readonly("m", &tnn::TnnTopology::m)
        .def_readonly("n", &tnn::TnnTopology::n)
        .def_readonly("o", &tnn::TnnTopology::o)
        .def_readwrite("mask", &tnn::TnnTopology::mask)
        .def("pair_count", &tnn::TnnTopology::pair_count);

    mod.def("make_topology", &tnn::make_topology, py::arg("m"), py::arg("n"), py::arg("o"),
            py::arg("pi_hidden"), py::arg("gamma_hidden"), py::arg("dedicated_branches") = false);
    mod.def("count_parameters", &tnn::count_parameters, py::arg("topology"));

    py::class_<tnn::TnnParameters>(mod, "TnnParameters")
        .def_readwrite("theta_c", &tnn::TnnParameters::theta_c);
    mod.def("init_tnn_parameters", &tnn::init_tnn_parameters, py::arg("topology"),
            py::arg("seed"));
    mod.def("flatten_parameters", &tnn::flatten_parameters, py::arg("topology"),
            py::arg("parameters"));
    mod.def("unflatten_parameters", &tnn::unflatten_parameters, py::arg("topology"),
            py::arg("flat"));

    py::class_<tnn::TnnModel>(mod, "TnnModel")
        .def(py::init<>())
        .def_readwrite("topology", &tnn::TnnModel::topology)
        .def_readwrite("parameters", &tnn::TnnModel::parameters)
        .def_readwrite("schema", &tnn::TnnModel::schema);
    mod.def("save_model", &tnn::save_model, py::arg("model"), py::arg("path"));
    mod.def("load_model", &tnn::load_model, py::arg("path"));
    mod.def("model_to_json", &tnn::model_to_json, py::arg("model"));
    mod.def("model_from_json", &tnn::model_from_json, py::arg("text"));

    mod.def(
        "rollout",
        [](const tnn::TnnModel& model, const tnn::MeasurementProfile& profile,
           const Eigen::VectorXd& initial_state, double divergence_bound) {
            tnn::RolloutOptions options;
            options.divergence_bound = divergence_bound;
            return tnn::rollout(model.topology, model.parameters, model.schema, profile,
                                initial_state, options);
        },
        py::arg("model"), py::arg("profile"), py::arg("initial_state"),
        py::arg("divergence_bound") = 10.0,
        "Normalized temperature estimates, one row per sample.");

    mod.def(
        "tbptt_gradients",
        [](const tnn::TnnModel& model, const tnn::MeasurementProfile& profile, long start,
           long length, const Eigen::VectorXd& initial_state, double divergence_bound) {
            tnn::RolloutOptions options;
            options.divergence_bound = divergence_bound;
            Eigen::VectorXd gradient;
            Eigen::VectorXd final_state;
            double loss = tnn::tbptt_gradients(model.topology, model.parameters, model.schema,
                                               profile, start, length, initial_state, gradient,
                                               &final_state, options);
            return py::make_tuple(loss, gradient, final_state);
        },
        py::arg("model"), py::arg("profile"), py::arg("start"), py::arg("length"),
        py::arg("initial_state"), py::arg("divergence_bound") = 10.0,
        "One training window; returns (loss, flat_gradient, final_state).");

    py::class_<tnn::TrainConfig>(mod, "TrainConfig")
        .def(py::init<>())
        .def_property(
            "optimizer",
            [](const tnn::TrainConfig& c) { return std::string(tnn::optimizer_name(c.optimizer)); },
            [](tnn::TrainConfig& c, const std::string& name) {
                c.optimizer = tnn::optimizer_from_name(name);
            })
        .def_readwrite("learning_rate", &tnn::TrainConfig::learning_rate)
        .def_readwrite("tbptt_length", &tnn::TrainConfig::tbptt_length)
        .def_readwrite("clip_norm", &tnn::TrainConfig::clip_norm)
        .def_readwrite("max_epochs", &tnn::TrainConfig::max_epochs)
        .def_readwrite("patience", &tnn::TrainConfig::patience)
        .def_readwrite("seed", &tnn::TrainConfig::seed)
        .def_readwrite("divergence_bound", &tnn::TrainConfig::divergence_bound);

    py::class_<tnn::EpochRecord>(mod, "EpochRecord")
        .def_readonly("epoch", &tnn::EpochRecord::epoch)
        .def_readonly("train_loss", &tnn::EpochRecord::train_loss)
        .def_readonly("validation_mse", &tnn::EpochRecord::validation_mse)
        .def_readonly("gradient_norm", &tnn::EpochRecord::gradient_norm)
        .def_readonly("seconds", &tnn::EpochRecord::seconds);

    py::class_<tnn::TrainReport>(mod, "TrainReport")
        .def_readonly("epochs", &tnn::TrainReport::epochs)
        .def_readonly("best_epoch", &tnn::TrainReport::best_epoch)
        .def_readonly("best_validation_mse", &tnn::TrainReport::best_validation_mse)
        .def_readonly("wall_clock_seconds", &tnn::TrainReport::wall_clock_seconds)
        .def_readonly("seed", &tnn::TrainReport::seed)
        .def_readonly("parameter_count", &tnn::TrainReport::parameter_count);

    py::class_<tnn::FitResult>(mod, "FitResult")
        .def_readonly("parameters", &tnn::FitResult::parameters)
        .def_readonly("report", &tnn::FitResult::report);

    mod.def(
        "fit",
        [](const tnn::TnnTopology& topology, const tnn::ChannelSchema& schema,
           const tnn::FoldedProfiles& folds, const tnn::TrainConfig& config,
           bool validate_on_fold2) {
            auto iteration = validate_on_fold2 ? tnn::FoldIteration::ValidateOnFold2
                                               : tnn::FoldIteration::ValidateOnFold1;
            return tnn::fit(topology, schema, folds, config, iteration);
        },
        py::arg("topology"), py::arg("schema"), py::arg("folds"), py::arg("config"),
        py::arg("validate_on_fold2") = false);

    mod.def("validation_mse", &tnn::validation_mse, py::arg("topology"), py::arg("parameters"),
            py::arg("schema"), py::arg("profiles"), py::arg("divergence_bound") = 10.0);

    py::class_<tnn::EvalReport>(mod, "EvalReport")
        .def_readonly("per_target_mse", &tnn::EvalReport::per_target_mse)
        .def_readonly("aggregate_mse", &tnn::EvalReport::aggregate_mse)
        .def_readonly("linf", &tnn::EvalReport::linf)
        .def_readonly("parameter_count", &tnn::EvalReport::parameter_count)
        .def_readonly("failed_profiles", &tnn::EvalReport::failed_profiles);

    mod.def(
        "evaluate",
        [](const tnn::TnnModel& model, const std::vector<tnn::MeasurementProfile>& profiles,
           const std::string& init_mode, double fixed_value) {
            tnn::EvalOptions options;
            if (init_mode == "ground_truth") {
                options.init_mode = tnn::InitMode::GroundTruth;
            } else if (init_mode == "ambient") {
                options.init_mode = tnn::InitMode::Ambient;
            } else if (init_mode == "fixed") {
                options.init_mode = tnn::InitMode::Fixed;
            } else {
                throw tnn::ArgumentError("unknown init mode '" + init_mode + "'");
            }
            options.fixed_value_kelvin = fixed_value;
            return tnn::evaluate(model, profiles, options);
        },
        py::arg("model"), py::arg("profiles"), py::arg("init_mode") = "ground_truth",
        py::arg("fixed_value") = 25.0);

    py::class_<tnn::PlantSpec>(mod, "PlantSpec")
        .def_readonly("m", &tnn::PlantSpec::m)
        .def_readonly("n", &tnn::PlantSpec::n)
        .def_readonly("o", &tnn::PlantSpec::o)
        .def_readwrite("capacitances", &tnn::PlantSpec::capacitances)
        .def_readwrite("substeps", &tnn::PlantSpec::substeps);

    mod.def("default_plant", &tnn::default_plant);
    mod.def("plant_schema", &tnn::plant_schema, py::arg("spec"), py::arg("sample_time"));
    mod.def("disconnected_pair_spec", &tnn::disconnected_pair_spec, py::arg("base"),
            py::arg("pair_slot"));

    py::class_<tnn::SyntheticDataset>(mod, "SyntheticDataset")
        .def_readonly("profiles", &tnn::SyntheticDataset::profiles)
        .def_readonly("gamma_true", &tnn::SyntheticDataset::gamma_true)
        .def_readonly("loss_true", &tnn::SyntheticDataset::loss_true);

    mod.def(
        "simulate",
        [](const tnn::PlantSpec& spec, double duration, double sample_time, std::uint64_t seed,
           int profiles) { return tnn::simulate(spec, duration, sample_time, seed, profiles); },
        py::arg("spec"), py::arg("duration"), py::arg("sample_time"), py::arg("seed"),
        py::arg("profiles") = 1);
    mod.def("write_dataset_csv", &tnn::write_dataset_csv, py::arg("dataset"), py::arg("spec"),
            py::arg("csv_path"), py::arg("truth_path"));
}
