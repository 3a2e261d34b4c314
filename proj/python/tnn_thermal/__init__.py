"""Thermal neural network toolkit: lumped-parameter recurrent state-space
models with learned conductances, power losses and inverse capacitances."""

from ._tnn import (
    Activation,
    ArgumentError,
    ChannelSchema,
    ConfigError,
    EpochRecord,
    EvalReport,
    FitResult,
    FoldedProfiles,
    LayerSpec,
    MeasurementProfile,
    NumericalError,
    ParseError,
    PlantSpec,
    SchemaError,
    ShapeError,
    SyntheticDataset,
    TnnModel,
    TnnParameters,
    TnnTopology,
    TrainConfig,
    TrainingError,
    TrainReport,
    count_parameters,
    default_plant,
    disconnected_pair_spec,
    evaluate,
    fit,
    flatten_parameters,
    ingest_csv,
    init_tnn_parameters,
    load_model,
    make_folds,
    make_topology,
    model_from_json,
    model_to_json,
    plant_schema,
    rollout,
    save_model,
    simulate,
    split_subsequences,
    tbptt_gradients,
    unflatten_parameters,
    validation_mse,
    write_dataset_csv,
)

__all__ = [
    "Activation",
    "ArgumentError",
    "ChannelSchema",
    "ConfigError",
    "EpochRecord",
    "EvalReport",
    "FitResult",
    "FoldedProfiles",
    "LayerSpec",
    "MeasurementProfile",
    "NumericalError",
    "ParseError",
    "PlantSpec",
    "SchemaError",
    "ShapeError",
    "SyntheticDataset",
    "TnnModel",
    "TnnParameters",
    "TnnTopology",
    "TrainConfig",
    "TrainingError",
    "TrainReport",
    "count_parameters",
    "default_plant",
    "disconnected_pair_spec",
    "evaluate",
    "fit",
    "flatten_parameters",
    "ingest_csv",
    "init_tnn_parameters",
    "load_model",
    "make_folds",
    "make_topology",
    "model_from_json",
    "model_to_json",
    "plant_schema",
    "rollout",
    "save_model",
    "simulate",
    "split_subsequences",
    "tbptt_gradients",
    "unflatten_parameters",
    "validation_mse",
    "write_dataset_csv",
]

__version__ = "0.1.0"
