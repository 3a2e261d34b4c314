#pragma once

// Run configuration (JSON with TNN_<SECTION>_<KEY> environment overrides)
// and the run manifest written next to every command's outputs.

#include <string>
#include <vector>

#include "tnn/analysis.hpp"
#include "tnn/data.hpp"
#include "tnn/model.hpp"
#include "tnn/plant.hpp"
#include "tnn/train.hpp"

namespace tnn {

struct RunConfig {
    ChannelSchema schema;
    FoldPlan folds;
    TnnTopology topology;
    TrainConfig train;
    PlantSpec plant;
    double plant_duration = 7200.0;  // seconds per dataset
    int plant_profiles = 4;
    bool has_schema = false;
    bool has_topology = false;
    bool has_plant = false;
    long subsequence_length = 0;  // 0 = no splitting
};

/// Parse the config file; environment variables named TNN_<SECTION>_<KEY>
/// override scalar keys (e.g. TNN_TRAIN_LEARNING_RATE).
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

/// FNV-1a 64-bit digest of a file, hex encoded.
std::string file_digest(const std::string& path);

struct RunManifest {
    std::string command;
    std::string config_snapshot;  // resolved config, JSON text
    std::vector<std::uint64_t> seeds;
    std::string version;
    std::vector<std::pair<std::string, std::string>> input_digests;  // path, digest
    std::vector<std::string> output_paths;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

}  // namespace tnn
