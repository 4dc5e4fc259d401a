#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "artikit/kinematics.hpp"
#include "artikit/voxel_grid.hpp"

namespace artikit {

// Per-asset record written by preprocessing. File paths are relative to the
// manifest's own directory.
struct AssetManifest {
    std::string asset_id;
    std::string urdf_path;                        // canonical URDF copy
    std::vector<std::string> mesh_paths;          // normalized rest meshes, per link id
    std::string rest_voxels_path;                 // embedded grid (C = 10)
    std::vector<std::string> state_voxels_paths;  // plain grids of posed states
    int K = 0;
    int resolution = kDefaultResolution;
    NormalizationTransform normalization;
    // Sampled articulated states, one map of child-link-name -> q per state.
    std::vector<std::map<std::string, double>> states;
    uint64_t seed = 0;  // per-asset seed actually used for sampling
};

std::string manifest_to_json(const AssetManifest& manifest);
AssetManifest manifest_from_json(const std::string& text);
void write_manifest_file(const std::string& path, const AssetManifest& manifest);
AssetManifest read_manifest_file(const std::string& path);

// Rest-state asset (canonical URDF + normalized part meshes) referenced by a
// manifest on disk.
ArticulatedAsset load_manifest_asset(const std::string& manifest_path);

// Converts between ArticulationState vectors and the name-keyed map form
// used in manifests and state files.
std::map<std::string, double> state_to_named(const KinematicTree& tree,
                                             const ArticulationState& state);
ArticulationState state_from_named(const KinematicTree& tree,
                                   const std::map<std::string, double>& named);

struct PreprocessOptions {
    int resolution = kDefaultResolution;
    int state_count = kDefaultStateCount;
    uint64_t seed = 0;
    int threads = 0;  // 0 = ARTIKIT_THREADS or hardware concurrency
};

struct PreprocessSummary {
    int kept = 0;
    int discarded = 0;
    std::vector<std::string> manifest_paths;  // kept assets, sorted by asset id
};

// Walks input_dir for *.urdf bundles; per asset: parse + validate (discard
// and log failures), normalize to the unit cube, voxelize and embed the rest
// state, sample `state_count` random in-limit states, voxelize each posed
// state (renormalized so moved parts stay inside the cube), write everything
// plus a manifest under out_dir/<asset_id>/. Deterministic for a given seed,
// independent of worker count.
PreprocessSummary preprocess_corpus(const std::string& input_dir, const std::string& out_dir,
                                    const PreprocessOptions& options, std::ostream& log);

// Stable per-asset seed: global seed mixed with an FNV-1a hash of the id.
uint64_t derive_asset_seed(uint64_t global_seed, const std::string& asset_id);

int worker_count_from_env(int requested);

}  // namespace artikit
