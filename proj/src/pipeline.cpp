#include "artikit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "artikit/joint_to_voxel.hpp"
#include "artikit/obj_io.hpp"
#include "artikit/voxel_io.hpp"

namespace fs = std::filesystem;

namespace artikit {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Manifest serialization
// ---------------------------------------------------------------------------

std::string manifest_to_json(const AssetManifest& m) {
    json j;
    j["asset_id"] = m.asset_id;
    j["urdf"] = m.urdf_path;
    j["meshes"] = m.mesh_paths;
    j["rest_voxels"] = m.rest_voxels_path;
    j["state_voxels"] = m.state_voxels_paths;
    j["K"] = m.K;
    j["resolution"] = m.resolution;
    j["normalization"] = {{"scale", m.normalization.scale},
                          {"translation",
                           {m.normalization.translation.x, m.normalization.translation.y,
                            m.normalization.translation.z}}};
    json states = json::array();
    for (const auto& st : m.states) states.push_back(st);
    j["states"] = std::move(states);
    j["seed"] = m.seed;
    return j.dump(2) + "\n";
}

AssetManifest manifest_from_json(const std::string& text) {
    json j = json::parse(text);
    AssetManifest m;
    m.asset_id = j.at("asset_id").get<std::string>();
    m.urdf_path = j.at("urdf").get<std::string>();
    m.mesh_paths = j.at("meshes").get<std::vector<std::string>>();
    m.rest_voxels_path = j.at("rest_voxels").get<std::string>();
    m.state_voxels_paths = j.at("state_voxels").get<std::vector<std::string>>();
    m.K = j.at("K").get<int>();
    m.resolution = j.at("resolution").get<int>();
    m.normalization.scale = j.at("normalization").at("scale").get<double>();
    const auto& t = j.at("normalization").at("translation");
    m.normalization.translation = {t.at(0).get<double>(), t.at(1).get<double>(),
                                   t.at(2).get<double>()};
    for (const auto& st : j.at("states"))
        m.states.push_back(st.get<std::map<std::string, double>>());
    m.seed = j.at("seed").get<uint64_t>();
    return m;
}

void write_manifest_file(const std::string& path, const AssetManifest& manifest) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << manifest_to_json(manifest);
    if (!f) throw std::runtime_error("write failed: " + path);
}

AssetManifest read_manifest_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return manifest_from_json(buf.str());
}

ArticulatedAsset load_manifest_asset(const std::string& manifest_path) {
    AssetManifest m = read_manifest_file(manifest_path);
    fs::path dir = fs::path(manifest_path).parent_path();

    std::ifstream uf(dir / m.urdf_path);
    if (!uf) throw std::runtime_error("cannot open: " + (dir / m.urdf_path).string());
    std::stringstream ubuf;
    ubuf << uf.rdbuf();

    ArticulatedAsset asset;
    asset.tree = parse_urdf(ubuf.str());
    if (int(m.mesh_paths.size()) != asset.tree.part_count())
        throw std::runtime_error(manifest_path + ": mesh count differs from URDF link count");
    for (const std::string& rel : m.mesh_paths)
        asset.part_meshes.push_back(read_obj_file((dir / rel).string()));
    check_asset(asset);
    return asset;
}

std::map<std::string, double> state_to_named(const KinematicTree& tree,
                                             const ArticulationState& state) {
    std::vector<int> qidx = state_index_by_child(tree);
    std::map<std::string, double> named;
    for (const Link& l : tree.links) {
        int idx = qidx[size_t(l.id)];
        if (idx >= 0) named[l.name] = state.q[size_t(idx)];
    }
    return named;
}

ArticulationState state_from_named(const KinematicTree& tree,
                                   const std::map<std::string, double>& named) {
    std::map<std::string, int> name_to_id;
    for (const Link& l : tree.links) name_to_id[l.name] = l.id;

    std::vector<int> qidx = state_index_by_child(tree);
    ArticulationState state;
    state.q.assign(tree.joints.size(), 0.0);
    for (const auto& [name, q] : named) {
        auto it = name_to_id.find(name);
        if (it == name_to_id.end())
            throw std::invalid_argument("state names unknown link '" + name + "'");
        int idx = qidx[size_t(it->second)];
        if (idx < 0) throw std::invalid_argument("link '" + name + "' is the root, not a joint");
        state.q[size_t(idx)] = q;
    }
    return state;
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

uint64_t derive_asset_seed(uint64_t global_seed, const std::string& asset_id) {
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : asset_id) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h ^ global_seed;
}

int worker_count_from_env(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ARTIKIT_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return int(hw ? hw : 1);
}

namespace {

struct Bundle {
    std::string asset_id;
    fs::path urdf_path;
};

std::vector<Bundle> discover_bundles(const fs::path& input_dir) {
    std::vector<Bundle> bundles;
    for (const auto& entry : fs::recursive_directory_iterator(input_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".urdf") continue;
        fs::path rel = fs::relative(entry.path(), input_dir);
        std::string id = rel.string();
        id = id.substr(0, id.size() - 5);  // drop ".urdf"
        for (char& c : id)
            if (c == '/' || c == '\\') c = '_';
        bundles.push_back({id, entry.path()});
    }
    std::sort(bundles.begin(), bundles.end(),
              [](const Bundle& a, const Bundle& b) { return a.asset_id < b.asset_id; });
    return bundles;
}

// Full preprocessing of one bundle; throws to signal a discard.
std::string process_bundle(const Bundle& bundle, const fs::path& out_dir,
                           const PreprocessOptions& options) {
    std::ifstream uf(bundle.urdf_path);
    if (!uf) throw std::runtime_error("cannot open URDF");
    std::stringstream ubuf;
    ubuf << uf.rdbuf();

    KinematicTree raw_tree = parse_urdf(ubuf.str());  // validates structure

    ArticulatedAsset asset;
    asset.tree = raw_tree;
    fs::path mesh_base = bundle.urdf_path.parent_path();
    std::vector<const Link*> by_id(size_t(raw_tree.part_count()), nullptr);
    for (const Link& l : raw_tree.links) by_id[size_t(l.id)] = &l;
    for (const Link* link : by_id) {
        if (link->mesh_ref.empty())
            throw std::runtime_error("link " + std::to_string(link->id) + " has no mesh");
        TriMesh mesh = read_obj_file((mesh_base / link->mesh_ref).string());
        mesh.clean();
        if (mesh.empty())
            throw std::runtime_error("mesh '" + link->mesh_ref + "' is empty after cleaning");
        asset.part_meshes.push_back(std::move(mesh));
    }

    auto [norm_meshes, xf] = normalize_asset(asset.part_meshes);
    asset.part_meshes = std::move(norm_meshes);
    asset.tree = transform_tree(asset.tree, xf);

    fs::path asset_dir = out_dir / bundle.asset_id;
    fs::create_directories(asset_dir);

    AssetManifest manifest;
    manifest.asset_id = bundle.asset_id;
    manifest.K = asset.tree.part_count();
    manifest.resolution = options.resolution;
    manifest.normalization = xf;
    manifest.seed = derive_asset_seed(options.seed, bundle.asset_id);

    // Canonical URDF with mesh refs pointing at the normalized OBJ copies.
    for (Link& l : asset.tree.links) {
        std::string rel = "part_" + std::to_string(l.id) + ".obj";
        write_obj_file((asset_dir / rel).string(), asset.part_meshes[size_t(l.id)]);
        l.mesh_ref = rel;
        manifest.mesh_paths.push_back(rel);
    }
    manifest.urdf_path = "canonical.urdf";
    {
        std::ofstream f(asset_dir / manifest.urdf_path, std::ios::binary);
        f << write_urdf(asset.tree);
        if (!f) throw std::runtime_error("write failed: canonical.urdf");
    }

    std::vector<int> part_ids(asset.part_meshes.size());
    for (size_t p = 0; p < part_ids.size(); ++p) part_ids[p] = int(p);

    SparseVoxelGrid rest = voxelize(asset.part_meshes, part_ids, options.resolution);
    ArticulatedVoxelGrid embedded = embed(asset.tree, rest);
    manifest.rest_voxels_path = "rest.svox";
    write_articulated_voxel_file((asset_dir / manifest.rest_voxels_path).string(), embedded);

    std::vector<ArticulationState> states = sample_states(
        asset.tree, options.state_count, StateSampleMode::Random, manifest.seed);
    for (size_t n = 0; n < states.size(); ++n) {
        manifest.states.push_back(state_to_named(asset.tree, states[n]));
        std::vector<TriMesh> posed = pose_asset(asset, states[n]);
        // Moved parts can leave the rest-frame cube; each state gets its own
        // normalization before voxelization.
        auto [state_meshes, state_xf] = normalize_asset(posed);
        (void)state_xf;
        SparseVoxelGrid grid = voxelize(state_meshes, part_ids, options.resolution);
        std::string rel = "state_" + std::to_string(n) + ".svox";
        write_voxel_file((asset_dir / rel).string(), grid, manifest.K);
        manifest.state_voxels_paths.push_back(rel);
    }

    std::string manifest_path = (asset_dir / "manifest.json").string();
    write_manifest_file(manifest_path, manifest);
    return manifest_path;
}

}  // namespace

PreprocessSummary preprocess_corpus(const std::string& input_dir, const std::string& out_dir,
                                    const PreprocessOptions& options, std::ostream& log) {
    if (!fs::is_directory(input_dir))
        throw std::runtime_error("input directory not found: " + input_dir);
    fs::create_directories(out_dir);

    std::vector<Bundle> bundles = discover_bundles(input_dir);

    PreprocessSummary summary;
    std::vector<std::string> results(bundles.size());   // manifest path or empty
    std::vector<std::string> failures(bundles.size());  // discard reason or empty

    int workers = std::max(1, std::min(worker_count_from_env(options.threads),
                                       int(bundles.empty() ? 1 : bundles.size())));
    std::atomic<size_t> cursor{0};
    auto run = [&]() {
        for (;;) {
            size_t n = cursor.fetch_add(1);
            if (n >= bundles.size()) return;
            try {
                results[n] = process_bundle(bundles[n], out_dir, options);
            } catch (const std::exception& e) {
                failures[n] = e.what();
            }
        }
    };
    if (workers == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }

    for (size_t n = 0; n < bundles.size(); ++n) {
        if (!results[n].empty()) {
            summary.kept++;
            summary.manifest_paths.push_back(results[n]);
        } else {
            summary.discarded++;
            log << "discard " << bundles[n].asset_id << ": " << failures[n] << "\n";
        }
    }
    return summary;
}

}  // namespace artikit
