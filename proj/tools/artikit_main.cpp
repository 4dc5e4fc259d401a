// artikit: preprocessing, round-trip auditing, evaluation, retrieval and
// posing for articulated 3D assets.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "artikit/joint_to_voxel.hpp"
#include "artikit/metrics.hpp"
#include "artikit/obj_io.hpp"
#include "artikit/pipeline.hpp"
#include "artikit/retrieval.hpp"
#include "artikit/voxel_io.hpp"

namespace fs = std::filesystem;
using namespace artikit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsage = 2;

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

Camera parse_camera(const std::string& spec) {
    Camera cam;
    if (spec.empty()) return cam;
    std::istringstream ss(spec);
    char comma = 0;
    if (!(ss >> cam.azimuth_deg >> comma >> cam.elevation_deg) || comma != ',')
        throw CLI::ValidationError("--camera expects az,el in degrees");
    return cam;
}

int cmd_validate(const std::vector<std::string>& paths) {
    int bad = 0;
    for (const std::string& path : paths) {
        try {
            std::vector<std::string> warnings;
            KinematicTree tree = parse_urdf(read_text_file(path), &warnings);
            for (const std::string& w : warnings) std::cerr << path << ": warning: " << w << "\n";
            ValidationReport report = validate_tree(tree);
            if (report.valid()) {
                std::cout << path << ": valid (K=" << tree.part_count() << ")\n";
            } else {
                std::cout << path << ": INVALID: " << report.summary() << "\n";
                ++bad;
            }
        } catch (const std::exception& e) {
            std::cout << path << ": INVALID: " << e.what() << "\n";
            ++bad;
        }
    }
    return bad == 0 ? kExitOk : kExitDataError;
}

int cmd_preprocess(const std::string& in_dir, const std::string& out_dir, int resolution,
                   int states, uint64_t seed) {
    PreprocessOptions options;
    options.resolution = resolution;
    options.state_count = states;
    options.seed = seed;
    PreprocessSummary summary = preprocess_corpus(in_dir, out_dir, options, std::cerr);
    std::cout << "kept " << summary.kept << " / discarded " << summary.discarded << "\n";
    return kExitOk;
}

int cmd_roundtrip(const std::vector<std::string>& manifests) {
    int failures = 0;
    for (const std::string& path : manifests) {
        AssetManifest m = read_manifest_file(path);
        fs::path dir = fs::path(path).parent_path();
        KinematicTree source = parse_urdf(read_text_file((dir / m.urdf_path).string()));
        ArticulatedVoxelGrid avg =
            read_articulated_voxel_file((dir / m.rest_voxels_path).string());
        try {
            KinematicTree recovered = recover(avg);
            TreeDiff diff = compare_trees(source, recovered);
            if (diff.topology_equal) {
                std::cout << m.asset_id << ": topology exact, max attr dev "
                          << format_g9(diff.max_attr_dev) << "\n";
            } else {
                std::cout << m.asset_id << ": TOPOLOGY MISMATCH\n";
                ++failures;
            }
        } catch (const std::exception& e) {
            std::cout << m.asset_id << ": RECOVERY FAILED: " << e.what() << "\n";
            ++failures;
        }
    }
    if (manifests.size() > 1)
        std::cout << (manifests.size() - size_t(failures)) << "/" << manifests.size()
                  << " pass\n";
    return failures == 0 ? kExitOk : kExitDataError;
}

int cmd_eval(const std::string& gen_manifest, const std::string& gt_manifest,
             const std::string& out_dir, int states, int points, uint64_t seed,
             const std::string& camera_spec) {
    ArticulatedAsset gen = load_manifest_asset(gen_manifest);
    ArticulatedAsset gt = load_manifest_asset(gt_manifest);
    Camera camera = parse_camera(camera_spec);

    EvalReport report = eval_protocol(gen, gt, states, points, seed, camera);

    fs::create_directories(out_dir);
    {
        std::ofstream f(fs::path(out_dir) / "report.json", std::ios::binary);
        f << eval_report_to_json(report);
        if (!f) throw std::runtime_error("write failed: report.json");
    }

    auto render_pair = [&](const ArticulatedAsset& asset, const ArticulationState& st,
                           const std::string& stem) {
        std::vector<TriMesh> posed = pose_asset(asset, st);
        std::vector<Rgb> colors;
        for (size_t p = 0; p < posed.size(); ++p) colors.push_back(part_color(int(p)));
        write_ppm_file((fs::path(out_dir) / (stem + ".ppm")).string(),
                       rasterize(posed, colors, camera));
    };
    render_pair(gen, resting_state(gen.tree), "rs_gen");
    render_pair(gt, resting_state(gt.tree), "rs_gt");
    std::vector<ArticulationState> gen_states =
        sample_states(gen.tree, states, StateSampleMode::UniformGrid, seed);
    std::vector<ArticulationState> gt_states =
        sample_states(gt.tree, states, StateSampleMode::UniformGrid, seed);
    for (int n = 0; n < states; ++n) {
        render_pair(gen, gen_states[size_t(n)], "as_" + std::to_string(n + 1) + "_gen");
        render_pair(gt, gt_states[size_t(n)], "as_" + std::to_string(n + 1) + "_gt");
    }

    // Table 1 column order.
    std::cout << "RS-PSNR AS-PSNR RS-CD AS-CD\n";
    std::cout << format_g9(report.rs_psnr) << " " << format_g9(report.as_psnr) << " "
              << format_g9(report.rs_cd) << " " << format_g9(report.as_cd) << "\n";
    return kExitOk;
}

int cmd_retrieve(const std::string& repo_manifest, const std::string& proposals_file,
                 const std::string& tree_file, const std::string& out_dir) {
    nlohmann::json repo_json = nlohmann::json::parse(read_text_file(repo_manifest));
    fs::path repo_dir = fs::path(repo_manifest).parent_path();
    PartRepository repo;
    for (const auto& entry : repo_json) {
        TriMesh mesh = read_obj_file((repo_dir / entry.at("mesh_path").get<std::string>()).string());
        repo.add(std::move(mesh), entry.at("label").get<std::string>());
    }

    nlohmann::json props_json = nlohmann::json::parse(read_text_file(proposals_file));
    std::vector<PartProposal> proposals;
    for (const auto& p : props_json) {
        PartProposal prop;
        const auto& c = p.at("center");
        const auto& e = p.at("extents");
        prop.center = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
        prop.extents = {e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>()};
        prop.label = p.at("label").get<std::string>();
        proposals.push_back(std::move(prop));
    }

    KinematicTree tree = parse_urdf(read_text_file(tree_file));

    int misses = 0;
    std::vector<std::pair<size_t, PartProposal>> chosen;
    nlohmann::json log = nlohmann::json::array();
    for (size_t n = 0; n < proposals.size(); ++n) {
        std::optional<RetrievalHit> hit = try_retrieve_part(repo, proposals[n]);
        if (!hit) {
            std::cerr << "proposal " << n << ": no entry with label '" << proposals[n].label
                      << "'\n";
            log.push_back({{"proposal", n}, {"label", proposals[n].label}, {"miss", true}});
            ++misses;
            continue;
        }
        log.push_back({{"proposal", n},
                       {"label", proposals[n].label},
                       {"entry", hit->entry},
                       {"d_size", hit->d_size}});
        chosen.emplace_back(hit->entry, proposals[n]);
    }

    fs::create_directories(out_dir);
    {
        std::ofstream f(fs::path(out_dir) / "retrieval_log.json", std::ios::binary);
        f << log.dump(2) << "\n";
    }
    if (misses > 0) {
        std::cerr << misses << " retrieval miss(es); assembly refused\n";
        return kExitDataError;
    }

    ArticulatedAsset asset = assemble(chosen, tree, repo);
    for (size_t p = 0; p < asset.part_meshes.size(); ++p) {
        std::string rel = "part_" + std::to_string(p) + ".obj";
        write_obj_file((fs::path(out_dir) / rel).string(), asset.part_meshes[p]);
        for (Link& l : asset.tree.links)
            if (l.id == int(p)) l.mesh_ref = rel;
    }
    {
        std::ofstream f(fs::path(out_dir) / "assembled.urdf", std::ios::binary);
        f << write_urdf(asset.tree);
    }
    std::cout << "assembled " << asset.part_meshes.size() << " parts\n";
    return kExitOk;
}

int cmd_pose(const std::string& manifest_path, double fraction, const std::string& state_file,
             const std::string& out_dir, const std::string& camera_spec) {
    ArticulatedAsset asset = load_manifest_asset(manifest_path);

    ArticulationState state;
    if (!state_file.empty()) {
        nlohmann::json j = nlohmann::json::parse(read_text_file(state_file));
        state = state_from_named(asset.tree, j.get<std::map<std::string, double>>());
    } else {
        if (fraction < 0.0 || fraction > 1.0)
            throw std::runtime_error("--fraction must lie in [0,1]");
        state = resting_state(asset.tree);
        std::vector<int> qidx = state_index_by_child(asset.tree);
        for (const Joint& j : asset.tree.joints) {
            double q = fraction == 1.0
                           ? j.limits.upper
                           : j.limits.lower + fraction * (j.limits.upper - j.limits.lower);
            state.q[size_t(qidx[size_t(j.child)])] = q;
        }
    }

    std::vector<TriMesh> posed = pose_asset(asset, state);

    fs::create_directories(out_dir);
    std::vector<Rgb> colors;
    for (size_t p = 0; p < posed.size(); ++p) {
        write_obj_file((fs::path(out_dir) / ("posed_" + std::to_string(p) + ".obj")).string(),
                       posed[p]);
        colors.push_back(part_color(int(p)));
    }
    write_ppm_file((fs::path(out_dir) / "render.ppm").string(),
                   rasterize(posed, colors, parse_camera(camera_spec)));
    std::cout << "posed " << posed.size() << " parts\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"articulated-asset toolkit"};
    app.require_subcommand(1);

    int resolution = kDefaultResolution;
    int states = kDefaultStateCount;
    int points = kDefaultPointBudget;
    uint64_t seed = 0;
    std::string in_dir, out_dir, camera_spec;

    auto* validate = app.add_subcommand("validate", "parse and validate URDF files");
    std::vector<std::string> validate_paths;
    validate->add_option("urdf", validate_paths, "URDF files")->required();

    auto* preprocess = app.add_subcommand("preprocess", "normalize, voxelize and embed a corpus");
    preprocess->add_option("--in", in_dir, "input directory with URDF + mesh bundles")->required();
    preprocess->add_option("--out", out_dir, "output directory")->required();
    preprocess->add_option("--resolution", resolution, "voxel grid resolution");
    preprocess->add_option("--states", states, "sampled articulation states per asset");
    preprocess->add_option("--seed", seed, "global random seed");

    auto* roundtrip = app.add_subcommand("roundtrip", "recover trees from embedded grids");
    std::vector<std::string> roundtrip_manifests;
    roundtrip->add_option("manifest", roundtrip_manifests, "asset manifests")->required();

    auto* eval = app.add_subcommand("eval", "resting/articulated-state evaluation");
    std::string gen_manifest, gt_manifest;
    eval->add_option("--gen", gen_manifest, "generated asset manifest")->required();
    eval->add_option("--gt", gt_manifest, "ground-truth asset manifest")->required();
    eval->add_option("--out", out_dir, "output directory")->required();
    eval->add_option("--states", states, "articulated states to average");
    eval->add_option("--points", points, "surface samples per asset");
    eval->add_option("--seed", seed, "sampling seed");
    eval->add_option("--camera", camera_spec, "az,el view angles in degrees");

    auto* retrieve = app.add_subcommand("retrieve", "box-similarity retrieval baseline");
    std::string repo_manifest, proposals_file, tree_file;
    retrieve->add_option("--repo", repo_manifest, "repository manifest JSON")->required();
    retrieve->add_option("--proposals", proposals_file, "part proposals JSON")->required();
    retrieve->add_option("--tree", tree_file, "kinematic tree URDF")->required();
    retrieve->add_option("--out", out_dir, "output directory")->required();

    auto* pose = app.add_subcommand("pose", "pose an asset and render it");
    std::string manifest_path, state_file;
    double fraction = 0.0;
    pose->add_option("--manifest", manifest_path, "asset manifest")->required();
    pose->add_option("--fraction", fraction, "global articulation fraction in [0,1]");
    pose->add_option("--state", state_file, "JSON state keyed by child link name");
    pose->add_option("--out", out_dir, "output directory")->required();
    pose->add_option("--camera", camera_spec, "az,el view angles in degrees");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(validate_paths);
        if (preprocess->parsed())
            return cmd_preprocess(in_dir, out_dir, resolution, states, seed);
        if (roundtrip->parsed()) return cmd_roundtrip(roundtrip_manifests);
        if (eval->parsed())
            return cmd_eval(gen_manifest, gt_manifest, out_dir, states, points, seed, camera_spec);
        if (retrieve->parsed())
            return cmd_retrieve(repo_manifest, proposals_file, tree_file, out_dir);
        if (pose->parsed())
            return cmd_pose(manifest_path, fraction, state_file, out_dir, camera_spec);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitUsage;
}
