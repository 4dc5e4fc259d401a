#include "artikit/retrieval.hpp"

#include <cmath>
#include <limits>

namespace artikit {

void PartRepository::add(TriMesh mesh, std::string label) {
    if (mesh.empty()) throw std::invalid_argument("repository: empty mesh");
    if (label.empty()) throw std::invalid_argument("repository: empty label");
    Entry e;
    e.extents = mesh.bounds().extents();
    e.mesh = std::move(mesh);
    e.label = std::move(label);
    entries.push_back(std::move(e));
}

std::optional<RetrievalHit> try_retrieve_part(const PartRepository& repo,
                                              const PartProposal& proposal) {
    if (repo.entries.empty()) throw std::invalid_argument("retrieve: empty repository");
    if (proposal.extents.x <= 0.0 || proposal.extents.y <= 0.0 || proposal.extents.z <= 0.0)
        throw std::invalid_argument("retrieve: proposal extents must be positive");

    std::optional<RetrievalHit> best;
    for (size_t n = 0; n < repo.entries.size(); ++n) {
        const auto& entry = repo.entries[n];
        if (entry.label != proposal.label) continue;
        double d = norm(entry.extents - proposal.extents);
        if (!best || d < best->d_size) best = RetrievalHit{n, d};  // strict < keeps the lowest id
    }
    return best;
}

RetrievalHit retrieve_part(const PartRepository& repo, const PartProposal& proposal) {
    std::optional<RetrievalHit> hit = try_retrieve_part(repo, proposal);
    if (!hit) throw RetrievalMiss(proposal.label);
    return *hit;
}

ArticulatedAsset assemble(const std::vector<std::pair<size_t, PartProposal>>& parts,
                          const KinematicTree& tree, const PartRepository& repo) {
    ValidationReport report = validate_tree(tree);
    if (!report.valid())
        throw std::invalid_argument("assemble: invalid tree: " + report.summary());
    if (parts.size() != size_t(tree.part_count()))
        throw std::invalid_argument("assemble: need one retrieved part per tree link (" +
                                    std::to_string(parts.size()) + " for " +
                                    std::to_string(tree.part_count()) + " links)");

    ArticulatedAsset asset;
    asset.tree = tree;
    for (const auto& [entry_id, proposal] : parts) {
        if (entry_id >= repo.entries.size())
            throw std::invalid_argument("assemble: entry id out of range");
        const auto& entry = repo.entries[entry_id];

        Aabb box = entry.mesh.bounds();
        Vec3 mesh_ext = box.extents();
        Vec3 mesh_center = box.center();
        Vec3 scale;
        for (int a = 0; a < 3; ++a)
            scale[a] = mesh_ext[a] > 1e-12 ? proposal.extents[a] / mesh_ext[a] : 1.0;
        // v' = scale*v + t, so a box that already matches passes through bitwise
        Vec3 t{proposal.center.x - scale.x * mesh_center.x,
               proposal.center.y - scale.y * mesh_center.y,
               proposal.center.z - scale.z * mesh_center.z};

        TriMesh placed = entry.mesh;
        for (Vec3& v : placed.vertices)
            v = Vec3{scale.x * v.x, scale.y * v.y, scale.z * v.z} + t;
        asset.part_meshes.push_back(std::move(placed));
    }

    check_asset(asset);
    return asset;
}

}  // namespace artikit
