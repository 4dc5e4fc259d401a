#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "artikit/kinematics.hpp"

namespace artikit {

struct PartRepository {
    struct Entry {
        TriMesh mesh;
        std::string label;
        Vec3 extents;  // exact bounding-box extents of the stored mesh
    };
    std::vector<Entry> entries;

    void add(TriMesh mesh, std::string label);
};

// Axis-aligned target box plus semantic label.
struct PartProposal {
    Vec3 center;
    Vec3 extents;
    std::string label;
};

// Open-set failure: no repository entry carries the requested label.
class RetrievalMiss : public std::runtime_error {
public:
    explicit RetrievalMiss(const std::string& label)
        : std::runtime_error("no repository entry with label '" + label + "'"), label_(label) {}

    const std::string& label() const { return label_; }

private:
    std::string label_;
};

struct RetrievalHit {
    size_t entry = 0;
    double d_size = 0.0;  // L2 distance between box extents
};

// argmin of extents distance over same-label entries, ties to the lowest
// entry id. Throws RetrievalMiss when the label is absent.
RetrievalHit retrieve_part(const PartRepository& repo, const PartProposal& proposal);
std::optional<RetrievalHit> try_retrieve_part(const PartRepository& repo,
                                              const PartProposal& proposal);

// Rigidly places retrieved meshes into the proposal boxes (anisotropic
// scaling to fill the box exactly) and attaches them to the tree's links,
// one (entry, proposal) pair per link id.
ArticulatedAsset assemble(const std::vector<std::pair<size_t, PartProposal>>& parts,
                          const KinematicTree& tree, const PartRepository& repo);

}  // namespace artikit
