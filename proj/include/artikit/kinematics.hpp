#pragma once

#include <cstdint>
#include <vector>

#include "artikit/kinematic_graph.hpp"
#include "artikit/voxel_grid.hpp"

namespace artikit {

struct RigidTransform {
    Mat3 rotation;
    Vec3 translation;

    static RigidTransform identity() { return {}; }
    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

// a then applied after b: (a * b)(p) == a(b(p)).
inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

// One value per joint, ordered by ascending child link id. Radians for
// revolute joints, unit-cube lengths for prismatic, 0 for fixed.
struct ArticulationState {
    std::vector<double> q;
};

// Complete object at rest: one mesh per link (index == link id) plus the
// kinematic tree. The per-part segmentation is the mesh indexing itself.
struct ArticulatedAsset {
    std::vector<TriMesh> part_meshes;
    KinematicTree tree;
};

// Throws std::invalid_argument unless the tree validates and carries exactly
// one non-empty mesh per link.
void check_asset(const ArticulatedAsset& asset);

// Rigid motion of a single joint at displacement q (strictly within limits):
// revolute rotates about the pivot/direction line, prismatic translates
// along the direction, fixed is the identity.
RigidTransform joint_transform(const Joint& joint, double q);

// World transform per link id; the root is the identity and children
// compose parent-first in topological order.
std::vector<RigidTransform> forward_kinematics(const KinematicTree& tree,
                                               const ArticulationState& state);

std::vector<TriMesh> pose_asset(const ArticulatedAsset& asset, const ArticulationState& state);

enum class StateSampleMode { UniformGrid, Random };

// UniformGrid: states at global fractions j/count of every joint's range,
// j = 1..count (the resting state q = lower is excluded, the end state is
// included). Random: i.i.d. uniform per joint within limits, reproducible
// from the seed.
std::vector<ArticulationState> sample_states(const KinematicTree& tree, int count,
                                             StateSampleMode mode, uint64_t seed);

ArticulationState resting_state(const KinematicTree& tree);

// Joint order used by ArticulationState: index of each joint when sorted by
// child link id. Entry [child_id] is the q index, -1 for the root.
std::vector<int> state_index_by_child(const KinematicTree& tree);

// Applies a normalization to the kinematic quantities: pivots are mapped,
// directions kept, prismatic limits scaled (they are lengths), revolute
// limits kept (radians).
KinematicTree transform_tree(const KinematicTree& tree, const NormalizationTransform& xf);

inline constexpr int kDefaultStateCount = 5;

}  // namespace artikit
