#pragma once

#include <map>

#include "artikit/articulation_codec.hpp"
#include "artikit/voxel_grid.hpp"

namespace artikit {

// Voxel grid whose 10 channels carry the parent joint of each cell's part:
// channels 0..8 are the articulation code, channel 9 the parent part id
// (root sentinel -1). The adjacency tensor rides along as a redundant
// sidecar and is checked for consistency when decoding.
struct ArticulatedVoxelGrid {
    static constexpr int kChannels = ArticulationVector::kDim + 1;
    static constexpr double kRootSentinel = -1.0;

    SparseVoxelGrid grid;  // channel_count == kChannels
    AdjacencyTensor adjacency;
    int K = 0;
};

// Broadcasts each joint's attributes onto every cell of its child part.
// Geometry (active cells, part labels) is never altered. Requires the grid's
// part ids and the tree's link ids to cover each other exactly; throws
// std::invalid_argument otherwise.
ArticulatedVoxelGrid embed(const KinematicTree& tree, const SparseVoxelGrid& grid);

struct PartAggregate {
    ArticulationVector code;
    int parent_id = -1;
    size_t cell_count = 0;
};

// Per-part channel consensus: type code and parent id by majority vote
// (ties to the lower value), continuous components by the mean over cells
// agreeing with the winning type. Deterministic and invariant under cell
// reordering.
std::map<int, PartAggregate> aggregate_part_channels(const ArticulatedVoxelGrid& avg);

// Rebuilds the kinematic tree from an articulated grid. Exact inverse of
// embed; noisy grids are aggregated first. Throws std::runtime_error when
// the aggregated topology has a cycle, several roots, an empty part, or
// disagrees with the adjacency sidecar.
KinematicTree recover(const ArticulatedVoxelGrid& avg);

struct TreeDiff {
    bool topology_equal = false;  // same K, root, joint edges and types
    double max_attr_dev = 0.0;    // max abs deviation over pivots, directions, limits
};

TreeDiff compare_trees(const KinematicTree& a, const KinematicTree& b);

}  // namespace artikit
