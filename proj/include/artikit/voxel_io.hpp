#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "artikit/joint_to_voxel.hpp"
#include "artikit/voxel_grid.hpp"

namespace artikit {

// Sparse voxel text format: one JSON header line {"C":..,"K":..,
// ["adjacency":[[..]],] "count":..,"resolution":..} followed by one line per
// cell, "i j k part c0 ... c{C-1}", in lexicographic (i,j,k) order with
// 9-significant-digit numbers. Byte deterministic.
struct VoxelFileContents {
    SparseVoxelGrid grid;
    int K = 0;
    std::optional<AdjacencyTensor> adjacency;
};

void write_voxel_stream(std::ostream& out, const SparseVoxelGrid& grid, int K,
                        const AdjacencyTensor* adjacency = nullptr);
VoxelFileContents read_voxel_stream(std::istream& in);

void write_voxel_file(const std::string& path, const SparseVoxelGrid& grid, int K,
                      const AdjacencyTensor* adjacency = nullptr);
VoxelFileContents read_voxel_file(const std::string& path);

void write_articulated_voxel_file(const std::string& path, const ArticulatedVoxelGrid& avg);
ArticulatedVoxelGrid read_articulated_voxel_file(const std::string& path);

}  // namespace artikit
