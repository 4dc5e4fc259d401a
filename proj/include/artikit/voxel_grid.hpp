#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "artikit/geometry.hpp"

namespace artikit {

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    bool empty() const { return vertices.empty() || faces.empty(); }
    Aabb bounds() const;
    double face_area(size_t f) const;

    // Drops zero-area and out-of-range faces.
    void clean(double area_eps = 1e-18);
};

// Uniform transform p -> scale * p + translation.
struct NormalizationTransform {
    double scale = 1.0;
    Vec3 translation;

    Vec3 apply(const Vec3& p) const { return p * scale + translation; }
};

// Maps the union bounding box into [0,1]^3: longest extent scaled to 1,
// x/z centered, min-y ("base") at exactly y = 0. Returns transformed copies
// plus the transform; joint pivots must be mapped with the same transform by
// the caller. Throws std::invalid_argument on empty or degenerate geometry.
std::pair<std::vector<TriMesh>, NormalizationTransform> normalize_asset(
    const std::vector<TriMesh>& meshes);

struct SparseVoxelGrid {
    struct Cell {
        int i = 0, j = 0, k = 0;
        int part_id = 0;

        bool operator==(const Cell& o) const = default;
    };

    int resolution = 64;
    int channel_count = 0;
    std::vector<Cell> cells;           // lexicographically sorted by (i,j,k), unique
    std::vector<double> channel_data;  // cells.size() * channel_count, row per cell

    size_t cell_count() const { return cells.size(); }

    std::span<double> channels(size_t cell_idx) {
        return {channel_data.data() + cell_idx * size_t(channel_count), size_t(channel_count)};
    }
    std::span<const double> channels(size_t cell_idx) const {
        return {channel_data.data() + cell_idx * size_t(channel_count), size_t(channel_count)};
    }

    // Distinct part count as max part id + 1.
    int part_count() const;
    bool cells_sorted_unique() const;
};

struct VoxelizeOptions {
    // Also activate cells whose center lies within half a voxel diagonal of
    // a part surface. Off by default: the solid-parity rule alone keeps
    // active counts calibrated to mesh volume; the band is a guarantee for
    // thin or open geometry and is always used in the non-watertight
    // fallback path.
    bool surface_band = false;
    int threads = 0;  // 0 = one worker per part, capped by hardware
};

struct VoxelizeReport {
    struct MeshReport {
        int part_id = 0;
        bool watertight = true;
        bool fallback_used = false;  // surface + exterior flood fill
    };
    std::vector<MeshReport> meshes;
};

// Solid voxelization of normalized part meshes at resolution^3. A cell is
// active iff its center is inside a part (parity of ray crossings, majority
// over +x/+y/+z rays). Cells claimed by several parts go to the part whose
// surface is nearest to the cell center, remaining ties to the lowest part
// id. Deterministic and independent of thread count. Channels start empty
// (C = 0).
SparseVoxelGrid voxelize(const std::vector<TriMesh>& meshes, const std::vector<int>& part_ids,
                         int resolution, const VoxelizeOptions& options = {},
                         VoxelizeReport* report = nullptr);

inline constexpr int kDefaultResolution = 64;

}  // namespace artikit
