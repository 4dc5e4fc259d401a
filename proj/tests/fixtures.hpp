#pragma once

// Shared deterministic generators and independent oracles for the test
// suites. Everything is seeded; no global state.

#include <algorithm>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "artikit/geometry.hpp"
#include "artikit/kinematic_graph.hpp"
#include "artikit/kinematics.hpp"
#include "artikit/voxel_grid.hpp"

namespace fixtures {

using namespace artikit;

inline double uniform01(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + uniform01(rng) * (hi - lo);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + int(rng() % uint64_t(hi - lo + 1));
}

inline Vec3 random_unit(std::mt19937_64& rng) {
    for (;;) {
        Vec3 v{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
        double n = norm(v);
        if (n > 0.1 && n <= 1.0) return v / n;
    }
}

// Value exactly representable by the project's 9-significant-digit text
// formatting (format_g9 round trips it bitwise).
inline double quantize9(double v) {
    return std::strtod(format_g9(v).c_str(), nullptr);
}

inline Vec3 quantize9(const Vec3& v) {
    return {quantize9(v.x), quantize9(v.y), quantize9(v.z)};
}

// Dyadic grid value: exact under addition/subtraction and 9-digit text.
inline double grid256(std::mt19937_64& rng, double lo, double hi) {
    int klo = int(lo * 256.0), khi = int(hi * 256.0);
    return double(uniform_int(rng, klo, khi)) / 256.0;
}

inline Joint random_joint(std::mt19937_64& rng, int parent, int child) {
    Joint j;
    j.parent = parent;
    j.child = child;
    switch (uniform_int(rng, 0, 2)) {
        case 0: j.jtype = JointType::Fixed; break;
        case 1: j.jtype = JointType::Revolute; break;
        default: j.jtype = JointType::Prismatic; break;
    }
    if (j.jtype == JointType::Fixed) return j;

    j.axis.pivot = {grid256(rng, 0.0, 1.0), grid256(rng, 0.0, 1.0), grid256(rng, 0.0, 1.0)};
    j.axis.direction = quantize9(random_unit(rng));
    // Limits always bracket zero so the resting/identity checks apply.
    if (j.jtype == JointType::Revolute) {
        j.limits.lower = uniform01(rng) < 0.5 ? 0.0 : quantize9(-uniform(rng, 0.1, 1.0));
        j.limits.upper = quantize9(uniform(rng, 0.3, 3.1));
    } else {
        j.limits.lower = uniform01(rng) < 0.5 ? 0.0 : quantize9(-uniform(rng, 0.02, 0.15));
        j.limits.upper = quantize9(uniform(rng, 0.05, 0.3));
    }
    return j;
}

// Random valid tree: dense ids, root 0, parent of link i drawn from links
// 0..i-1, mixed joint types, attributes exactly representable in canonical
// text form.
inline KinematicTree random_tree(std::mt19937_64& rng, int max_links = 12, int min_links = 1) {
    KinematicTree tree;
    int K = uniform_int(rng, min_links, max_links);
    for (int i = 0; i < K; ++i)
        tree.links.push_back({i, "link_" + std::to_string(i), ""});
    tree.root = 0;
    for (int i = 1; i < K; ++i)
        tree.joints.push_back(random_joint(rng, uniform_int(rng, 0, i - 1), i));
    return tree;
}

// Axis-aligned box, 12 triangles with outward winding.
inline TriMesh box_mesh(const Vec3& lo, const Vec3& hi) {
    TriMesh m;
    m.vertices = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
                  {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
    m.faces = {{0, 2, 1}, {0, 3, 2},   // z = lo
               {4, 5, 6}, {4, 6, 7},   // z = hi
               {0, 1, 5}, {0, 5, 4},   // y = lo
               {3, 7, 6}, {3, 6, 2},   // y = hi
               {0, 4, 7}, {0, 7, 3},   // x = lo
               {1, 2, 6}, {1, 6, 5}};  // x = hi
    return m;
}

// Icosphere with vertices on the exact sphere.
inline TriMesh icosphere(const Vec3& center, double radius, int subdivisions) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {{-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
                               {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
                               {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
    for (Vec3& v : verts) v = normalized(v);
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 v = normalized((verts[size_t(a)] + verts[size_t(b)]) * 0.5);
            verts.push_back(v);
            int id = int(verts.size()) - 1;
            midpoint[key] = id;
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    TriMesh m;
    for (const Vec3& v : verts) m.vertices.push_back(v * radius + center);
    m.faces = std::move(faces);
    return m;
}

// One disjoint box per link, laid out on a 3x2x2 slot grid inside the unit
// cube; every part gets interior cells from resolution 32 up.
inline ArticulatedAsset asset_with_boxes(std::mt19937_64& rng, const KinematicTree& tree) {
    ArticulatedAsset asset;
    asset.tree = tree;
    const int K = tree.part_count();
    for (int i = 0; i < K; ++i) {
        int sx = i % 3, sy = (i / 3) % 2, sz = i / 6;
        Vec3 slot_lo{sx / 3.0, sy / 2.0, sz / 2.0};
        Vec3 slot_size{1.0 / 3.0, 0.5, 0.5};
        Vec3 ext{uniform(rng, 0.12, 0.8 * slot_size.x), uniform(rng, 0.12, 0.8 * slot_size.y),
                 uniform(rng, 0.12, 0.8 * slot_size.z)};
        Vec3 margin = slot_size - ext;
        Vec3 lo{slot_lo.x + uniform(rng, 0.1, 0.9) * margin.x,
                slot_lo.y + uniform(rng, 0.1, 0.9) * margin.y,
                slot_lo.z + uniform(rng, 0.1, 0.9) * margin.z};
        asset.part_meshes.push_back(box_mesh(lo, lo + ext));
    }
    return asset;
}

inline ArticulatedAsset random_asset(std::mt19937_64& rng, int max_links = 12,
                                     int min_links = 1) {
    return asset_with_boxes(rng, random_tree(rng, max_links, min_links));
}

// Synthetic sparse grid with `cells_per_part` cells per part, disjoint by
// construction (per-part i-slabs). No geometry involved.
inline SparseVoxelGrid grid_for_parts(std::mt19937_64& rng, int K, int resolution,
                                      int cells_per_part) {
    SparseVoxelGrid grid;
    grid.resolution = resolution;
    std::set<std::tuple<int, int, int>> used;
    for (int p = 0; p < K; ++p) {
        int added = 0;
        while (added < cells_per_part) {
            int i = p % resolution;
            int j = uniform_int(rng, 0, resolution - 1);
            int k = uniform_int(rng, 0, resolution - 1);
            if (!used.insert({i, j, k}).second) continue;
            grid.cells.push_back({i, j, k, p});
            ++added;
        }
    }
    std::sort(grid.cells.begin(), grid.cells.end(), [](const auto& a, const auto& b) {
        return std::tie(a.i, a.j, a.k) < std::tie(b.i, b.j, b.k);
    });
    return grid;
}

// Independent validator: straightforward reachability + cycle + uniqueness
// checks, written without reference to validate_tree.
inline bool brute_force_valid(const KinematicTree& tree) {
    const int K = tree.part_count();
    if (K == 0) return false;
    if (int(tree.joints.size()) != K - 1) return false;

    std::set<int> ids;
    for (const Link& l : tree.links) ids.insert(l.id);
    if (int(ids.size()) != K || *ids.begin() != 0 || *ids.rbegin() != K - 1) return false;
    if (tree.root < 0 || tree.root >= K) return false;

    std::vector<int> parent_count(size_t(K), 0);
    for (const Joint& j : tree.joints) {
        if (j.parent < 0 || j.parent >= K || j.child < 0 || j.child >= K) return false;
        if (j.parent == j.child) return false;
        parent_count[size_t(j.child)]++;
        if (j.jtype == JointType::Fixed) {
            if (norm(j.axis.pivot) != 0.0 || norm(j.axis.direction) != 0.0) return false;
            if (j.limits.lower != 0.0 || j.limits.upper != 0.0) return false;
        } else {
            if (std::abs(norm(j.axis.direction) - 1.0) > 1e-9) return false;
        }
        if (j.limits.lower > j.limits.upper) return false;
    }
    if (parent_count[size_t(tree.root)] != 0) return false;
    for (int i = 0; i < K; ++i)
        if (i != tree.root && parent_count[size_t(i)] != 1) return false;

    // BFS reachability; with the in-degree facts above, full reachability
    // excludes cycles.
    std::vector<std::vector<int>> out_edges(static_cast<size_t>(K));
    for (const Joint& j : tree.joints) out_edges[size_t(j.parent)].push_back(j.child);
    std::vector<bool> seen(size_t(K), false);
    std::vector<int> queue{tree.root};
    seen[size_t(tree.root)] = true;
    size_t head = 0;
    while (head < queue.size()) {
        int u = queue[head++];
        for (int c : out_edges[size_t(u)])
            if (!seen[size_t(c)]) {
                seen[size_t(c)] = true;
                queue.push_back(c);
            }
    }
    return queue.size() == size_t(K);
}

inline bool trees_equal(const KinematicTree& a, const KinematicTree& b, double tol) {
    if (a.part_count() != b.part_count() || a.root != b.root) return false;
    if (a.joints.size() != b.joints.size()) return false;
    for (const Joint& ja : a.joints) {
        const Joint* jb = b.parent_joint(ja.child);
        if (!jb || jb->parent != ja.parent || jb->jtype != ja.jtype) return false;
        auto close = [&](double x, double y) { return std::abs(x - y) <= tol; };
        if (!close(ja.axis.pivot.x, jb->axis.pivot.x) ||
            !close(ja.axis.pivot.y, jb->axis.pivot.y) ||
            !close(ja.axis.pivot.z, jb->axis.pivot.z) ||
            !close(ja.axis.direction.x, jb->axis.direction.x) ||
            !close(ja.axis.direction.y, jb->axis.direction.y) ||
            !close(ja.axis.direction.z, jb->axis.direction.z) ||
            !close(ja.limits.lower, jb->limits.lower) ||
            !close(ja.limits.upper, jb->limits.upper))
            return false;
    }
    return true;
}

}  // namespace fixtures
