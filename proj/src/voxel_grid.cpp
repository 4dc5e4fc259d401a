#include "artikit/voxel_grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace artikit {

Aabb TriMesh::bounds() const {
    Aabb b;
    for (const Vec3& v : vertices) b.expand(v);
    return b;
}

double TriMesh::face_area(size_t f) const {
    const auto& t = faces[f];
    const Vec3& a = vertices[size_t(t[0])];
    const Vec3& b = vertices[size_t(t[1])];
    const Vec3& c = vertices[size_t(t[2])];
    return 0.5 * norm(cross(b - a, c - a));
}

void TriMesh::clean(double area_eps) {
    std::vector<std::array<int, 3>> kept;
    kept.reserve(faces.size());
    const int n = static_cast<int>(vertices.size());
    for (size_t f = 0; f < faces.size(); ++f) {
        const auto& t = faces[f];
        if (t[0] < 0 || t[0] >= n || t[1] < 0 || t[1] >= n || t[2] < 0 || t[2] >= n) continue;
        if (face_area(f) <= area_eps) continue;
        kept.push_back(t);
    }
    faces = std::move(kept);
}

int SparseVoxelGrid::part_count() const {
    int k = 0;
    for (const Cell& c : cells) k = std::max(k, c.part_id + 1);
    return k;
}

bool SparseVoxelGrid::cells_sorted_unique() const {
    for (size_t n = 1; n < cells.size(); ++n) {
        const Cell& a = cells[n - 1];
        const Cell& b = cells[n];
        auto ta = std::tie(a.i, a.j, a.k);
        auto tb = std::tie(b.i, b.j, b.k);
        if (!(ta < tb)) return false;
    }
    return true;
}

std::pair<std::vector<TriMesh>, NormalizationTransform> normalize_asset(
    const std::vector<TriMesh>& meshes) {
    Aabb box;
    for (const TriMesh& m : meshes)
        for (const Vec3& v : m.vertices) box.expand(v);
    if (box.empty()) throw std::invalid_argument("normalize_asset: empty geometry");

    Vec3 ext = box.extents();
    double longest = std::max({ext.x, ext.y, ext.z});
    if (longest <= 0.0) throw std::invalid_argument("normalize_asset: degenerate geometry");

    NormalizationTransform xf;
    xf.scale = 1.0 / longest;
    xf.translation.x = (1.0 - xf.scale * ext.x) * 0.5 - xf.scale * box.lo.x;
    xf.translation.y = -(xf.scale * box.lo.y);  // base aligned to y = 0
    xf.translation.z = (1.0 - xf.scale * ext.z) * 0.5 - xf.scale * box.lo.z;

    std::vector<TriMesh> out = meshes;
    for (TriMesh& m : out)
        for (Vec3& v : m.vertices) v = xf.apply(v);
    return {std::move(out), xf};
}

// ---------------------------------------------------------------------------
// Voxelizer
// ---------------------------------------------------------------------------

namespace {

constexpr uint8_t kOutside = 0;
constexpr uint8_t kInside = 1;
constexpr uint8_t kOnSurface = 2;

// Squared distance from point p to triangle abc (Ericson, Real-Time
// Collision Detection 5.1.5).
double point_triangle_dist2(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return norm2(ap);

    Vec3 bp = p - b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return norm2(bp);

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        double v = d1 / (d1 - d3);
        return norm2(ap - ab * v);
    }

    Vec3 cp = p - c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return norm2(cp);

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        double w = d2 / (d2 - d6);
        return norm2(ap - ac * w);
    }

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return norm2(bp - (c - b) * w);
    }

    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    return norm2(ap - ab * v - ac * w);
}

struct ColumnHit {
    double depth;
    bool graze;
};

// Crossing of the axis-aligned line (u,v) with a triangle given in permuted
// (u,v,depth) coordinates. Returns false on a clean miss; graze means the
// line passes within epsilon of an edge/vertex or a degenerate projection.
bool column_crossing(double pu, double pv, const Vec3& t0, const Vec3& t1, const Vec3& t2,
                     ColumnHit& hit) {
    constexpr double kBaryEps = 1e-9;
    constexpr double kAreaEps = 1e-13;

    double denom = (t1.y - t2.y) * (t0.x - t2.x) + (t2.x - t1.x) * (t0.y - t2.y);
    if (std::abs(denom) <= kAreaEps) {
        // Projection is (nearly) a segment: the triangle plane contains the
        // ray direction. Grazes only if the point sits on that segment.
        auto seg_dist2 = [&](const Vec3& a, const Vec3& b) {
            double abx = b.x - a.x, aby = b.y - a.y;
            double apx = pu - a.x, apy = pv - a.y;
            double len2 = abx * abx + aby * aby;
            double s = len2 > 0.0 ? std::clamp((apx * abx + apy * aby) / len2, 0.0, 1.0) : 0.0;
            double dx = apx - s * abx, dy = apy - s * aby;
            return dx * dx + dy * dy;
        };
        double d2 = std::min({seg_dist2(t0, t1), seg_dist2(t1, t2), seg_dist2(t2, t0)});
        if (d2 <= kBaryEps * kBaryEps) {
            hit.graze = true;
            return true;
        }
        return false;
    }

    double a = ((t1.y - t2.y) * (pu - t2.x) + (t2.x - t1.x) * (pv - t2.y)) / denom;
    double b = ((t2.y - t0.y) * (pu - t2.x) + (t0.x - t2.x) * (pv - t2.y)) / denom;
    double c = 1.0 - a - b;
    double lo = std::min({a, b, c});
    if (lo > kBaryEps) {
        hit.depth = a * t0.z + b * t1.z + c * t2.z;
        hit.graze = false;
        return true;
    }
    if (lo >= -kBaryEps) {
        hit.graze = true;
        return true;
    }
    return false;
}

struct PartOccupancy {
    std::vector<uint8_t> occ;                      // kOutside / kInside / kOnSurface
    std::unordered_map<int64_t, double> band_d2;   // cells near the surface
    bool watertight = true;
    bool fallback_used = false;
};

class PartVoxelizer {
public:
    PartVoxelizer(const TriMesh& mesh, int resolution)
        : mesh_(mesh), R_(resolution), h_(1.0 / resolution) {}

    PartOccupancy run(bool need_fallback_ready) {
        PartOccupancy result;
        result.occ.assign(size_t(R_) * size_t(R_) * size_t(R_), kOutside);
        surface_band(result);

        votes_inside_.assign(result.occ.size(), 0);
        votes_total_.assign(result.occ.size(), 0);
        for (int axis = 0; axis < 3; ++axis) parity_axis(axis, result);

        for (size_t n = 0; n < result.occ.size(); ++n) {
            if (result.occ[n] == kOnSurface) continue;
            if (votes_total_[n] > 0 && 2 * votes_inside_[n] > votes_total_[n])
                result.occ[n] = kInside;
        }

        if (!result.watertight && need_fallback_ready) fallback_fill(result);
        return result;
    }

private:
    int64_t lindex(int i, int j, int k) const {
        return (int64_t(i) * R_ + j) * R_ + k;
    }

    // Minimum squared center-to-surface distance for every cell within half
    // a voxel diagonal of a triangle.
    void surface_band(PartOccupancy& result) const {
        const double band = 0.5 * std::sqrt(3.0) * h_ * (1.0 + 1e-9);
        for (const auto& f : mesh_.faces) {
            const Vec3& a = mesh_.vertices[size_t(f[0])];
            const Vec3& b = mesh_.vertices[size_t(f[1])];
            const Vec3& c = mesh_.vertices[size_t(f[2])];
            Aabb box;
            box.expand(a);
            box.expand(b);
            box.expand(c);
            int ilo = std::max(0, int(std::floor((box.lo.x - band) * R_ - 0.5)));
            int jlo = std::max(0, int(std::floor((box.lo.y - band) * R_ - 0.5)));
            int klo = std::max(0, int(std::floor((box.lo.z - band) * R_ - 0.5)));
            int ihi = std::min(R_ - 1, int(std::ceil((box.hi.x + band) * R_ - 0.5)) + 1);
            int jhi = std::min(R_ - 1, int(std::ceil((box.hi.y + band) * R_ - 0.5)) + 1);
            int khi = std::min(R_ - 1, int(std::ceil((box.hi.z + band) * R_ - 0.5)) + 1);
            for (int i = ilo; i <= ihi; ++i)
                for (int j = jlo; j <= jhi; ++j)
                    for (int k = klo; k <= khi; ++k) {
                        Vec3 center{(i + 0.5) * h_, (j + 0.5) * h_, (k + 0.5) * h_};
                        double d2 = point_triangle_dist2(center, a, b, c);
                        if (d2 > band * band) continue;
                        auto [it, inserted] = result.band_d2.try_emplace(lindex(i, j, k), d2);
                        if (!inserted && d2 < it->second) it->second = d2;
                    }
        }
    }

    // Parity votes along one axis. Coordinates are permuted so the ray runs
    // along "depth": axis 0 -> (u,v,w)=(y,z,x), 1 -> (z,x,y), 2 -> (x,y,z).
    void parity_axis(int axis, PartOccupancy& result) {
        const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
        auto permute = [&](const Vec3& p) { return Vec3{p[ua], p[va], p[axis]}; };

        std::vector<Vec3> tv(mesh_.vertices.size());
        for (size_t n = 0; n < mesh_.vertices.size(); ++n) tv[n] = permute(mesh_.vertices[n]);

        // Bin triangles by projected (u,v) bounding box.
        std::vector<std::vector<int>> bins(size_t(R_) * size_t(R_));
        for (size_t f = 0; f < mesh_.faces.size(); ++f) {
            const auto& tri = mesh_.faces[f];
            double ulo = std::min({tv[size_t(tri[0])].x, tv[size_t(tri[1])].x, tv[size_t(tri[2])].x});
            double uhi = std::max({tv[size_t(tri[0])].x, tv[size_t(tri[1])].x, tv[size_t(tri[2])].x});
            double vlo = std::min({tv[size_t(tri[0])].y, tv[size_t(tri[1])].y, tv[size_t(tri[2])].y});
            double vhi = std::max({tv[size_t(tri[0])].y, tv[size_t(tri[1])].y, tv[size_t(tri[2])].y});
            int iu0 = std::clamp(int(std::floor(ulo * R_ - 0.51)), 0, R_ - 1);
            int iu1 = std::clamp(int(std::ceil(uhi * R_ + 0.51)), 0, R_ - 1);
            int iv0 = std::clamp(int(std::floor(vlo * R_ - 0.51)), 0, R_ - 1);
            int iv1 = std::clamp(int(std::ceil(vhi * R_ + 0.51)), 0, R_ - 1);
            for (int iu = iu0; iu <= iu1; ++iu)
                for (int iv = iv0; iv <= iv1; ++iv)
                    bins[size_t(iu) * size_t(R_) + size_t(iv)].push_back(int(f));
        }

        // Lateral jitter offsets (in units of h) used to step off edges and
        // vertices; the first entry is the exact center.
        static constexpr double kJitter[][2] = {
            {0.0, 0.0},         {1.3e-4, 2.9e-4},   {-2.7e-4, 1.1e-4}, {3.1e-4, -1.7e-4},
            {-1.9e-4, -3.3e-4}, {4.3e-4, 0.7e-4},   {-0.7e-4, 4.1e-4}, {2.3e-4, 3.7e-4}};
        constexpr int kMaxTries = int(sizeof(kJitter) / sizeof(kJitter[0]));
        constexpr double kDepthEps = 1e-12;

        std::vector<double> crossings;
        for (int iu = 0; iu < R_; ++iu) {
            for (int iv = 0; iv < R_; ++iv) {
                const auto& bin = bins[size_t(iu) * size_t(R_) + size_t(iv)];
                bool resolved = false;
                for (int attempt = 0; attempt < kMaxTries && !resolved; ++attempt) {
                    double pu = (iu + 0.5 + kJitter[attempt][0]) * h_;
                    double pv = (iv + 0.5 + kJitter[attempt][1]) * h_;
                    crossings.clear();
                    bool grazed = false;
                    for (int f : bin) {
                        const auto& tri = mesh_.faces[size_t(f)];
                        ColumnHit hit;
                        if (!column_crossing(pu, pv, tv[size_t(tri[0])], tv[size_t(tri[1])],
                                             tv[size_t(tri[2])], hit))
                            continue;
                        if (hit.graze) {
                            grazed = true;
                            break;
                        }
                        crossings.push_back(hit.depth);
                    }
                    if (grazed) continue;
                    resolved = true;

                    std::sort(crossings.begin(), crossings.end());
                    if (crossings.size() % 2 != 0) result.watertight = false;

                    size_t below = 0;
                    for (int iw = 0; iw < R_; ++iw) {
                        double w = (iw + 0.5) * h_;
                        while (below < crossings.size() && crossings[below] < w - kDepthEps) ++below;
                        int i = 0, j = 0, k = 0;
                        switch (axis) {
                            case 0: i = iw; j = iu; k = iv; break;
                            case 1: i = iv; j = iw; k = iu; break;
                            default: i = iu; j = iv; k = iw; break;
                        }
                        size_t idx = size_t(lindex(i, j, k));
                        if (below < crossings.size() && std::abs(crossings[below] - w) <= kDepthEps) {
                            result.occ[idx] = kOnSurface;  // center exactly on the surface
                            continue;
                        }
                        votes_total_[idx]++;
                        if (below % 2 == 1) votes_inside_[idx]++;
                    }
                }
                // An unresolved column leaves its cells without this axis's
                // vote; the other axes still classify them.
            }
        }
    }

    // Non-watertight fallback: surface cells plus everything an exterior
    // 6-connected flood fill cannot reach.
    void fallback_fill(PartOccupancy& result) const {
        result.fallback_used = true;
        const size_t total = size_t(R_) * size_t(R_) * size_t(R_);
        std::vector<uint8_t> blocked(total, 0);
        for (const auto& [key, d2] : result.band_d2) blocked[size_t(key)] = 1;

        std::vector<uint8_t> visited(total, 0);
        std::vector<int64_t> stack;
        auto push_if_open = [&](int i, int j, int k) {
            int64_t n = lindex(i, j, k);
            if (!visited[size_t(n)] && !blocked[size_t(n)]) {
                visited[size_t(n)] = 1;
                stack.push_back(n);
            }
        };
        for (int a = 0; a < R_; ++a)
            for (int b = 0; b < R_; ++b) {
                push_if_open(0, a, b);
                push_if_open(R_ - 1, a, b);
                push_if_open(a, 0, b);
                push_if_open(a, R_ - 1, b);
                push_if_open(a, b, 0);
                push_if_open(a, b, R_ - 1);
            }
        while (!stack.empty()) {
            int64_t n = stack.back();
            stack.pop_back();
            int k = int(n % R_), j = int((n / R_) % R_), i = int(n / (int64_t(R_) * R_));
            if (i > 0) push_if_open(i - 1, j, k);
            if (i + 1 < R_) push_if_open(i + 1, j, k);
            if (j > 0) push_if_open(i, j - 1, k);
            if (j + 1 < R_) push_if_open(i, j + 1, k);
            if (k > 0) push_if_open(i, j, k - 1);
            if (k + 1 < R_) push_if_open(i, j, k + 1);
        }

        for (size_t n = 0; n < total; ++n)
            result.occ[n] = blocked[n] ? kOnSurface : (visited[n] ? kOutside : kInside);
    }

    const TriMesh& mesh_;
    const int R_;
    const double h_;
    std::vector<uint8_t> votes_inside_;
    std::vector<uint8_t> votes_total_;
};

// Exact squared distance from a point to a whole mesh, with per-triangle
// bounding-box early-out. Used only for contested cells outside the band.
double mesh_dist2(const Vec3& p, const TriMesh& mesh) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[size_t(f[0])];
        const Vec3& b = mesh.vertices[size_t(f[1])];
        const Vec3& c = mesh.vertices[size_t(f[2])];
        double dx = std::max({cwise_min(cwise_min(a, b), c).x - p.x, 0.0,
                              p.x - cwise_max(cwise_max(a, b), c).x});
        double dy = std::max({cwise_min(cwise_min(a, b), c).y - p.y, 0.0,
                              p.y - cwise_max(cwise_max(a, b), c).y});
        double dz = std::max({cwise_min(cwise_min(a, b), c).z - p.z, 0.0,
                              p.z - cwise_max(cwise_max(a, b), c).z});
        if (dx * dx + dy * dy + dz * dz >= best) continue;
        best = std::min(best, point_triangle_dist2(p, a, b, c));
    }
    return best;
}

}  // namespace

SparseVoxelGrid voxelize(const std::vector<TriMesh>& meshes, const std::vector<int>& part_ids,
                         int resolution, const VoxelizeOptions& options, VoxelizeReport* report) {
    if (meshes.size() != part_ids.size())
        throw std::invalid_argument("voxelize: one part id per mesh required");
    if (resolution < 1 || resolution > 1024)
        throw std::invalid_argument("voxelize: resolution out of range");
    for (int id : part_ids)
        if (id < 0) throw std::invalid_argument("voxelize: negative part id");

    const int R = resolution;
    const size_t P = meshes.size();

    std::vector<TriMesh> cleaned(meshes);
    for (TriMesh& m : cleaned) m.clean();

    // Per-part occupancy, computed independently (parallel over parts).
    std::vector<PartOccupancy> occ(P);
    {
        unsigned hw = std::thread::hardware_concurrency();
        int workers = options.threads > 0 ? options.threads : int(hw ? hw : 1);
        workers = std::max(1, std::min<int>(workers, int(P)));
        std::atomic<size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                size_t p = next.fetch_add(1);
                if (p >= P) return;
                occ[p] = PartVoxelizer(cleaned[p], R).run(true);
            }
        };
        if (workers == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
    }

    if (report) {
        report->meshes.clear();
        for (size_t p = 0; p < P; ++p)
            report->meshes.push_back({part_ids[p], occ[p].watertight, occ[p].fallback_used});
    }

    auto active_in_part = [&](size_t p, int64_t n) {
        if (occ[p].occ[size_t(n)] != kOutside) return true;
        return options.surface_band && occ[p].band_d2.count(n) > 0;
    };

    SparseVoxelGrid grid;
    grid.resolution = R;
    grid.channel_count = 0;

    std::vector<size_t> claimants;
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < R; ++j)
            for (int k = 0; k < R; ++k) {
                int64_t n = (int64_t(i) * R + j) * R + k;
                claimants.clear();
                for (size_t p = 0; p < P; ++p)
                    if (active_in_part(p, n)) claimants.push_back(p);
                if (claimants.empty()) continue;

                size_t owner = claimants[0];
                if (claimants.size() > 1) {
                    // Nearest surface wins; ties go to the lowest part id.
                    Vec3 center{(i + 0.5) / R, (j + 0.5) / R, (k + 0.5) / R};
                    double best = std::numeric_limits<double>::infinity();
                    int best_id = std::numeric_limits<int>::max();
                    for (size_t p : claimants) {
                        auto it = occ[p].band_d2.find(n);
                        double d2 = it != occ[p].band_d2.end() ? it->second
                                                               : mesh_dist2(center, cleaned[p]);
                        if (d2 < best || (d2 == best && part_ids[p] < best_id)) {
                            best = d2;
                            best_id = part_ids[p];
                            owner = p;
                        }
                    }
                }
                grid.cells.push_back({i, j, k, part_ids[owner]});
            }

    return grid;
}

}  // namespace artikit
