#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "artikit/kinematics.hpp"
#include "artikit/voxel_grid.hpp"

namespace artikit {

struct PointCloud {
    std::vector<Vec3> points;
    int source_mesh_id = -1;
};

// Area-weighted uniform surface sampling, reproducible from the seed.
PointCloud sample_surface_points(const TriMesh& mesh, int n, uint64_t seed);
PointCloud sample_surface_points(const std::vector<TriMesh>& meshes, int n, uint64_t seed);

// Symmetric squared-distance Chamfer distance:
//   CD = mean_x min_y |x-y|^2 + mean_y min_x |y-x|^2.
// Nearest neighbors run through a KD-tree that matches the brute-force scan
// exactly.
double chamfer(const PointCloud& x, const PointCloud& y);

// Brute-force O(nm) reference used as the oracle for the KD-tree path.
double chamfer_bruteforce(const PointCloud& x, const PointCloud& y);

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;

    bool operator==(const Rgb& o) const = default;
};

// Deterministic per-part color used to distinguish links in renders.
Rgb part_color(int part_id);

struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb;  // row-major, 3 bytes per pixel

    static Image filled(int w, int h, Rgb color);
    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb color);

    bool operator==(const Image& o) const = default;
};

struct Camera {
    double azimuth_deg = 30.0;
    double elevation_deg = 20.0;
    double ortho_scale = 2.0;  // world units spanned by the viewport
    int width = 512;
    int height = 512;
};

// Orthographic z-buffered rasterizer with flat two-sided Lambertian shading,
// one fixed directional light, white background. Bit-deterministic; an empty
// scene renders all background.
Image rasterize(const std::vector<TriMesh>& meshes, const std::vector<Rgb>& colors,
                const Camera& camera);

inline constexpr double kPsnrCap = 99.0;

// 10 log10(255^2 / MSE) over all channels, capped at 99 dB (the sentinel for
// identical images). Throws std::invalid_argument on a dimension mismatch.
double psnr(const Image& a, const Image& b);

void write_ppm(std::ostream& out, const Image& image);
void write_ppm_file(const std::string& path, const Image& image);
Image read_ppm_file(const std::string& path);

struct StateMetrics {
    double fraction = 0.0;  // j/count along the articulation sweep
    double cd = 0.0;
    double psnr_db = 0.0;
};

struct EvalReport {
    double rs_cd = 0.0;
    double as_cd = 0.0;
    double rs_psnr = 0.0;
    double as_psnr = 0.0;
    std::vector<StateMetrics> per_state;  // as_* are their arithmetic means
    int states = 0;
    int points = 0;
    uint64_t seed = 0;
    Camera camera;
};

inline constexpr int kDefaultPointBudget = 10000;

// Resting-state and articulated-state protocol: RS at q = lower, AS averaged
// over uniform fractions j/states of each asset's own joint ranges, same
// camera and point budget on both sides.
EvalReport eval_protocol(const ArticulatedAsset& gen, const ArticulatedAsset& gt,
                         int states = kDefaultStateCount, int points = kDefaultPointBudget,
                         uint64_t seed = 0, const Camera& camera = {});

// Stable JSON form; the OpenShape field is present but null (it needs a
// pretrained embedding model).
std::string eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const std::string& text);

}  // namespace artikit
