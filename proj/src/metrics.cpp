#include "artikit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

namespace artikit {

namespace {

double uniform01(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

// ---------------------------------------------------------------------------
// Surface sampling
// ---------------------------------------------------------------------------

PointCloud sample_surface_points(const std::vector<TriMesh>& meshes, int n, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_surface_points: n must be >= 1");

    struct Tri {
        Vec3 a, b, c;
        Vec3 centroid;
        double area;
    };
    std::vector<Tri> tris;
    for (const TriMesh& mesh : meshes) {
        for (const auto& f : mesh.faces) {
            Tri t{mesh.vertices[size_t(f[0])], mesh.vertices[size_t(f[1])],
                  mesh.vertices[size_t(f[2])], {}, 0.0};
            t.area = 0.5 * norm(cross(t.b - t.a, t.c - t.a));
            if (t.area <= 0.0) continue;
            t.centroid = (t.a + t.b + t.c) / 3.0;
            tris.push_back(t);
        }
    }
    if (tris.empty())
        throw std::invalid_argument("sample_surface_points: zero total surface area");

    // Canonical order so the cloud does not depend on mesh/part ordering.
    std::sort(tris.begin(), tris.end(), [](const Tri& x, const Tri& y) {
        auto kx = std::tie(x.centroid.x, x.centroid.y, x.centroid.z, x.area, x.a.x, x.a.y, x.a.z);
        auto ky = std::tie(y.centroid.x, y.centroid.y, y.centroid.z, y.area, y.a.x, y.a.y, y.a.z);
        return kx < ky;
    });

    std::vector<double> cumulative;
    cumulative.reserve(tris.size());
    double total = 0.0;
    for (const Tri& t : tris) {
        total += t.area;
        cumulative.push_back(total);
    }
    if (total <= 0.0)
        throw std::invalid_argument("sample_surface_points: zero total surface area");

    std::mt19937_64 rng(seed);
    PointCloud cloud;
    cloud.points.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        double pick = uniform01(rng) * total;
        size_t t = size_t(std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
                          cumulative.begin());
        if (t >= tris.size()) t = tris.size() - 1;
        double r1 = std::sqrt(uniform01(rng));
        double r2 = uniform01(rng);
        double u = 1.0 - r1, v = r1 * (1.0 - r2), w = r1 * r2;
        const Tri& tri = tris[t];
        cloud.points.push_back(tri.a * u + tri.b * v + tri.c * w);
    }
    return cloud;
}

PointCloud sample_surface_points(const TriMesh& mesh, int n, uint64_t seed) {
    if (mesh.empty()) throw std::invalid_argument("sample_surface_points: empty mesh");
    return sample_surface_points(std::vector<TriMesh>{mesh}, n, seed);
}

// ---------------------------------------------------------------------------
// Chamfer distance
// ---------------------------------------------------------------------------

namespace {

// Small static KD-tree over 3D points; exact nearest neighbor.
class KdTree3 {
public:
    explicit KdTree3(const std::vector<Vec3>& points) : pts_(points) {
        order_.resize(pts_.size());
        for (size_t i = 0; i < order_.size(); ++i) order_[i] = i;
        nodes_.reserve(pts_.size() / kLeafSize * 2 + 2);
        root_ = build(0, pts_.size());
    }

    double nearest_dist2(const Vec3& q) const {
        double best = std::numeric_limits<double>::infinity();
        search(root_, q, best);
        return best;
    }

private:
    static constexpr size_t kLeafSize = 8;

    struct Node {
        Aabb box;
        size_t begin = 0, end = 0;  // leaf range in order_
        int axis = -1;
        double split = 0.0;
        int left = -1, right = -1;
    };

    int build(size_t begin, size_t end) {
        Node node;
        node.begin = begin;
        node.end = end;
        for (size_t i = begin; i < end; ++i) node.box.expand(pts_[order_[i]]);
        int id = int(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= kLeafSize) return id;

        Vec3 ext = node.box.extents();
        int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
        size_t mid = (begin + end) / 2;
        std::nth_element(order_.begin() + std::ptrdiff_t(begin),
                         order_.begin() + std::ptrdiff_t(mid),
                         order_.begin() + std::ptrdiff_t(end), [&](size_t a, size_t b) {
                             return pts_[a][axis] < pts_[b][axis] || (pts_[a][axis] == pts_[b][axis] && a < b);
                         });
        nodes_[size_t(id)].axis = axis;
        nodes_[size_t(id)].split = pts_[order_[mid]][axis];
        int l = build(begin, mid);
        int r = build(mid, end);
        nodes_[size_t(id)].left = l;
        nodes_[size_t(id)].right = r;
        return id;
    }

    double box_dist2(const Aabb& box, const Vec3& q) const {
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            double d = std::max({box.lo[a] - q[a], 0.0, q[a] - box.hi[a]});
            d2 += d * d;
        }
        return d2;
    }

    void search(int id, const Vec3& q, double& best) const {
        const Node& node = nodes_[size_t(id)];
        if (box_dist2(node.box, q) >= best) return;
        if (node.axis < 0) {
            for (size_t i = node.begin; i < node.end; ++i)
                best = std::min(best, norm2(pts_[order_[i]] - q));
            return;
        }
        int near = q[node.axis] < node.split ? node.left : node.right;
        int far = near == node.left ? node.right : node.left;
        search(near, q, best);
        search(far, q, best);
    }

    const std::vector<Vec3>& pts_;
    std::vector<size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace

double chamfer(const PointCloud& x, const PointCloud& y) {
    if (x.points.empty() || y.points.empty())
        throw std::invalid_argument("chamfer: empty point cloud");

    KdTree3 ty(y.points);
    double sx = 0.0;
    for (const Vec3& p : x.points) sx += ty.nearest_dist2(p);

    KdTree3 tx(x.points);
    double sy = 0.0;
    for (const Vec3& p : y.points) sy += tx.nearest_dist2(p);

    return sx / double(x.points.size()) + sy / double(y.points.size());
}

double chamfer_bruteforce(const PointCloud& x, const PointCloud& y) {
    if (x.points.empty() || y.points.empty())
        throw std::invalid_argument("chamfer: empty point cloud");
    auto one_sided = [](const PointCloud& a, const PointCloud& b) {
        double s = 0.0;
        for (const Vec3& p : a.points) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& q : b.points) best = std::min(best, norm2(p - q));
            s += best;
        }
        return s / double(a.points.size());
    };
    return one_sided(x, y) + one_sided(y, x);
}

// ---------------------------------------------------------------------------
// Rasterizer
// ---------------------------------------------------------------------------

Image Image::filled(int w, int h, Rgb color) {
    Image img;
    img.width = w;
    img.height = h;
    img.rgb.resize(size_t(w) * size_t(h) * 3);
    for (size_t p = 0; p < img.rgb.size(); p += 3) {
        img.rgb[p] = color.r;
        img.rgb[p + 1] = color.g;
        img.rgb[p + 2] = color.b;
    }
    return img;
}

Rgb Image::at(int x, int y) const {
    size_t p = (size_t(y) * size_t(width) + size_t(x)) * 3;
    return {rgb[p], rgb[p + 1], rgb[p + 2]};
}

void Image::set(int x, int y, Rgb color) {
    size_t p = (size_t(y) * size_t(width) + size_t(x)) * 3;
    rgb[p] = color.r;
    rgb[p + 1] = color.g;
    rgb[p + 2] = color.b;
}

Rgb part_color(int part_id) {
    // Golden-ratio hue walk; bright enough to stand off the white background.
    double hue = std::fmod(0.1 + 0.618033988749895 * double(part_id), 1.0);
    double s = 0.65, v = 0.85;
    double h6 = hue * 6.0;
    int sector = int(h6) % 6;
    double f = h6 - std::floor(h6);
    double p = v * (1.0 - s), q = v * (1.0 - s * f), t = v * (1.0 - s * (1.0 - f));
    double r = 0, g = 0, b = 0;
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
    auto to8 = [](double c) { return uint8_t(std::lround(c * 255.0)); };
    return {to8(r), to8(g), to8(b)};
}

Image rasterize(const std::vector<TriMesh>& meshes, const std::vector<Rgb>& colors,
                const Camera& camera) {
    if (colors.size() != meshes.size())
        throw std::invalid_argument("rasterize: one color per mesh required");
    if (camera.width < 1 || camera.height < 1 || camera.ortho_scale <= 0.0)
        throw std::invalid_argument("rasterize: bad camera");

    Image img = Image::filled(camera.width, camera.height, {255, 255, 255});
    std::vector<double> zbuf(size_t(camera.width) * size_t(camera.height),
                             std::numeric_limits<double>::infinity());

    const double deg = M_PI / 180.0;
    double az = camera.azimuth_deg * deg, el = camera.elevation_deg * deg;
    Vec3 eye_dir{std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az)};
    Vec3 forward = -eye_dir;
    Vec3 right = cross(forward, Vec3{0, 1, 0});
    if (norm(right) < 1e-9) right = Vec3{1, 0, 0};  // looking straight up/down
    right = normalized(right);
    Vec3 up = cross(right, forward);
    const Vec3 center{0.5, 0.5, 0.5};
    const Vec3 light = normalized(Vec3{-0.5, -1.0, -0.6});

    auto project = [&](const Vec3& p, double& px, double& py, double& depth) {
        Vec3 d = p - center;
        px = (dot(d, right) / camera.ortho_scale + 0.5) * camera.width;
        py = (0.5 - dot(d, up) / camera.ortho_scale) * camera.height;
        depth = dot(d, forward);
    };

    for (size_t m = 0; m < meshes.size(); ++m) {
        const TriMesh& mesh = meshes[m];
        const Rgb base = colors[m];
        for (const auto& f : mesh.faces) {
            const Vec3& a = mesh.vertices[size_t(f[0])];
            const Vec3& b = mesh.vertices[size_t(f[1])];
            const Vec3& c = mesh.vertices[size_t(f[2])];

            Vec3 n = cross(b - a, c - a);
            double nl = norm(n);
            if (nl <= 0.0) continue;
            n = n / nl;
            double intensity = 0.35 + 0.65 * std::abs(dot(n, light));
            auto shade = [&](uint8_t ch) {
                return uint8_t(std::clamp(std::lround(double(ch) * intensity), 0L, 255L));
            };
            Rgb color{shade(base.r), shade(base.g), shade(base.b)};

            double x0, y0, z0, x1, y1, z1, x2, y2, z2;
            project(a, x0, y0, z0);
            project(b, x1, y1, z1);
            project(c, x2, y2, z2);

            double area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
            if (area == 0.0) continue;

            int minx = std::max(0, int(std::floor(std::min({x0, x1, x2}))));
            int maxx = std::min(camera.width - 1, int(std::ceil(std::max({x0, x1, x2}))));
            int miny = std::max(0, int(std::floor(std::min({y0, y1, y2}))));
            int maxy = std::min(camera.height - 1, int(std::ceil(std::max({y0, y1, y2}))));

            for (int py = miny; py <= maxy; ++py) {
                double sy = py + 0.5;
                for (int px = minx; px <= maxx; ++px) {
                    double sx = px + 0.5;
                    double w0 = (x1 - sx) * (y2 - sy) - (x2 - sx) * (y1 - sy);
                    double w1 = (x2 - sx) * (y0 - sy) - (x0 - sx) * (y2 - sy);
                    double w2 = (x0 - sx) * (y1 - sy) - (x1 - sx) * (y0 - sy);
                    bool inside = area > 0.0 ? (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0)
                                             : (w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0);
                    if (!inside) continue;
                    double depth = (w0 * z0 + w1 * z1 + w2 * z2) / (w0 + w1 + w2);
                    size_t pix = size_t(py) * size_t(camera.width) + size_t(px);
                    if (depth < zbuf[pix]) {
                        zbuf[pix] = depth;
                        img.set(px, py, color);
                    }
                }
            }
        }
    }
    return img;
}

double psnr(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.rgb.size() != b.rgb.size())
        throw std::invalid_argument("psnr: image dimensions differ");
    if (a.rgb.empty()) throw std::invalid_argument("psnr: empty image");

    double se = 0.0;
    for (size_t n = 0; n < a.rgb.size(); ++n) {
        double d = double(a.rgb[n]) - double(b.rgb[n]);
        se += d * d;
    }
    double mse = se / double(a.rgb.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

void write_ppm(std::ostream& out, const Image& image) {
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.rgb.data()),
              std::streamsize(image.rgb.size()));
}

void write_ppm_file(const std::string& path, const Image& image) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_ppm(f, image);
    if (!f) throw std::runtime_error("write failed: " + path);
}

Image read_ppm_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (magic != "P6" || w < 1 || h < 1 || maxval != 255)
        throw std::runtime_error(path + ": not a P6/255 PPM");
    f.get();  // single whitespace after header
    Image img;
    img.width = w;
    img.height = h;
    img.rgb.resize(size_t(w) * size_t(h) * 3);
    f.read(reinterpret_cast<char*>(img.rgb.data()), std::streamsize(img.rgb.size()));
    if (!f) throw std::runtime_error(path + ": truncated pixel data");
    return img;
}

// ---------------------------------------------------------------------------
// Evaluation protocol
// ---------------------------------------------------------------------------

namespace {

StateMetrics measure_state(const std::vector<TriMesh>& gen_posed,
                           const std::vector<TriMesh>& gt_posed, int points, uint64_t seed,
                           const Camera& camera) {
    StateMetrics m;
    PointCloud cgen = sample_surface_points(gen_posed, points, seed);
    PointCloud cgt = sample_surface_points(gt_posed, points, seed);
    m.cd = chamfer(cgen, cgt);

    std::vector<Rgb> gen_colors, gt_colors;
    for (size_t p = 0; p < gen_posed.size(); ++p) gen_colors.push_back(part_color(int(p)));
    for (size_t p = 0; p < gt_posed.size(); ++p) gt_colors.push_back(part_color(int(p)));
    m.psnr_db = psnr(rasterize(gen_posed, gen_colors, camera),
                     rasterize(gt_posed, gt_colors, camera));
    return m;
}

}  // namespace

EvalReport eval_protocol(const ArticulatedAsset& gen, const ArticulatedAsset& gt, int states,
                         int points, uint64_t seed, const Camera& camera) {
    if (states < 1) throw std::invalid_argument("eval_protocol: states must be >= 1");
    if (points < 1) throw std::invalid_argument("eval_protocol: points must be >= 1");
    check_asset(gen);
    check_asset(gt);

    EvalReport report;
    report.states = states;
    report.points = points;
    report.seed = seed;
    report.camera = camera;

    {
        StateMetrics rs = measure_state(pose_asset(gen, resting_state(gen.tree)),
                                        pose_asset(gt, resting_state(gt.tree)), points, seed,
                                        camera);
        report.rs_cd = rs.cd;
        report.rs_psnr = rs.psnr_db;
    }

    std::vector<ArticulationState> gen_states =
        sample_states(gen.tree, states, StateSampleMode::UniformGrid, seed);
    std::vector<ArticulationState> gt_states =
        sample_states(gt.tree, states, StateSampleMode::UniformGrid, seed);

    double cd_sum = 0.0, psnr_sum = 0.0;
    for (int n = 0; n < states; ++n) {
        StateMetrics m = measure_state(pose_asset(gen, gen_states[size_t(n)]),
                                       pose_asset(gt, gt_states[size_t(n)]), points, seed, camera);
        m.fraction = double(n + 1) / double(states);
        report.per_state.push_back(m);
        cd_sum += m.cd;
        psnr_sum += m.psnr_db;
    }
    report.as_cd = cd_sum / double(states);
    report.as_psnr = psnr_sum / double(states);
    return report;
}

std::string eval_report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["metric"] = "chamfer: symmetric mean squared nearest-neighbor distance; psnr: dB vs fixed camera render";
    j["rs_cd"] = report.rs_cd;
    j["as_cd"] = report.as_cd;
    j["rs_psnr"] = report.rs_psnr;
    j["as_psnr"] = report.as_psnr;
    j["rs_openshape"] = nullptr;  // needs a pretrained shape embedding
    j["as_openshape"] = nullptr;
    j["states"] = report.states;
    j["points"] = report.points;
    j["seed"] = report.seed;
    j["camera"] = {{"azimuth_deg", report.camera.azimuth_deg},
                   {"elevation_deg", report.camera.elevation_deg},
                   {"ortho_scale", report.camera.ortho_scale},
                   {"width", report.camera.width},
                   {"height", report.camera.height}};
    nlohmann::json per_state = nlohmann::json::array();
    for (const StateMetrics& m : report.per_state)
        per_state.push_back({{"fraction", m.fraction}, {"cd", m.cd}, {"psnr", m.psnr_db}});
    j["per_state"] = std::move(per_state);
    return j.dump(2) + "\n";
}

EvalReport eval_report_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    EvalReport r;
    r.rs_cd = j.at("rs_cd").get<double>();
    r.as_cd = j.at("as_cd").get<double>();
    r.rs_psnr = j.at("rs_psnr").get<double>();
    r.as_psnr = j.at("as_psnr").get<double>();
    r.states = j.at("states").get<int>();
    r.points = j.at("points").get<int>();
    r.seed = j.at("seed").get<uint64_t>();
    r.camera.azimuth_deg = j.at("camera").at("azimuth_deg").get<double>();
    r.camera.elevation_deg = j.at("camera").at("elevation_deg").get<double>();
    r.camera.ortho_scale = j.at("camera").at("ortho_scale").get<double>();
    r.camera.width = j.at("camera").at("width").get<int>();
    r.camera.height = j.at("camera").at("height").get<int>();
    for (const auto& m : j.at("per_state")) {
        StateMetrics s;
        s.fraction = m.at("fraction").get<double>();
        s.cd = m.at("cd").get<double>();
        s.psnr_db = m.at("psnr").get<double>();
        r.per_state.push_back(s);
    }
    return r;
}

}  // namespace artikit
