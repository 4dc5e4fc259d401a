#include <doctest.h>

#include <cmath>
#include <sstream>

#include "artikit/voxel_grid.hpp"
#include "artikit/voxel_io.hpp"
#include "fixtures.hpp"

using namespace artikit;

TEST_CASE("normalize: [-1,1] cube") {
    auto [meshes, xf] = normalize_asset({fixtures::box_mesh({-1, -1, -1}, {1, 1, 1})});
    CHECK(xf.scale == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(xf.translation.x == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(xf.translation.y == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(xf.translation.z == doctest::Approx(0.5).epsilon(1e-15));
    Aabb box = meshes[0].bounds();
    CHECK(box.lo.x == doctest::Approx(0.0));
    CHECK(box.hi.x == doctest::Approx(1.0));
    CHECK(box.lo.y == 0.0);  // base exactly aligned
}

TEST_CASE("normalize: already-normalized asset gets the identity") {
    auto [meshes, xf] = normalize_asset({fixtures::box_mesh({0, 0, 0}, {1, 1, 1})});
    (void)meshes;
    CHECK(xf.scale == 1.0);
    CHECK(xf.translation.x == 0.0);
    CHECK(xf.translation.y == 0.0);
    CHECK(xf.translation.z == 0.0);
}

TEST_CASE("normalize: transform self-consistency on random meshes") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        TriMesh mesh = fixtures::icosphere({fixtures::uniform(rng, -3, 3),
                                            fixtures::uniform(rng, -3, 3),
                                            fixtures::uniform(rng, -3, 3)},
                                           fixtures::uniform(rng, 0.2, 2.0), 1);
        auto [normed, xf] = normalize_asset({mesh});
        for (size_t v = 0; v < mesh.vertices.size(); ++v) {
            Vec3 expected = xf.apply(mesh.vertices[v]);
            CHECK(norm(expected - normed[0].vertices[v]) <= 1e-9);
        }
        Aabb box = normed[0].bounds();
        Vec3 ext = box.extents();
        CHECK(std::max({ext.x, ext.y, ext.z}) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(box.lo.y == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(box.lo.x >= -1e-9);
        CHECK(box.hi.x <= 1.0 + 1e-9);
    }
}

TEST_CASE("normalize: empty geometry refused") {
    CHECK_THROWS_AS(normalize_asset({}), std::invalid_argument);
    CHECK_THROWS_AS(normalize_asset({TriMesh{}}), std::invalid_argument);
}

TEST_CASE("voxelize: full-domain cube activates every cell") {
    SparseVoxelGrid grid = voxelize({fixtures::box_mesh({0, 0, 0}, {1, 1, 1})}, {0}, 8);
    CHECK(grid.cell_count() == 512);
    CHECK(grid.cells_sorted_unique());
    CHECK(grid.channel_count == 0);
}

TEST_CASE("voxelize: sphere active count matches the analytic volume") {
    TriMesh sphere = fixtures::icosphere({0.5, 0.5, 0.5}, 0.4, 4);
    VoxelizeReport report;
    SparseVoxelGrid grid = voxelize({sphere}, {0}, 64, {}, &report);
    REQUIRE(report.meshes.size() == 1);
    CHECK(report.meshes[0].watertight);
    CHECK_FALSE(report.meshes[0].fallback_used);

    double expected = 4.0 / 3.0 * M_PI * 0.4 * 0.4 * 0.4 * 64.0 * 64.0 * 64.0;
    CHECK(double(grid.cell_count()) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("voxelize: volume estimate error shrinks with resolution") {
    TriMesh sphere = fixtures::icosphere({0.5, 0.5, 0.5}, 0.4, 4);
    const double exact = 4.0 / 3.0 * M_PI * 0.4 * 0.4 * 0.4;
    double prev_err = 1.0;
    for (int r : {32, 64, 128}) {
        SparseVoxelGrid grid = voxelize({sphere}, {0}, r);
        double estimate = double(grid.cell_count()) / (double(r) * r * r);
        double err = std::abs(estimate - exact);
        CHECK(err < prev_err);
        prev_err = err;
    }
}

TEST_CASE("voxelize: two disjoint boxes partition by the point-in-box oracle") {
    Vec3 lo0{0.1, 0.1, 0.1}, hi0{0.4, 0.6, 0.5};
    Vec3 lo1{0.6, 0.2, 0.3}, hi1{0.9, 0.8, 0.7};
    SparseVoxelGrid grid = voxelize({fixtures::box_mesh(lo0, hi0), fixtures::box_mesh(lo1, hi1)},
                                    {0, 1}, 32);
    auto inside = [](const Vec3& p, const Vec3& lo, const Vec3& hi) {
        return p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y && p.z > lo.z && p.z < hi.z;
    };
    size_t seen0 = 0, seen1 = 0;
    for (const auto& c : grid.cells) {
        Vec3 center{(c.i + 0.5) / 32.0, (c.j + 0.5) / 32.0, (c.k + 0.5) / 32.0};
        if (c.part_id == 0) {
            CHECK(inside(center, lo0, hi0));
            ++seen0;
        } else {
            CHECK(inside(center, lo1, hi1));
            ++seen1;
        }
    }
    CHECK(seen0 > 0);
    CHECK(seen1 > 0);
}

TEST_CASE("voxelize: identical overlapping boxes tie-break to the lowest part id") {
    TriMesh box = fixtures::box_mesh({0.3, 0.3, 0.3}, {0.7, 0.7, 0.7});
    SparseVoxelGrid grid = voxelize({box, box}, {0, 1}, 16);
    CHECK(grid.cell_count() > 0);
    for (const auto& c : grid.cells) CHECK(c.part_id == 0);
}

TEST_CASE("voxelize: deterministic and independent of thread count") {
    std::mt19937_64 rng(9);
    ArticulatedAsset asset = fixtures::random_asset(rng, 6, 3);
    std::vector<int> ids;
    for (int p = 0; p < asset.tree.part_count(); ++p) ids.push_back(p);

    VoxelizeOptions one;
    one.threads = 1;
    VoxelizeOptions many;
    many.threads = 4;
    SparseVoxelGrid a = voxelize(asset.part_meshes, ids, 32, one);
    SparseVoxelGrid b = voxelize(asset.part_meshes, ids, 32, many);
    SparseVoxelGrid c = voxelize(asset.part_meshes, ids, 32, many);
    CHECK(a.cells == b.cells);
    CHECK(b.cells == c.cells);
}

TEST_CASE("voxelize: open surface falls back to flood fill and reports it") {
    // Single quad, not watertight.
    TriMesh plate;
    plate.vertices = {{0.2, 0.5, 0.2}, {0.8, 0.5, 0.2}, {0.8, 0.5, 0.8}, {0.2, 0.5, 0.8}};
    plate.faces = {{0, 1, 2}, {0, 2, 3}};
    VoxelizeReport report;
    SparseVoxelGrid grid = voxelize({plate}, {0}, 16, {}, &report);
    REQUIRE(report.meshes.size() == 1);
    CHECK_FALSE(report.meshes[0].watertight);
    CHECK(report.meshes[0].fallback_used);
    CHECK(grid.cell_count() > 0);

    // Surface guarantee (fallback path activates the band): every triangle
    // touches at least one active cell.
    for (const auto& f : plate.faces) {
        Vec3 centroid = (plate.vertices[size_t(f[0])] + plate.vertices[size_t(f[1])] +
                         plate.vertices[size_t(f[2])]) /
                        3.0;
        bool found = false;
        for (const auto& c : grid.cells) {
            Vec3 center{(c.i + 0.5) / 16.0, (c.j + 0.5) / 16.0, (c.k + 0.5) / 16.0};
            if (norm(center - centroid) <= std::sqrt(3.0) / 16.0) found = true;
        }
        CHECK(found);
    }
}

TEST_CASE("voxelize: surface band option activates shell cells") {
    TriMesh box = fixtures::box_mesh({0.25, 0.25, 0.25}, {0.75, 0.75, 0.75});
    SparseVoxelGrid solid = voxelize({box}, {0}, 16);
    VoxelizeOptions banded;
    banded.surface_band = true;
    SparseVoxelGrid with_band = voxelize({box}, {0}, 16, banded);
    CHECK(with_band.cell_count() > solid.cell_count());
}

TEST_CASE("voxelize: argument errors") {
    TriMesh box = fixtures::box_mesh({0, 0, 0}, {1, 1, 1});
    CHECK_THROWS_AS(voxelize({box}, {0, 1}, 8), std::invalid_argument);
    CHECK_THROWS_AS(voxelize({box}, {-1}, 8), std::invalid_argument);
    CHECK_THROWS_AS(voxelize({box}, {0}, 0), std::invalid_argument);
}

TEST_CASE("voxel file: write/read round trip preserves bytes") {
    std::mt19937_64 rng(17);
    SparseVoxelGrid grid = fixtures::grid_for_parts(rng, 3, 16, 20);
    grid.channel_count = 2;
    grid.channel_data.resize(grid.cell_count() * 2);
    for (double& v : grid.channel_data) v = fixtures::quantize9(fixtures::uniform(rng, -2, 2));

    std::ostringstream out;
    write_voxel_stream(out, grid, 3);
    std::istringstream in(out.str());
    VoxelFileContents back = read_voxel_stream(in);
    CHECK(back.K == 3);
    CHECK(back.grid.cells == grid.cells);
    CHECK(back.grid.channel_data == grid.channel_data);
    CHECK_FALSE(back.adjacency.has_value());

    std::ostringstream again;
    write_voxel_stream(again, back.grid, back.K);
    CHECK(again.str() == out.str());
}

TEST_CASE("voxel file: malformed input reports the offending line") {
    std::istringstream in("{\"C\":0,\"K\":1,\"count\":2,\"resolution\":8}\n0 0 0 0\n9 0 0 0\n");
    CHECK_THROWS_WITH_AS(read_voxel_stream(in), doctest::Contains("out of range"),
                         std::runtime_error);

    std::istringstream unsorted("{\"C\":0,\"K\":1,\"count\":2,\"resolution\":8}\n1 0 0 0\n0 0 0 0\n");
    CHECK_THROWS_WITH_AS(read_voxel_stream(unsorted), doctest::Contains("lexicographic"),
                         std::runtime_error);
}
