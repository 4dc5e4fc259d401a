#include <doctest.h>

#include <sstream>

#include "artikit/joint_to_voxel.hpp"
#include "artikit/voxel_io.hpp"
#include "fixtures.hpp"

using namespace artikit;

namespace {

KinematicTree hinge_tree() {
    KinematicTree tree;
    tree.links = {{0, "base", ""}, {1, "lid", ""}};
    tree.root = 0;
    tree.joints.push_back(
        {0, 1, JointType::Revolute, {{0.5, 0.5, 0.0}, {0.0, 0.0, 1.0}}, {0.0, 1.5707963}});
    return tree;
}

SparseVoxelGrid two_part_grid() {
    SparseVoxelGrid grid;
    grid.resolution = 8;
    grid.cells = {{0, 0, 0, 0}, {0, 0, 1, 0}, {1, 2, 3, 1}, {2, 0, 0, 1}, {2, 0, 1, 0}};
    std::sort(grid.cells.begin(), grid.cells.end(), [](const auto& a, const auto& b) {
        return std::tie(a.i, a.j, a.k) < std::tie(b.i, b.j, b.k);
    });
    return grid;
}

}  // namespace

TEST_CASE("embed: hinge broadcasts the joint code onto lid cells") {
    KinematicTree tree = hinge_tree();
    ArticulatedVoxelGrid avg = embed(tree, two_part_grid());
    CHECK(avg.K == 2);
    CHECK(avg.grid.channel_count == 10);
    CHECK(avg.grid.cells == two_part_grid().cells);  // geometry untouched

    ArticulationVector code = encode_joint(tree.joints[0]);
    for (size_t n = 0; n < avg.grid.cell_count(); ++n) {
        auto ch = avg.grid.channels(n);
        if (avg.grid.cells[n].part_id == 1) {
            for (int c = 0; c < 9; ++c) CHECK(ch[size_t(c)] == code[c]);
            CHECK(ch[9] == 0.0);  // parent part
        } else {
            for (int c = 0; c < 9; ++c) CHECK(ch[size_t(c)] == 0.0);
            CHECK(ch[9] == -1.0);  // root sentinel
        }
    }
    CHECK(avg.adjacency.at(0, 1) == 1);
}

TEST_CASE("embed: single-link asset is all root-coded") {
    KinematicTree tree;
    tree.links = {{0, "only", ""}};
    tree.root = 0;
    SparseVoxelGrid grid;
    grid.resolution = 4;
    grid.cells = {{0, 0, 0, 0}, {1, 1, 1, 0}};
    ArticulatedVoxelGrid avg = embed(tree, grid);
    CHECK(avg.K == 1);
    CHECK(avg.adjacency.K == 1);
    CHECK(avg.adjacency.at(0, 0) == 0);
    for (size_t n = 0; n < avg.grid.cell_count(); ++n) CHECK(avg.grid.channels(n)[9] == -1.0);
}

TEST_CASE("embed: part/link coverage mismatches are errors") {
    KinematicTree tree = hinge_tree();

    SparseVoxelGrid missing_part;  // no cells for link 1
    missing_part.resolution = 8;
    missing_part.cells = {{0, 0, 0, 0}};
    CHECK_THROWS_WITH_AS(embed(tree, missing_part), doctest::Contains("has no grid cells"),
                         std::invalid_argument);

    SparseVoxelGrid extra_part = two_part_grid();
    extra_part.cells.push_back({7, 7, 7, 5});
    CHECK_THROWS_WITH_AS(embed(tree, extra_part), doctest::Contains("is not a tree link"),
                         std::invalid_argument);
}

TEST_CASE("recover inverts embed on the hinge") {
    KinematicTree tree = hinge_tree();
    KinematicTree back = recover(embed(tree, two_part_grid()));
    CHECK(fixtures::trees_equal(tree, back, 0.0));
}

TEST_CASE("recover inverts embed on 100 random fixtures") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        KinematicTree tree = fixtures::random_tree(rng, 12);
        SparseVoxelGrid grid =
            fixtures::grid_for_parts(rng, tree.part_count(), 16, fixtures::uniform_int(rng, 1, 9));
        ArticulatedVoxelGrid avg = embed(tree, grid);

        // channel uniformity within each part is exact
        std::map<int, std::vector<double>> first_row;
        for (size_t n = 0; n < avg.grid.cell_count(); ++n) {
            auto ch = avg.grid.channels(n);
            auto [it, fresh] = first_row.try_emplace(
                avg.grid.cells[n].part_id, std::vector<double>(ch.begin(), ch.end()));
            if (!fresh)
                CHECK(std::equal(ch.begin(), ch.end(), it->second.begin(), it->second.end()));
        }

        KinematicTree back = recover(avg);
        CHECK(back.root == tree.root);
        CHECK(fixtures::trees_equal(tree, back, 0.0));
    }
}

TEST_CASE("aggregate: majority type then mean of agreeing cells") {
    KinematicTree tree = hinge_tree();
    ArticulatedVoxelGrid avg = embed(tree, two_part_grid());

    // Lid has cells (1,2,3) and (2,0,0); make a third lid cell by relabeling
    // a base cell, then perturb votes: types {1, 1, 2}.
    for (size_t n = 0; n < avg.grid.cell_count(); ++n)
        if (avg.grid.cells[n].i == 2 && avg.grid.cells[n].j == 0 && avg.grid.cells[n].k == 1) {
            avg.grid.cells[n].part_id = 1;
            auto src = avg.grid.channels(n);
            auto proto = encode_joint(tree.joints[0]);
            std::copy(proto.c.begin(), proto.c.end(), src.begin());
            src[9] = 0.0;
        }

    std::vector<size_t> lid_cells;
    for (size_t n = 0; n < avg.grid.cell_count(); ++n)
        if (avg.grid.cells[n].part_id == 1) lid_cells.push_back(n);
    REQUIRE(lid_cells.size() == 3);

    avg.grid.channels(lid_cells[0])[8] = 1.0;
    avg.grid.channels(lid_cells[1])[8] = 2.0;
    avg.grid.channels(lid_cells[2])[0] = 2.0;  // dissenting prismatic vote
    avg.grid.channels(lid_cells[2])[8] = 100.0;

    auto agg = aggregate_part_channels(avg);
    CHECK(agg.at(1).code[0] == 1.0);              // revolute wins 2:1
    CHECK(agg.at(1).code[8] == 1.5);              // mean over the two agreeing cells
    CHECK(agg.at(1).parent_id == 0);
    CHECK(agg.at(0).parent_id == -1);
}

TEST_CASE("aggregate: invariant under reassignment of rows to cells") {
    std::mt19937_64 rng(77);
    KinematicTree tree = fixtures::random_tree(rng, 5, 3);
    SparseVoxelGrid grid = fixtures::grid_for_parts(rng, tree.part_count(), 16, 4);
    ArticulatedVoxelGrid a = embed(tree, grid);

    // noise on every channel
    for (size_t n = 0; n < a.grid.channel_data.size(); ++n)
        a.grid.channel_data[n] += fixtures::uniform(rng, -0.05, 0.05);

    // rotate channel rows among the cells of each part
    ArticulatedVoxelGrid b = a;
    std::map<int, std::vector<size_t>> cells_of_part;
    for (size_t n = 0; n < b.grid.cell_count(); ++n)
        cells_of_part[b.grid.cells[n].part_id].push_back(n);
    for (const auto& [part, idx] : cells_of_part) {
        for (size_t n = 0; n < idx.size(); ++n) {
            auto src = a.grid.channels(idx[(n + 1) % idx.size()]);
            std::copy(src.begin(), src.end(), b.grid.channels(idx[n]).begin());
        }
    }

    auto agg_a = aggregate_part_channels(a);
    auto agg_b = aggregate_part_channels(b);
    REQUIRE(agg_a.size() == agg_b.size());
    for (const auto& [part, pa] : agg_a) {
        const auto& pb = agg_b.at(part);
        CHECK(pa.parent_id == pb.parent_id);
        for (int c = 0; c < 9; ++c) CHECK(pa.code[c] == pb.code[c]);
    }
}

TEST_CASE("recover: corrupted topology is rejected") {
    std::mt19937_64 rng(88);
    KinematicTree tree = fixtures::random_tree(rng, 4, 3);
    SparseVoxelGrid grid = fixtures::grid_for_parts(rng, tree.part_count(), 16, 3);

    SUBCASE("parent cycle") {
        ArticulatedVoxelGrid avg = embed(tree, grid);
        for (size_t n = 0; n < avg.grid.cell_count(); ++n) {
            int part = avg.grid.cells[n].part_id;
            if (part == 1) avg.grid.channels(n)[9] = 2.0;
            if (part == 2) avg.grid.channels(n)[9] = 1.0;
        }
        // keep the sidecar in sync so the cycle itself is what fails
        avg.adjacency = AdjacencyTensor(avg.K);
        avg.adjacency.at(2, 1) = 1;
        avg.adjacency.at(1, 2) = 1;
        for (const Joint& j : tree.joints)
            if (j.child != 1 && j.child != 2) avg.adjacency.at(j.parent, j.child) = 1;
        CHECK_THROWS_WITH_AS(recover(avg), doctest::Contains("cycle"), std::runtime_error);
    }

    SUBCASE("no root") {
        ArticulatedVoxelGrid avg = embed(tree, grid);
        for (size_t n = 0; n < avg.grid.cell_count(); ++n)
            if (avg.grid.cells[n].part_id == tree.root) avg.grid.channels(n)[9] = 1.0;
        CHECK_THROWS_WITH_AS(recover(avg), doctest::Contains("root"), std::runtime_error);
    }

    SUBCASE("sidecar mismatch names the part") {
        ArticulatedVoxelGrid avg = embed(tree, grid);
        const Joint& j = tree.joints.back();  // drop one edge from the sidecar only
        avg.adjacency.at(j.parent, j.child) = 0;
        std::string part = std::to_string(j.child);
        CHECK_THROWS_WITH_AS(recover(avg), doctest::Contains(part.c_str()), std::runtime_error);
    }
}

TEST_CASE("articulated voxel file round trips byte-exactly") {
    std::mt19937_64 rng(99);
    KinematicTree tree = fixtures::random_tree(rng, 6, 2);
    SparseVoxelGrid grid = fixtures::grid_for_parts(rng, tree.part_count(), 32, 5);
    ArticulatedVoxelGrid avg = embed(tree, grid);

    std::ostringstream out;
    write_voxel_stream(out, avg.grid, avg.K, &avg.adjacency);
    std::istringstream in(out.str());
    VoxelFileContents back = read_voxel_stream(in);
    REQUIRE(back.adjacency.has_value());
    CHECK(*back.adjacency == avg.adjacency);
    CHECK(back.grid.cells == avg.grid.cells);

    std::ostringstream again;
    write_voxel_stream(again, back.grid, back.K, &*back.adjacency);
    CHECK(again.str() == out.str());

    ArticulatedVoxelGrid reread;
    reread.grid = back.grid;
    reread.adjacency = *back.adjacency;
    reread.K = back.K;
    CHECK(fixtures::trees_equal(recover(reread), tree, 1e-9));
}
