#include <doctest.h>

#include "artikit/articulation_codec.hpp"
#include "fixtures.hpp"

using namespace artikit;

TEST_CASE("encode: fixed layout") {
    static_assert(ArticulationVector::kDim == 9);

    Joint fixed{0, 1, JointType::Fixed, {}, {}};
    ArticulationVector zero = encode_joint(fixed);
    for (int c = 0; c < 9; ++c) CHECK(zero[c] == 0.0);

    Joint hinge{0, 1, JointType::Revolute,
                {{0.5, 0.5, 0.0}, {0.0, 0.0, 1.0}},
                {0.0, 1.5707963}};
    ArticulationVector v = encode_joint(hinge);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 0.5);
    CHECK(v[2] == 0.5);
    CHECK(v[3] == 0.0);
    CHECK(v[4] == 0.0);
    CHECK(v[5] == 0.0);
    CHECK(v[6] == 1.0);
    CHECK(v[7] == 0.0);
    CHECK(v[8] == 1.5707963);
}

TEST_CASE("encode: non-unit direction on a movable joint is refused") {
    Joint bad{0, 1, JointType::Prismatic, {{0, 0, 0}, {0, 0, 2}}, {0, 1}};
    CHECK_THROWS_AS(encode_joint(bad), std::invalid_argument);
}

TEST_CASE("decode inverts encode on 1000 random joints") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 1000; ++trial) {
        Joint j = fixtures::random_joint(rng, 0, 1);
        DecodedJoint d = decode_joint(encode_joint(j));
        CHECK(d.jtype == j.jtype);
        CHECK(std::abs(d.axis.pivot.x - j.axis.pivot.x) <= 1e-12);
        CHECK(std::abs(d.axis.pivot.y - j.axis.pivot.y) <= 1e-12);
        CHECK(std::abs(d.axis.pivot.z - j.axis.pivot.z) <= 1e-12);
        CHECK(std::abs(d.axis.direction.x - j.axis.direction.x) <= 1e-12);
        CHECK(std::abs(d.axis.direction.y - j.axis.direction.y) <= 1e-12);
        CHECK(std::abs(d.axis.direction.z - j.axis.direction.z) <= 1e-12);
        CHECK(std::abs(d.limits.lower - j.limits.lower) <= 1e-12);
        CHECK(std::abs(d.limits.upper - j.limits.upper) <= 1e-12);
    }
}

TEST_CASE("decode: snap rules for noisy codes") {
    ArticulationVector c;
    c[0] = 0.9;  // rounds to revolute
    c[4] = 0.0;
    c[5] = 0.0;
    c[6] = 2.0;  // renormalizes
    c[7] = 0.4;
    c[8] = 0.1;  // inverted limits swap
    DecodedJoint d = decode_joint(c);
    CHECK(d.jtype == JointType::Revolute);
    CHECK(d.axis.direction == Vec3{0, 0, 1});
    CHECK(d.limits.lower == 0.1);
    CHECK(d.limits.upper == 0.4);

    c[0] = -3.7;  // clamps to fixed
    CHECK(decode_joint(c).jtype == JointType::Fixed);
    c[0] = 7.2;  // clamps to prismatic
    CHECK(decode_joint(c).jtype == JointType::Prismatic);

    c[0] = 1.2;
    c[4] = c[5] = c[6] = 1e-8;  // norm below 1e-6
    CHECK_THROWS_AS(decode_joint(c), std::invalid_argument);

    c[4] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(decode_joint(c), std::invalid_argument);
}

TEST_CASE("adjacency: chain and single link") {
    KinematicTree chain;
    chain.links = {{0, "a", ""}, {1, "b", ""}, {2, "c", ""}};
    chain.root = 0;
    chain.joints.push_back({0, 1, JointType::Fixed, {}, {}});
    chain.joints.push_back({1, 2, JointType::Fixed, {}, {}});
    AdjacencyTensor adj = build_adjacency(chain);
    CHECK(adj.K == 3);
    CHECK(adj.at(0, 1) == 1);
    CHECK(adj.at(1, 2) == 1);
    int ones = 0;
    for (uint8_t v : adj.data) ones += v;
    CHECK(ones == 2);

    KinematicTree single;
    single.links = {{0, "only", ""}};
    single.root = 0;
    AdjacencyTensor one = build_adjacency(single);
    CHECK(one.K == 1);
    CHECK(one.at(0, 0) == 0);
}

TEST_CASE("adjacency: random trees have K-1 ones, are nilpotent, and rebuild") {
    std::mt19937_64 rng(321);
    for (int trial = 0; trial < 50; ++trial) {
        KinematicTree tree = fixtures::random_tree(rng);
        const int K = tree.part_count();
        AdjacencyTensor adj = build_adjacency(tree);

        int ones = 0;
        for (uint8_t v : adj.data) ones += v;
        CHECK(ones == K - 1);

        // column sums: 1 everywhere except the root
        for (int c = 0; c < K; ++c) {
            int sum = 0;
            for (int p = 0; p < K; ++p) sum += adj.at(p, c);
            CHECK(sum == (c == tree.root ? 0 : 1));
        }

        // nilpotency: J^K == 0 under boolean matrix power
        std::vector<uint8_t> power(adj.data.begin(), adj.data.end());
        for (int step = 1; step < K; ++step) {
            std::vector<uint8_t> next(size_t(K) * size_t(K), 0);
            for (int i = 0; i < K; ++i)
                for (int k = 0; k < K; ++k) {
                    if (!power[size_t(i) * size_t(K) + size_t(k)]) continue;
                    for (int j = 0; j < K; ++j)
                        next[size_t(i) * size_t(K) + size_t(j)] |= adj.at(k, j);
                }
            power = std::move(next);
        }
        for (uint8_t v : power) CHECK(v == 0);

        // edges reconstructed from J re-validate
        KinematicTree rebuilt;
        rebuilt.links = tree.links;
        rebuilt.root = tree.root;
        for (int p = 0; p < K; ++p)
            for (int c = 0; c < K; ++c)
                if (adj.at(p, c)) rebuilt.joints.push_back({p, c, JointType::Fixed, {}, {}});
        CHECK(validate_tree(rebuilt).valid());
    }
}
