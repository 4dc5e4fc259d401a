#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "artikit/kinematic_graph.hpp"

namespace artikit {

// Per-joint attribute code, fixed layout:
//   [0]    type code (0 fixed, 1 revolute, 2 prismatic)
//   [1..3] axis pivot
//   [4..6] axis direction (unit for movable types)
//   [7]    lower limit
//   [8]    upper limit
// Fixed joints carry zeros in components 1..8.
struct ArticulationVector {
    static constexpr int kDim = 9;
    std::array<double, kDim> c{};

    double& operator[](int i) { return c[size_t(i)]; }
    double operator[](int i) const { return c[size_t(i)]; }
    bool operator==(const ArticulationVector& o) const = default;
};

// Binary K x K matrix; entry (p, c) == 1 iff joint p -> c exists.
struct AdjacencyTensor {
    int K = 0;
    std::vector<uint8_t> data;  // row-major

    explicit AdjacencyTensor(int k = 0) : K(k), data(size_t(k) * size_t(k), 0) {}

    uint8_t& at(int p, int c) { return data[size_t(p) * size_t(K) + size_t(c)]; }
    uint8_t at(int p, int c) const { return data[size_t(p) * size_t(K) + size_t(c)]; }
    bool operator==(const AdjacencyTensor& o) const = default;
};

struct DecodedJoint {
    JointType jtype = JointType::Fixed;
    JointAxis axis;
    JointLimits limits;
};

// Exact, reversible joint -> R^9 layout. Throws std::invalid_argument when a
// movable joint's direction is not unit length.
ArticulationVector encode_joint(const Joint& joint);

// Inverse of encode_joint on valid codes. Noisy codes are snapped: the type
// code rounds to the nearest of {0,1,2}, the direction is re-normalized, and
// inverted limits are swapped. A movable type whose direction norm is below
// 1e-6 throws std::invalid_argument.
DecodedJoint decode_joint(const ArticulationVector& code);

AdjacencyTensor build_adjacency(const KinematicTree& tree);

}  // namespace artikit
