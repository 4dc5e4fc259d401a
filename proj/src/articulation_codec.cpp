#include "artikit/articulation_codec.hpp"

#include <cmath>
#include <stdexcept>

namespace artikit {

ArticulationVector encode_joint(const Joint& joint) {
    ArticulationVector v;
    v[0] = static_cast<double>(joint.jtype);
    if (joint.jtype == JointType::Fixed) return v;  // components 1..8 stay zero

    if (std::abs(norm(joint.axis.direction) - 1.0) > 1e-9)
        throw std::invalid_argument("movable joint direction is not unit length");
    v[1] = joint.axis.pivot.x;
    v[2] = joint.axis.pivot.y;
    v[3] = joint.axis.pivot.z;
    v[4] = joint.axis.direction.x;
    v[5] = joint.axis.direction.y;
    v[6] = joint.axis.direction.z;
    v[7] = joint.limits.lower;
    v[8] = joint.limits.upper;
    return v;
}

DecodedJoint decode_joint(const ArticulationVector& code) {
    for (double x : code.c)
        if (!std::isfinite(x)) throw std::invalid_argument("articulation code is not finite");

    DecodedJoint d;
    long type_code = std::lround(code[0]);
    type_code = std::max(0L, std::min(2L, type_code));
    d.jtype = static_cast<JointType>(type_code);

    if (d.jtype == JointType::Fixed) return d;  // snapped to all-zero attributes

    d.axis.pivot = {code[1], code[2], code[3]};
    Vec3 dir{code[4], code[5], code[6]};
    double n = norm(dir);
    if (n < 1e-6)
        throw std::invalid_argument("movable joint direction norm below 1e-6");
    d.axis.direction = std::abs(n - 1.0) <= 1e-9 ? dir : dir / n;  // snap only noisy codes
    d.limits.lower = code[7];
    d.limits.upper = code[8];
    if (d.limits.lower > d.limits.upper) std::swap(d.limits.lower, d.limits.upper);
    return d;
}

AdjacencyTensor build_adjacency(const KinematicTree& tree) {
    ValidationReport report = validate_tree(tree);
    if (!report.valid())
        throw std::invalid_argument("cannot build adjacency of invalid tree: " + report.summary());

    AdjacencyTensor adj(tree.part_count());
    for (const Joint& j : tree.joints) adj.at(j.parent, j.child) = 1;
    return adj;
}

}  // namespace artikit
