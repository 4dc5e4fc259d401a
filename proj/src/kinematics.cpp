#include "artikit/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace artikit {

void check_asset(const ArticulatedAsset& asset) {
    ValidationReport report = validate_tree(asset.tree);
    if (!report.valid())
        throw std::invalid_argument("asset tree is invalid: " + report.summary());
    if (asset.part_meshes.size() != size_t(asset.tree.part_count()))
        throw std::invalid_argument("asset needs one mesh per link");
    for (size_t p = 0; p < asset.part_meshes.size(); ++p)
        if (asset.part_meshes[p].empty())
            throw std::invalid_argument("asset mesh for link " + std::to_string(p) + " is empty");
}

RigidTransform joint_transform(const Joint& joint, double q) {
    if (q < joint.limits.lower || q > joint.limits.upper)
        throw std::invalid_argument("joint displacement " + std::to_string(q) +
                                    " outside limits [" + std::to_string(joint.limits.lower) +
                                    ", " + std::to_string(joint.limits.upper) + "]");
    RigidTransform t;
    switch (joint.jtype) {
        case JointType::Fixed:
            break;
        case JointType::Revolute:
            t.rotation = axis_angle_rotation(joint.axis.direction, q);
            t.translation = joint.axis.pivot - t.rotation * joint.axis.pivot;
            break;
        case JointType::Prismatic:
            t.translation = joint.axis.direction * q;
            break;
    }
    return t;
}

std::vector<int> state_index_by_child(const KinematicTree& tree) {
    std::vector<int> children;
    for (const Joint& j : tree.joints) children.push_back(j.child);
    std::sort(children.begin(), children.end());
    std::vector<int> index(tree.links.size(), -1);
    for (size_t n = 0; n < children.size(); ++n) index[size_t(children[n])] = int(n);
    return index;
}

std::vector<RigidTransform> forward_kinematics(const KinematicTree& tree,
                                               const ArticulationState& state) {
    if (state.q.size() != tree.joints.size())
        throw std::invalid_argument("state has " + std::to_string(state.q.size()) +
                                    " values for " + std::to_string(tree.joints.size()) +
                                    " joints");

    std::vector<int> qidx = state_index_by_child(tree);
    std::vector<const Joint*> joint_of_child(tree.links.size(), nullptr);
    for (const Joint& j : tree.joints) joint_of_child[size_t(j.child)] = &j;

    std::vector<RigidTransform> world(tree.links.size());
    for (int link : topological_order(tree)) {
        const Joint* j = joint_of_child[size_t(link)];
        if (!j) continue;  // root stays identity
        world[size_t(link)] =
            world[size_t(j->parent)] * joint_transform(*j, state.q[size_t(qidx[size_t(link)])]);
    }
    return world;
}

std::vector<TriMesh> pose_asset(const ArticulatedAsset& asset, const ArticulationState& state) {
    check_asset(asset);
    std::vector<RigidTransform> world = forward_kinematics(asset.tree, state);
    std::vector<TriMesh> posed = asset.part_meshes;
    for (size_t p = 0; p < posed.size(); ++p)
        for (Vec3& v : posed[p].vertices) v = world[p].apply(v);
    return posed;
}

namespace {

// mt19937_64 output mapped to [0,1) explicitly; distribution classes are not
// bit-portable across standard libraries.
double uniform01(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

ArticulationState resting_state(const KinematicTree& tree) {
    std::vector<const Joint*> by_child;
    for (const Joint& j : tree.joints) by_child.push_back(&j);
    std::sort(by_child.begin(), by_child.end(),
              [](const Joint* a, const Joint* b) { return a->child < b->child; });
    ArticulationState s;
    for (const Joint* j : by_child) s.q.push_back(j->limits.lower);
    return s;
}

std::vector<ArticulationState> sample_states(const KinematicTree& tree, int count,
                                             StateSampleMode mode, uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_states: count must be >= 1");

    std::vector<const Joint*> by_child;
    for (const Joint& j : tree.joints) by_child.push_back(&j);
    std::sort(by_child.begin(), by_child.end(),
              [](const Joint* a, const Joint* b) { return a->child < b->child; });

    std::vector<ArticulationState> states;
    states.reserve(size_t(count));
    if (mode == StateSampleMode::UniformGrid) {
        for (int n = 1; n <= count; ++n) {
            double s = double(n) / double(count);
            ArticulationState st;
            for (const Joint* j : by_child) {
                double q = s == 1.0 ? j->limits.upper  // end state lands exactly on the limit
                                    : j->limits.lower + s * (j->limits.upper - j->limits.lower);
                st.q.push_back(std::clamp(q, j->limits.lower, j->limits.upper));
            }
            states.push_back(std::move(st));
        }
    } else {
        std::mt19937_64 rng(seed);
        for (int n = 0; n < count; ++n) {
            ArticulationState st;
            for (const Joint* j : by_child) {
                double u = uniform01(rng);
                double q = j->limits.lower + u * (j->limits.upper - j->limits.lower);
                st.q.push_back(std::clamp(q, j->limits.lower, j->limits.upper));
            }
            states.push_back(std::move(st));
        }
    }
    return states;
}

KinematicTree transform_tree(const KinematicTree& tree, const NormalizationTransform& xf) {
    KinematicTree out = tree;
    for (Joint& j : out.joints) {
        if (j.jtype == JointType::Fixed) continue;
        j.axis.pivot = xf.apply(j.axis.pivot);
        if (j.jtype == JointType::Prismatic) {
            j.limits.lower *= xf.scale;
            j.limits.upper *= xf.scale;
        }
    }
    return out;
}

}  // namespace artikit
