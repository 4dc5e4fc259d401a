#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "artikit/geometry.hpp"

namespace artikit {

// Integer codes are part of the serialized formats; do not reorder.
enum class JointType : int { Fixed = 0, Revolute = 1, Prismatic = 2 };

const char* joint_type_name(JointType t);

// Axis line in asset-local coordinates. Zero pivot and direction for Fixed.
struct JointAxis {
    Vec3 pivot;
    Vec3 direction;

    bool operator==(const JointAxis& o) const = default;
};

// Radians for Revolute, unit-cube lengths for Prismatic, both zero for Fixed.
struct JointLimits {
    double lower = 0.0;
    double upper = 0.0;

    bool operator==(const JointLimits& o) const = default;
};

struct Link {
    int id = 0;
    std::string name;
    std::string mesh_ref;  // path or inline handle; empty when absent
};

struct Joint {
    int parent = 0;
    int child = 0;
    JointType jtype = JointType::Fixed;
    JointAxis axis;
    JointLimits limits;
};

// Rooted, acyclic, connected link/joint graph. K = |links| = |joints| + 1.
struct KinematicTree {
    std::vector<Link> links;
    std::vector<Joint> joints;
    int root = 0;

    int part_count() const { return static_cast<int>(links.size()); }

    // Joint whose child is `link_id`, or nullptr for the root.
    const Joint* parent_joint(int link_id) const;
};

struct ValidationReport {
    std::vector<std::string> violations;

    bool valid() const { return violations.empty(); }
    std::string summary() const;
};

// Structural and numeric invariant check. Violations are data, not failures:
// any candidate structure is accepted and diagnosed.
ValidationReport validate_tree(const KinematicTree& tree);

class UrdfError : public std::runtime_error {
public:
    UrdfError(const std::string& msg, int line, const std::string& element)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ", <" + element + ">)"),
          line_(line),
          element_(element) {}

    int line() const { return line_; }
    const std::string& element() const { return element_; }

private:
    int line_;
    std::string element_;
};

// Parses the URDF subset (robot/link/joint/origin/axis/limit/visual mesh).
// Joint origins are folded into the axis pivot: origins are chained root-down
// at the zero configuration and the axis is expressed in asset-local
// coordinates. Ignored tags (inertial, collision, mimic, ...) produce
// warnings. Throws UrdfError with a line/element locator on malformed input.
KinematicTree parse_urdf(const std::string& text, std::vector<std::string>* warnings = nullptr);

// Canonical serialization: links by id, then joints by child id, rpy always
// zero, 9-significant-digit numbers. Throws std::invalid_argument on an
// invalid tree. parse_urdf(write_urdf(t)) reproduces t (exactly on values
// already representable in 9 significant digits).
std::string write_urdf(const KinematicTree& tree);

// Root first, every parent before its child, ties broken by ascending id.
std::vector<int> topological_order(const KinematicTree& tree);

}  // namespace artikit
