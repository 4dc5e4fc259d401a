#include "artikit/kinematic_graph.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace artikit {

const char* joint_type_name(JointType t) {
    switch (t) {
        case JointType::Fixed: return "fixed";
        case JointType::Revolute: return "revolute";
        case JointType::Prismatic: return "prismatic";
    }
    return "?";
}

const Joint* KinematicTree::parent_joint(int link_id) const {
    for (const Joint& j : joints)
        if (j.child == link_id) return &j;
    return nullptr;
}

std::string ValidationReport::summary() const {
    if (violations.empty()) return "valid";
    std::string s;
    for (size_t i = 0; i < violations.size(); ++i) {
        if (i) s += "; ";
        s += violations[i];
    }
    return s;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

ValidationReport validate_tree(const KinematicTree& tree) {
    ValidationReport r;
    const int K = tree.part_count();

    if (K == 0) {
        r.violations.push_back("tree has no links");
        return r;
    }

    std::set<int> ids;
    for (const Link& l : tree.links) {
        if (!ids.insert(l.id).second)
            r.violations.push_back("duplicate link id " + std::to_string(l.id));
    }
    for (int i = 0; i < K; ++i)
        if (!ids.count(i)) r.violations.push_back("link ids not dense: missing id " + std::to_string(i));
    if (!ids.count(tree.root))
        r.violations.push_back("root " + std::to_string(tree.root) + " is not a link id");

    if (static_cast<int>(tree.joints.size()) != K - 1)
        r.violations.push_back("joint count " + std::to_string(tree.joints.size()) +
                               " does not equal link count - 1");

    auto in_range = [&](int id) { return id >= 0 && id < K && ids.count(id); };

    std::vector<int> child_count(std::max(K, 1), 0);
    for (size_t ji = 0; ji < tree.joints.size(); ++ji) {
        const Joint& j = tree.joints[ji];
        const std::string jname = "joint " + std::to_string(ji);
        if (!in_range(j.parent))
            r.violations.push_back(jname + " parent " + std::to_string(j.parent) + " is not a link");
        if (!in_range(j.child))
            r.violations.push_back(jname + " child " + std::to_string(j.child) + " is not a link");
        if (j.parent == j.child)
            r.violations.push_back(jname + " connects link " + std::to_string(j.parent) + " to itself");
        if (in_range(j.child)) child_count[j.child]++;

        if (j.jtype == JointType::Fixed) {
            if (j.axis.pivot != Vec3{} || j.axis.direction != Vec3{})
                r.violations.push_back(jname + " is fixed but has a nonzero axis");
            if (j.limits.lower != 0.0 || j.limits.upper != 0.0)
                r.violations.push_back(jname + " is fixed but has nonzero limits");
        } else {
            if (std::abs(norm(j.axis.direction) - 1.0) > 1e-9)
                r.violations.push_back(jname + " direction is not unit length");
        }
        if (j.limits.lower > j.limits.upper)
            r.violations.push_back(jname + " limits are inverted");
    }

    if (in_range(tree.root) && child_count[tree.root] > 0)
        r.violations.push_back("root " + std::to_string(tree.root) + " is the child of a joint");
    for (int i = 0; i < K; ++i) {
        if (i == tree.root) continue;
        if (child_count[i] > 1)
            r.violations.push_back("link " + std::to_string(i) + " has multiple parent joints");
    }

    // Reachability from the declared root.
    std::vector<std::vector<int>> children(K);
    for (const Joint& j : tree.joints)
        if (in_range(j.parent) && in_range(j.child)) children[j.parent].push_back(j.child);

    std::vector<bool> reachable(K, false);
    if (in_range(tree.root)) {
        std::vector<int> stack{tree.root};
        reachable[tree.root] = true;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int c : children[u])
                if (!reachable[c]) {
                    reachable[c] = true;
                    stack.push_back(c);
                }
        }
    }
    for (int i = 0; i < K; ++i)
        if (!reachable[i] && i != tree.root)
            r.violations.push_back("link " + std::to_string(i) + " unreachable");

    // Cycle detection over the directed parent->child edges.
    std::vector<int> state(K, 0);  // 0 unvisited, 1 on stack, 2 done
    std::vector<int> path;
    std::set<std::set<int>> cycles;
    std::function<void(int)> dfs = [&](int u) {
        state[u] = 1;
        path.push_back(u);
        for (int c : children[u]) {
            if (state[c] == 0) {
                dfs(c);
            } else if (state[c] == 1) {
                std::set<int> cyc;
                for (auto it = std::find(path.begin(), path.end(), c); it != path.end(); ++it)
                    cyc.insert(*it);
                cycles.insert(cyc);
            }
        }
        path.pop_back();
        state[u] = 2;
    };
    for (int i = 0; i < K; ++i)
        if (state[i] == 0) dfs(i);
    for (const auto& cyc : cycles) {
        std::string s = "cycle {";
        bool first = true;
        for (int id : cyc) {
            if (!first) s += ", ";
            s += std::to_string(id);
            first = false;
        }
        s += "}";
        r.violations.push_back(s);
    }

    return r;
}

// ---------------------------------------------------------------------------
// Minimal XML reader (elements, attributes, comments, declarations) with
// line tracking for error locators.
// ---------------------------------------------------------------------------

namespace {

struct XmlAttr {
    std::string name;
    std::string value;
};

struct XmlNode {
    std::string name;
    std::vector<XmlAttr> attrs;
    std::vector<XmlNode> children;
    int line = 1;

    const std::string* attr(const std::string& n) const {
        for (const XmlAttr& a : attrs)
            if (a.name == n) return &a.value;
        return nullptr;
    }

    const XmlNode* child(const std::string& n) const {
        for (const XmlNode& c : children)
            if (c.name == n) return &c;
        return nullptr;
    }
};

class XmlReader {
public:
    explicit XmlReader(const std::string& text) : text_(text) {}

    XmlNode parse_document() {
        skip_misc();
        if (pos_ >= text_.size()) fail("empty document", "document");
        XmlNode root = parse_element();
        skip_misc();
        if (pos_ < text_.size()) fail("trailing content after root element", root.name);
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& msg, const std::string& element) const {
        throw UrdfError("XML syntax error: " + msg, line_, element);
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    char advance() {
        char c = text_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    bool starts_with(const char* s) const { return text_.compare(pos_, std::strlen(s), s) == 0; }

    void expect(char c, const std::string& element) {
        if (peek() != c) fail(std::string("expected '") + c + "'", element);
        advance();
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }

    // Whitespace, comments, processing instructions, DOCTYPE, stray text.
    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--")) {
                size_t end = text_.find("-->", pos_);
                if (end == std::string::npos) fail("unterminated comment", "comment");
                while (pos_ < end + 3) advance();
            } else if (starts_with("<?")) {
                size_t end = text_.find("?>", pos_);
                if (end == std::string::npos) fail("unterminated declaration", "?xml");
                while (pos_ < end + 2) advance();
            } else if (starts_with("<!")) {
                size_t end = text_.find('>', pos_);
                if (end == std::string::npos) fail("unterminated '<!' section", "!");
                while (pos_ <= end) advance();
            } else if (pos_ < text_.size() && peek() != '<') {
                advance();  // character data is not meaningful in this subset
            } else {
                return;
            }
        }
    }

    std::string parse_name() {
        std::string n;
        while (pos_ < text_.size()) {
            char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' ||
                c == '.') {
                n += advance();
            } else {
                break;
            }
        }
        if (n.empty()) fail("expected a name", "?");
        return n;
    }

    std::string decode_entities(const std::string& raw, const std::string& element) {
        if (raw.find('&') == std::string::npos) return raw;
        std::string out;
        for (size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] != '&') {
                out += raw[i];
                continue;
            }
            size_t semi = raw.find(';', i);
            if (semi == std::string::npos) fail("unterminated entity", element);
            std::string ent = raw.substr(i + 1, semi - i - 1);
            if (ent == "amp") out += '&';
            else if (ent == "lt") out += '<';
            else if (ent == "gt") out += '>';
            else if (ent == "quot") out += '"';
            else if (ent == "apos") out += '\'';
            else fail("unknown entity &" + ent + ";", element);
            i = semi;
        }
        return out;
    }

    XmlNode parse_element() {
        expect('<', "?");
        XmlNode node;
        node.line = line_;
        node.name = parse_name();

        for (;;) {
            skip_ws();
            char c = peek();
            if (c == '\0') fail("unterminated element", node.name);
            if (c == '/') {
                advance();
                expect('>', node.name);
                return node;  // self-closing
            }
            if (c == '>') {
                advance();
                break;
            }
            XmlAttr attr;
            attr.name = parse_name();
            skip_ws();
            expect('=', node.name);
            skip_ws();
            char quote = peek();
            if (quote != '"' && quote != '\'') fail("attribute value must be quoted", node.name);
            advance();
            std::string raw;
            while (peek() != quote) {
                if (pos_ >= text_.size()) fail("unterminated attribute value", node.name);
                raw += advance();
            }
            advance();
            attr.value = decode_entities(raw, node.name);
            node.attrs.push_back(std::move(attr));
        }

        // Content: child elements until the matching close tag.
        for (;;) {
            skip_misc();
            if (pos_ >= text_.size()) fail("missing </" + node.name + ">", node.name);
            if (starts_with("</")) {
                advance();
                advance();
                std::string close = parse_name();
                if (close != node.name)
                    fail("mismatched close tag </" + close + ">", node.name);
                skip_ws();
                expect('>', node.name);
                return node;
            }
            node.children.push_back(parse_element());
        }
    }

    const std::string& text_;
    size_t pos_ = 0;
    int line_ = 1;
};

double parse_number(const std::string& s, size_t& off, int line, const std::string& element) {
    while (off < s.size() && std::isspace(static_cast<unsigned char>(s[off]))) ++off;
    const char* begin = s.c_str() + off;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw UrdfError("malformed number in '" + s + "'", line, element);
    off += static_cast<size_t>(end - begin);
    return v;
}

Vec3 parse_vec3(const std::string& s, int line, const std::string& element) {
    size_t off = 0;
    Vec3 v;
    v.x = parse_number(s, off, line, element);
    v.y = parse_number(s, off, line, element);
    v.z = parse_number(s, off, line, element);
    return v;
}

double parse_scalar(const std::string& s, int line, const std::string& element) {
    size_t off = 0;
    return parse_number(s, off, line, element);
}

std::string escape_attr(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Assumes a structurally valid tree (connected, acyclic, dense ids).
std::vector<int> topo_order_unchecked(const KinematicTree& tree) {
    std::vector<std::vector<int>> children(tree.links.size());
    for (const Joint& j : tree.joints) children[size_t(j.parent)].push_back(j.child);

    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    ready.push(tree.root);
    std::vector<int> order;
    order.reserve(tree.links.size());
    while (!ready.empty()) {
        int u = ready.top();
        ready.pop();
        order.push_back(u);
        for (int c : children[size_t(u)]) ready.push(c);
    }
    return order;
}

}  // namespace

// ---------------------------------------------------------------------------
// URDF subset
// ---------------------------------------------------------------------------

KinematicTree parse_urdf(const std::string& text, std::vector<std::string>* warnings) {
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };

    XmlReader reader(text);
    XmlNode doc = reader.parse_document();
    if (doc.name != "robot")
        throw UrdfError("root element must be <robot>", doc.line, doc.name);

    KinematicTree tree;
    std::map<std::string, int> link_ids;

    struct RawJoint {
        std::string name, parent, child;
        JointType jtype = JointType::Fixed;
        Vec3 origin_xyz, origin_rpy;
        Vec3 axis{1, 0, 0};
        bool has_axis = false;
        bool has_limit = false;
        double lower = 0.0, upper = 0.0;
        int line = 1;
    };
    std::vector<RawJoint> raw_joints;

    static const std::set<std::string> kIgnoredTags = {"inertial",     "collision", "mimic",
                                                       "transmission", "gazebo",    "material",
                                                       "calibration",  "dynamics",  "safety_controller"};

    for (const XmlNode& node : doc.children) {
        if (node.name == "link") {
            const std::string* name = node.attr("name");
            if (!name) throw UrdfError("link is missing a name", node.line, "link");
            if (link_ids.count(*name))
                throw UrdfError("duplicate link name '" + *name + "'", node.line, "link");
            Link link;
            link.id = static_cast<int>(tree.links.size());  // document order
            link.name = *name;
            if (const XmlNode* visual = node.child("visual")) {
                if (const XmlNode* geom = visual->child("geometry")) {
                    if (const XmlNode* mesh = geom->child("mesh")) {
                        if (const std::string* fn = mesh->attr("filename")) link.mesh_ref = *fn;
                    }
                }
            }
            for (const XmlNode& c : node.children)
                if (c.name != "visual" && !kIgnoredTags.count(c.name))
                    warn("ignoring <" + c.name + "> in link '" + *name + "' (line " +
                         std::to_string(c.line) + ")");
            link_ids[*name] = link.id;
            tree.links.push_back(std::move(link));
        } else if (node.name == "joint") {
            RawJoint rj;
            rj.line = node.line;
            if (const std::string* n = node.attr("name")) rj.name = *n;
            const std::string* type = node.attr("type");
            if (!type) throw UrdfError("joint is missing a type", node.line, "joint");
            if (*type == "fixed") rj.jtype = JointType::Fixed;
            else if (*type == "revolute") rj.jtype = JointType::Revolute;
            else if (*type == "prismatic") rj.jtype = JointType::Prismatic;
            else throw UrdfError("unknown joint type '" + *type + "'", node.line, "joint");

            for (const XmlNode& c : node.children) {
                if (c.name == "parent") {
                    if (const std::string* l = c.attr("link")) rj.parent = *l;
                } else if (c.name == "child") {
                    if (const std::string* l = c.attr("link")) rj.child = *l;
                } else if (c.name == "origin") {
                    if (const std::string* v = c.attr("xyz")) rj.origin_xyz = parse_vec3(*v, c.line, "origin");
                    if (const std::string* v = c.attr("rpy")) rj.origin_rpy = parse_vec3(*v, c.line, "origin");
                } else if (c.name == "axis") {
                    if (const std::string* v = c.attr("xyz")) {
                        rj.axis = parse_vec3(*v, c.line, "axis");
                        rj.has_axis = true;
                    }
                } else if (c.name == "limit") {
                    rj.has_limit = true;
                    if (const std::string* v = c.attr("lower")) rj.lower = parse_scalar(*v, c.line, "limit");
                    if (const std::string* v = c.attr("upper")) rj.upper = parse_scalar(*v, c.line, "limit");
                } else if (!kIgnoredTags.count(c.name)) {
                    warn("ignoring <" + c.name + "> in joint '" + rj.name + "' (line " +
                         std::to_string(c.line) + ")");
                }
            }
            if (rj.parent.empty())
                throw UrdfError("joint '" + rj.name + "' has no parent link", node.line, "joint");
            if (rj.child.empty())
                throw UrdfError("joint '" + rj.name + "' has no child link", node.line, "joint");
            if (rj.jtype != JointType::Fixed && !rj.has_limit)
                throw UrdfError("missing limit element on non-fixed joint '" + rj.name + "'",
                                node.line, "joint");
            raw_joints.push_back(std::move(rj));
        } else if (!kIgnoredTags.count(node.name)) {
            warn("ignoring <" + node.name + "> (line " + std::to_string(node.line) + ")");
        }
    }

    tree.joints.reserve(raw_joints.size());
    for (const RawJoint& rj : raw_joints) {
        Joint j;
        auto pit = link_ids.find(rj.parent);
        if (pit == link_ids.end())
            throw UrdfError("undeclared link '" + rj.parent + "'", rj.line, "joint");
        auto cit = link_ids.find(rj.child);
        if (cit == link_ids.end())
            throw UrdfError("undeclared link '" + rj.child + "'", rj.line, "joint");
        j.parent = pit->second;
        j.child = cit->second;
        j.jtype = rj.jtype;
        tree.joints.push_back(j);
    }

    // Root: the unique link that is never a joint child.
    std::vector<bool> is_child(tree.links.size(), false);
    for (const Joint& j : tree.joints) is_child[size_t(j.child)] = true;
    tree.root = -1;
    for (const Link& l : tree.links)
        if (!is_child[size_t(l.id)]) {
            tree.root = l.id;
            break;
        }
    if (tree.root < 0 && !tree.links.empty()) tree.root = 0;

    // Fold origin chains into asset-local pivots: frames accumulate
    // root-down at the zero configuration, so we need parent-before-child
    // processing. A structure that cannot be ordered is rejected here.
    {
        KinematicTree probe = tree;
        ValidationReport pre = validate_tree(probe);
        // Axis invariants are established below; only structural violations count yet.
        for (const std::string& v : pre.violations)
            if (v.find("direction") == std::string::npos && v.find("axis") == std::string::npos &&
                v.find("limits") == std::string::npos)
                throw UrdfError("invalid kinematic structure: " + v, doc.line, "robot");
    }

    std::vector<Mat3> frame_rot(tree.links.size(), Mat3::identity());
    std::vector<Vec3> frame_pos(tree.links.size());
    std::vector<int> joint_of_child(tree.links.size(), -1);
    for (size_t i = 0; i < tree.joints.size(); ++i) joint_of_child[size_t(tree.joints[i].child)] = int(i);

    for (int link_id : topo_order_unchecked(tree)) {
        int ji = joint_of_child[size_t(link_id)];
        if (ji < 0) continue;  // root
        Joint& j = tree.joints[size_t(ji)];
        const RawJoint& rj = raw_joints[size_t(ji)];
        const Mat3& pr = frame_rot[size_t(j.parent)];
        const Vec3& pp = frame_pos[size_t(j.parent)];
        Mat3 local = rpy_rotation(rj.origin_rpy.x, rj.origin_rpy.y, rj.origin_rpy.z);
        frame_rot[size_t(link_id)] = pr * local;
        frame_pos[size_t(link_id)] = pp + pr * rj.origin_xyz;

        if (j.jtype == JointType::Fixed) {
            if (rj.has_axis || rj.has_limit)
                warn("joint '" + rj.name + "' is fixed; axis/limit ignored (line " +
                     std::to_string(rj.line) + ")");
            continue;  // zero axis and limits
        }
        j.axis.pivot = frame_pos[size_t(link_id)];
        Vec3 dir = frame_rot[size_t(link_id)] * rj.axis;
        double n = norm(dir);
        if (n < 1e-6)
            throw UrdfError("joint '" + rj.name + "' axis direction has zero length", rj.line, "axis");
        if (std::abs(n - 1.0) > 1e-9) dir = dir / n;  // snap only when needed
        j.axis.direction = dir;
        j.limits.lower = rj.lower;
        j.limits.upper = rj.upper;
        if (j.limits.lower > j.limits.upper)
            throw UrdfError("joint '" + rj.name + "' limits are inverted", rj.line, "limit");
    }

    return tree;
}

std::string write_urdf(const KinematicTree& tree) {
    ValidationReport report = validate_tree(tree);
    if (!report.valid())
        throw std::invalid_argument("cannot serialize invalid tree: " + report.summary());

    std::set<std::string> seen_names;
    auto link_name = [&](const Link& l) {
        return l.name.empty() ? "link_" + std::to_string(l.id) : l.name;
    };
    for (const Link& l : tree.links)
        if (!seen_names.insert(link_name(l)).second)
            throw std::invalid_argument("cannot serialize tree with duplicate link name '" +
                                        link_name(l) + "'");

    std::vector<const Link*> links_by_id(tree.links.size());
    for (const Link& l : tree.links) links_by_id[size_t(l.id)] = &l;

    std::vector<const Joint*> joints_by_child(tree.links.size(), nullptr);
    for (const Joint& j : tree.joints) joints_by_child[size_t(j.child)] = &j;

    // Canonical frames: rpy is always zero, the child frame sits at the
    // movable pivot (or the global origin for fixed joints), so origin xyz
    // is expressed relative to the parent frame.
    std::vector<Vec3> frame_pos(tree.links.size());
    for (int link_id : topo_order_unchecked(tree)) {
        const Joint* j = joints_by_child[size_t(link_id)];
        if (!j) continue;
        frame_pos[size_t(link_id)] = j->jtype == JointType::Fixed ? Vec3{} : j->axis.pivot;
    }

    auto vec = [](const Vec3& v) {
        return format_g9(v.x) + " " + format_g9(v.y) + " " + format_g9(v.z);
    };

    std::ostringstream out;
    out << "<?xml version=\"1.0\"?>\n";
    out << "<robot name=\"robot\">\n";
    for (const Link* l : links_by_id) {
        out << "  <link name=\"" << escape_attr(link_name(*l)) << "\">";
        if (!l->mesh_ref.empty()) {
            out << "\n    <visual>\n      <geometry>\n        <mesh filename=\""
                << escape_attr(l->mesh_ref)
                << "\"/>\n      </geometry>\n    </visual>\n  ";
        }
        out << "</link>\n";
    }
    for (size_t child = 0; child < joints_by_child.size(); ++child) {
        const Joint* j = joints_by_child[child];
        if (!j) continue;
        const std::string cname = link_name(*links_by_id[child]);
        out << "  <joint name=\"" << escape_attr("joint_" + cname) << "\" type=\""
            << joint_type_name(j->jtype) << "\">\n";
        out << "    <parent link=\"" << escape_attr(link_name(*links_by_id[size_t(j->parent)]))
            << "\"/>\n";
        out << "    <child link=\"" << escape_attr(cname) << "\"/>\n";
        Vec3 origin = frame_pos[child] - frame_pos[size_t(j->parent)];
        out << "    <origin xyz=\"" << vec(origin) << "\" rpy=\"0 0 0\"/>\n";
        if (j->jtype != JointType::Fixed) {
            out << "    <axis xyz=\"" << vec(j->axis.direction) << "\"/>\n";
            out << "    <limit lower=\"" << format_g9(j->limits.lower) << "\" upper=\""
                << format_g9(j->limits.upper) << "\"/>\n";
        }
        out << "  </joint>\n";
    }
    out << "</robot>\n";
    return out.str();
}

std::vector<int> topological_order(const KinematicTree& tree) {
    ValidationReport report = validate_tree(tree);
    if (!report.valid())
        throw std::invalid_argument("cannot order invalid tree: " + report.summary());
    return topo_order_unchecked(tree);
}

}  // namespace artikit
