#include "artikit/obj_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace artikit {

TriMesh read_obj(std::istream& in, const std::string& name) {
    TriMesh mesh;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z))
                throw std::runtime_error(name + ":" + std::to_string(lineno) + ": bad vertex");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string token;
            while (ls >> token) {
                // "v", "v/vt", "v//vn", "v/vt/vn" -- only the position index matters
                size_t slash = token.find('/');
                int v = std::stoi(slash == std::string::npos ? token : token.substr(0, slash));
                if (v < 0) v = int(mesh.vertices.size()) + v + 1;  // relative indexing
                if (v < 1 || v > int(mesh.vertices.size()))
                    throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                             ": face index out of range");
                idx.push_back(v - 1);
            }
            if (idx.size() < 3)
                throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                         ": face needs at least 3 vertices");
            for (size_t k = 2; k < idx.size(); ++k)
                mesh.faces.push_back({idx[0], idx[k - 1], idx[k]});
        }
        // everything else (vn, vt, o, g, s, usemtl, mtllib) is ignored
    }
    return mesh;
}

TriMesh read_obj_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    return read_obj(f, path);
}

void write_obj(std::ostream& out, const TriMesh& mesh) {
    for (const Vec3& v : mesh.vertices)
        out << "v " << format_g9(v.x) << " " << format_g9(v.y) << " " << format_g9(v.z) << "\n";
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
}

void write_obj_file(const std::string& path, const TriMesh& mesh) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_obj(f, mesh);
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace artikit
