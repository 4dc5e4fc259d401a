#include "artikit/voxel_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace artikit {

using nlohmann::json;

void write_voxel_stream(std::ostream& out, const SparseVoxelGrid& grid, int K,
                        const AdjacencyTensor* adjacency) {
    if (!grid.cells_sorted_unique())
        throw std::invalid_argument("voxel write: cells must be sorted and unique");

    json header;
    header["resolution"] = grid.resolution;
    header["C"] = grid.channel_count;
    header["K"] = K;
    header["count"] = grid.cells.size();
    if (adjacency) {
        json rows = json::array();
        for (int p = 0; p < adjacency->K; ++p) {
            json row = json::array();
            for (int c = 0; c < adjacency->K; ++c) row.push_back(int(adjacency->at(p, c)));
            rows.push_back(std::move(row));
        }
        header["adjacency"] = std::move(rows);
    }
    out << header.dump() << "\n";

    for (size_t n = 0; n < grid.cells.size(); ++n) {
        const auto& c = grid.cells[n];
        out << c.i << " " << c.j << " " << c.k << " " << c.part_id;
        for (double v : grid.channels(n)) out << " " << format_g9(v);
        out << "\n";
    }
}

VoxelFileContents read_voxel_stream(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("voxel read: missing header");

    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("voxel read: bad header: ") + e.what());
    }

    VoxelFileContents out;
    out.grid.resolution = header.at("resolution").get<int>();
    out.grid.channel_count = header.at("C").get<int>();
    out.K = header.at("K").get<int>();
    const size_t count = header.at("count").get<size_t>();
    if (out.grid.resolution < 1 || out.grid.channel_count < 0)
        throw std::runtime_error("voxel read: invalid header values");

    if (header.contains("adjacency")) {
        const json& rows = header.at("adjacency");
        AdjacencyTensor adj(out.K);
        if (int(rows.size()) != out.K) throw std::runtime_error("voxel read: adjacency size");
        for (int p = 0; p < out.K; ++p) {
            if (int(rows[size_t(p)].size()) != out.K)
                throw std::runtime_error("voxel read: adjacency row size");
            for (int c = 0; c < out.K; ++c) {
                int v = rows[size_t(p)][size_t(c)].get<int>();
                if (v != 0 && v != 1) throw std::runtime_error("voxel read: adjacency not binary");
                adj.at(p, c) = uint8_t(v);
            }
        }
        out.adjacency = std::move(adj);
    }

    out.grid.cells.reserve(count);
    out.grid.channel_data.reserve(count * size_t(out.grid.channel_count));
    const int R = out.grid.resolution;
    for (size_t n = 0; n < count; ++n) {
        if (!std::getline(in, line))
            throw std::runtime_error("voxel read: expected " + std::to_string(count) +
                                     " cells, got " + std::to_string(n));
        std::istringstream ls(line);
        SparseVoxelGrid::Cell cell;
        if (!(ls >> cell.i >> cell.j >> cell.k >> cell.part_id))
            throw std::runtime_error("voxel read: malformed cell at line " + std::to_string(n + 2));
        if (cell.i < 0 || cell.i >= R || cell.j < 0 || cell.j >= R || cell.k < 0 || cell.k >= R)
            throw std::runtime_error("voxel read: cell out of range at line " +
                                     std::to_string(n + 2));
        for (int c = 0; c < out.grid.channel_count; ++c) {
            double v;
            if (!(ls >> v))
                throw std::runtime_error("voxel read: missing channel at line " +
                                         std::to_string(n + 2));
            out.grid.channel_data.push_back(v);
        }
        out.grid.cells.push_back(cell);
    }
    if (!out.grid.cells_sorted_unique())
        throw std::runtime_error("voxel read: cells not in lexicographic order");
    return out;
}

void write_voxel_file(const std::string& path, const SparseVoxelGrid& grid, int K,
                      const AdjacencyTensor* adjacency) {
    std::ofstream f(path, std::ios::binary);  // binary: keep \n byte-exact everywhere
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_voxel_stream(f, grid, K, adjacency);
    if (!f) throw std::runtime_error("write failed: " + path);
}

VoxelFileContents read_voxel_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    return read_voxel_stream(f);
}

void write_articulated_voxel_file(const std::string& path, const ArticulatedVoxelGrid& avg) {
    write_voxel_file(path, avg.grid, avg.K, &avg.adjacency);
}

ArticulatedVoxelGrid read_articulated_voxel_file(const std::string& path) {
    VoxelFileContents contents = read_voxel_file(path);
    if (contents.grid.channel_count != ArticulatedVoxelGrid::kChannels)
        throw std::runtime_error(path + ": expected " +
                                 std::to_string(ArticulatedVoxelGrid::kChannels) + " channels");
    if (!contents.adjacency) throw std::runtime_error(path + ": missing adjacency header");
    ArticulatedVoxelGrid avg;
    avg.grid = std::move(contents.grid);
    avg.adjacency = std::move(*contents.adjacency);
    avg.K = contents.K;
    return avg;
}

}  // namespace artikit
