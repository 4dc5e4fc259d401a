#include "artikit/joint_to_voxel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace artikit {

ArticulatedVoxelGrid embed(const KinematicTree& tree, const SparseVoxelGrid& grid) {
    ValidationReport report = validate_tree(tree);
    if (!report.valid())
        throw std::invalid_argument("embed: invalid tree: " + report.summary());

    const int K = tree.part_count();
    std::set<int> grid_parts;
    for (const auto& c : grid.cells) grid_parts.insert(c.part_id);
    for (int id : grid_parts)
        if (id < 0 || id >= K)
            throw std::invalid_argument("embed: grid part " + std::to_string(id) +
                                        " is not a tree link");
    for (int id = 0; id < K; ++id)
        if (!grid_parts.count(id))
            throw std::invalid_argument("embed: tree link " + std::to_string(id) +
                                        " has no grid cells");

    // Per-part channel rows, shared by every cell of the part.
    std::vector<std::array<double, ArticulatedVoxelGrid::kChannels>> rows(
        static_cast<size_t>(K));
    for (auto& row : rows) row.fill(0.0);
    rows[size_t(tree.root)][ArticulationVector::kDim] = ArticulatedVoxelGrid::kRootSentinel;
    for (const Joint& j : tree.joints) {
        ArticulationVector code = encode_joint(j);
        auto& row = rows[size_t(j.child)];
        std::copy(code.c.begin(), code.c.end(), row.begin());
        row[ArticulationVector::kDim] = double(j.parent);
    }

    ArticulatedVoxelGrid out;
    out.K = K;
    out.adjacency = build_adjacency(tree);
    out.grid = grid;
    out.grid.channel_count = ArticulatedVoxelGrid::kChannels;
    out.grid.channel_data.resize(grid.cells.size() * size_t(ArticulatedVoxelGrid::kChannels));
    for (size_t n = 0; n < grid.cells.size(); ++n) {
        const auto& row = rows[size_t(grid.cells[n].part_id)];
        std::copy(row.begin(), row.end(), out.grid.channels(n).begin());
    }
    return out;
}

std::map<int, PartAggregate> aggregate_part_channels(const ArticulatedVoxelGrid& avg) {
    if (avg.grid.channel_count != ArticulatedVoxelGrid::kChannels)
        throw std::invalid_argument("aggregate: grid does not carry articulation channels");

    std::map<int, std::vector<size_t>> cells_of_part;
    for (size_t n = 0; n < avg.grid.cells.size(); ++n)
        cells_of_part[avg.grid.cells[n].part_id].push_back(n);

    auto majority = [](std::map<long, size_t>& votes) {
        long winner = 0;
        size_t best = 0;
        for (const auto& [value, count] : votes)
            if (count > best) {  // map order makes ties resolve to the lower value
                best = count;
                winner = value;
            }
        return winner;
    };

    // Order-invariant mean: identical values pass through exactly, otherwise
    // the values are sorted before summation.
    auto mean = [](std::vector<double>& values) {
        bool uniform = std::all_of(values.begin(), values.end(),
                                   [&](double v) { return v == values.front(); });
        if (uniform) return values.front();
        std::sort(values.begin(), values.end());
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum / double(values.size());
    };

    std::map<int, PartAggregate> result;
    for (auto& [part, cell_idx] : cells_of_part) {
        PartAggregate agg;
        agg.cell_count = cell_idx.size();

        std::map<long, size_t> type_votes, parent_votes;
        for (size_t n : cell_idx) {
            auto ch = avg.grid.channels(n);
            long t = std::clamp(std::lround(ch[0]), 0L, 2L);
            type_votes[t]++;
            parent_votes[std::lround(ch[ArticulationVector::kDim])]++;
        }
        long winning_type = majority(type_votes);
        agg.parent_id = int(majority(parent_votes));

        agg.code[0] = double(winning_type);
        if (winning_type != long(JointType::Fixed)) {
            std::vector<double> values;
            for (int comp = 1; comp < ArticulationVector::kDim; ++comp) {
                values.clear();
                for (size_t n : cell_idx) {
                    auto ch = avg.grid.channels(n);
                    if (std::clamp(std::lround(ch[0]), 0L, 2L) == winning_type)
                        values.push_back(ch[size_t(comp)]);
                }
                agg.code[comp] = mean(values);
            }
        }
        result[part] = agg;
    }
    return result;
}

KinematicTree recover(const ArticulatedVoxelGrid& avg) {
    const int K = avg.K;
    if (K < 1) throw std::runtime_error("recover: part count must be positive");
    if (avg.adjacency.K != K) throw std::runtime_error("recover: adjacency size mismatch");

    std::map<int, PartAggregate> agg = aggregate_part_channels(avg);
    for (int id = 0; id < K; ++id)
        if (!agg.count(id))
            throw std::runtime_error("recover: part " + std::to_string(id) + " has no cells");
    for (const auto& [part, a] : agg)
        if (part < 0 || part >= K)
            throw std::runtime_error("recover: cell part " + std::to_string(part) +
                                     " out of range");

    int root = -1;
    for (const auto& [part, a] : agg) {
        if (a.parent_id != int(ArticulatedVoxelGrid::kRootSentinel)) continue;
        if (root >= 0)
            throw std::runtime_error("recover: multiple root parts (" + std::to_string(root) +
                                     " and " + std::to_string(part) + ")");
        root = part;
    }
    if (root < 0) throw std::runtime_error("recover: no root part");

    KinematicTree tree;
    tree.root = root;
    for (int id = 0; id < K; ++id)
        tree.links.push_back({id, "link_" + std::to_string(id), ""});
    for (const auto& [part, a] : agg) {
        if (part == root) continue;
        if (a.parent_id < 0 || a.parent_id >= K)
            throw std::runtime_error("recover: part " + std::to_string(part) +
                                     " names invalid parent " + std::to_string(a.parent_id));
        DecodedJoint d = decode_joint(a.code);
        tree.joints.push_back({a.parent_id, part, d.jtype, d.axis, d.limits});
    }

    ValidationReport report = validate_tree(tree);
    if (!report.valid())
        throw std::runtime_error("recover: aggregated topology is invalid: " + report.summary());

    AdjacencyTensor rebuilt = build_adjacency(tree);
    if (!(rebuilt == avg.adjacency)) {
        for (int p = 0; p < K; ++p)
            for (int c = 0; c < K; ++c)
                if (rebuilt.at(p, c) != avg.adjacency.at(p, c))
                    throw std::runtime_error(
                        "recover: adjacency sidecar disagrees with parent channels for part " +
                        std::to_string(c));
    }
    return tree;
}

TreeDiff compare_trees(const KinematicTree& a, const KinematicTree& b) {
    TreeDiff diff;
    if (a.part_count() != b.part_count() || a.root != b.root) return diff;

    auto edge_set = [](const KinematicTree& t) {
        std::set<std::tuple<int, int, int>> edges;
        for (const Joint& j : t.joints) edges.insert({j.parent, j.child, int(j.jtype)});
        return edges;
    };
    if (edge_set(a) != edge_set(b)) return diff;

    diff.topology_equal = true;
    for (const Joint& ja : a.joints) {
        const Joint* jb = b.parent_joint(ja.child);
        auto upd = [&](double x, double y) {
            diff.max_attr_dev = std::max(diff.max_attr_dev, std::abs(x - y));
        };
        upd(ja.axis.pivot.x, jb->axis.pivot.x);
        upd(ja.axis.pivot.y, jb->axis.pivot.y);
        upd(ja.axis.pivot.z, jb->axis.pivot.z);
        upd(ja.axis.direction.x, jb->axis.direction.x);
        upd(ja.axis.direction.y, jb->axis.direction.y);
        upd(ja.axis.direction.z, jb->axis.direction.z);
        upd(ja.limits.lower, jb->limits.lower);
        upd(ja.limits.upper, jb->limits.upper);
    }
    return diff;
}

}  // namespace artikit
