#include "perfusim/vascular_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "perfusim/errors.hpp"

namespace perfusim::vascular {

namespace {
constexpr double kPi = std::numbers::pi;
}

int VascularTree::root_node() const {
    for (const auto& n : nodes)
        if (n.kind == NodeKind::Root) return n.id;
    return -1;
}

int VascularTree::leaf_count() const {
    int count = 0;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::Leaf) ++count;
    return count;
}

TreeAdjacency build_adjacency(const VascularTree& tree) {
    const int n = static_cast<int>(tree.nodes.size());
    if (n == 0) throw StructureError("tree has no nodes");
    if (static_cast<int>(tree.segments.size()) != n - 1)
        throw StructureError("segment count must be node count - 1, got " +
                             std::to_string(tree.segments.size()) + " for " +
                             std::to_string(n) + " nodes");

    TreeAdjacency adj;
    adj.child_segments.resize(n);
    adj.parent_segment.assign(n, -1);

    for (int i = 0; i < n; ++i) {
        if (tree.nodes[i].id != i)
            throw StructureError("node id " + std::to_string(tree.nodes[i].id) +
                                 " does not match its index " + std::to_string(i));
    }
    for (int s = 0; s < static_cast<int>(tree.segments.size()); ++s) {
        const auto& seg = tree.segments[s];
        if (seg.tail < 0 || seg.tail >= n || seg.head < 0 || seg.head >= n)
            throw StructureError("segment " + std::to_string(s) + " references missing node");
        if (adj.parent_segment[seg.head] != -1)
            throw StructureError("node " + std::to_string(seg.head) + " has two parents");
        adj.parent_segment[seg.head] = s;
        adj.child_segments[seg.tail].push_back(s);
    }

    adj.root = tree.root_node();
    if (adj.root < 0) throw StructureError("tree has no root node");
    if (adj.parent_segment[adj.root] != -1)
        throw StructureError("root node has an incoming segment");

    // Breadth-first walk from the root; reaching all nodes rules out cycles
    // and disconnected components given |segments| = |nodes| - 1.
    adj.topo_order.reserve(n);
    adj.topo_order.push_back(adj.root);
    for (std::size_t k = 0; k < adj.topo_order.size(); ++k) {
        for (int s : adj.child_segments[adj.topo_order[k]])
            adj.topo_order.push_back(tree.segments[s].head);
    }
    if (static_cast<int>(adj.topo_order.size()) != n)
        throw StructureError("tree is not connected from the root");
    return adj;
}

double segment_resistance(double length, double radius, double viscosity) {
    if (length <= 0.0) throw DomainError("segment_resistance: length must be positive");
    if (radius <= 0.0) throw DomainError("segment_resistance: radius must be positive");
    if (viscosity <= 0.0) throw DomainError("segment_resistance: viscosity must be positive");
    return 8.0 * viscosity / kPi * length / (radius * radius * radius * radius);
}

double segment_pressure_drop(double resistance, double flow) {
    if (resistance < 0.0) throw DomainError("segment_pressure_drop: negative resistance");
    if (flow < 0.0) throw DomainError("segment_pressure_drop: negative flow");
    return resistance * flow;
}

double mean_velocity(double flow, double radius) {
    if (radius <= 0.0) throw DomainError("mean_velocity: radius must be positive");
    return flow / (kPi * radius * radius);
}

double optimal_radius(double flow, const HemoParams& params) {
    if (flow <= 0.0) throw DomainError("optimal_radius: flow must be positive");
    if (params.viscosity <= 0.0 || params.metabolic_demand <= 0.0)
        throw DomainError("optimal_radius: parameters must be positive");
    const double r6 = 16.0 * params.viscosity * flow * flow /
                      (kPi * kPi * params.metabolic_demand);
    return std::pow(r6, 1.0 / 6.0);
}

VascularTree propagate_flows(VascularTree tree) {
    const TreeAdjacency adj = build_adjacency(tree);
    if (tree.leaf_count() == 0) throw StructureError("propagate_flows: tree has no leaves");
    if (tree.q_term <= 0.0) throw StateError("propagate_flows: q_term is not set");

    for (auto& seg : tree.segments) {
        seg.length = (tree.nodes[seg.tail].position - tree.nodes[seg.head].position).norm();
        seg.flow = 0.0;
    }

    // Children first (reverse topological order), then the parent sums them.
    for (auto it = adj.topo_order.rbegin(); it != adj.topo_order.rend(); ++it) {
        const int node = *it;
        const int parent = adj.parent_segment[node];
        double outflow = 0.0;
        if (tree.nodes[node].kind == NodeKind::Leaf) {
            outflow = tree.q_term;
        } else {
            for (int s : adj.child_segments[node]) outflow += tree.segments[s].flow;
        }
        if (parent >= 0) tree.segments[parent].flow = outflow;
    }
    tree.q_perf = tree.q_term * tree.leaf_count();
    return tree;
}

VascularTree assign_radii(VascularTree tree, const HemoParams& params) {
    for (auto& seg : tree.segments) {
        if (seg.flow <= 0.0)
            throw StateError("assign_radii: segment flow missing; propagate flows first");
        seg.radius = optimal_radius(seg.flow, params);
    }
    return tree;
}

TreeCost tree_cost_breakdown(const VascularTree& tree, const HemoParams& params) {
    TreeCost cost;
    for (const auto& seg : tree.segments) {
        cost.volumetric += params.metabolic_demand * kPi * seg.length * seg.radius * seg.radius;
        cost.viscous += 8.0 * params.viscosity / kPi * seg.length /
                        (seg.radius * seg.radius * seg.radius * seg.radius) * seg.flow * seg.flow;
    }
    return cost;
}

double tree_cost(const VascularTree& tree, const HemoParams& params) {
    const TreeCost c = tree_cost_breakdown(tree, params);
    return c.total();
}

double max_kirchhoff_residual(const VascularTree& tree) {
    const TreeAdjacency adj = build_adjacency(tree);
    double worst = 0.0;
    for (const auto& node : tree.nodes) {
        if (node.kind == NodeKind::Leaf || adj.child_segments[node.id].empty()) continue;
        const int parent = adj.parent_segment[node.id];
        if (parent < 0) continue;  // root: inflow is q_perf by definition
        double out = 0.0;
        for (int s : adj.child_segments[node.id]) out += tree.segments[s].flow;
        const double in = tree.segments[parent].flow;
        if (in > 0.0) worst = std::max(worst, std::abs(in - out) / in);
    }
    return worst;
}

double max_murray_residual(const VascularTree& tree) {
    const TreeAdjacency adj = build_adjacency(tree);
    double worst = 0.0;
    for (const auto& node : tree.nodes) {
        const int parent = adj.parent_segment[node.id];
        if (parent < 0 || adj.child_segments[node.id].empty()) continue;
        const double rp = tree.segments[parent].radius;
        double sum = 0.0;
        for (int s : adj.child_segments[node.id]) {
            const double rc = tree.segments[s].radius;
            sum += rc * rc * rc;
        }
        const double rp3 = rp * rp * rp;
        if (rp3 > 0.0) worst = std::max(worst, std::abs(rp3 - sum) / rp3);
    }
    return worst;
}

void validate_tree(const VascularTree& tree) {
    const TreeAdjacency adj = build_adjacency(tree);
    for (const auto& node : tree.nodes) {
        const bool has_children = !adj.child_segments[node.id].empty();
        switch (node.kind) {
            case NodeKind::Root:
                if (node.id != adj.root) throw StructureError("more than one root node");
                break;
            case NodeKind::Leaf:
                if (has_children) throw StructureError("leaf node " + std::to_string(node.id) +
                                                       " has outgoing segments");
                break;
            case NodeKind::Branching:
                if (!has_children)
                    throw StructureError("branching node " + std::to_string(node.id) +
                                         " has no outgoing segments");
                break;
        }
    }
    for (std::size_t s = 0; s < tree.segments.size(); ++s) {
        const auto& seg = tree.segments[s];
        const double geo =
            (tree.nodes[seg.tail].position - tree.nodes[seg.head].position).norm();
        if (geo > 0.0 && std::abs(seg.length - geo) > 1e-12 * geo)
            throw DomainError("segment " + std::to_string(s) +
                              " length is inconsistent with node positions");
        if (seg.radius < 0.0 || seg.flow < 0.0)
            throw DomainError("segment " + std::to_string(s) + " has negative radius or flow");
    }
}

}  // namespace perfusim::vascular
