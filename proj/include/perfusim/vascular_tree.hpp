#ifndef PERFUSIM_VASCULAR_TREE_HPP
#define PERFUSIM_VASCULAR_TREE_HPP

#include <string>
#include <vector>

#include "perfusim/geometry.hpp"

namespace perfusim::vascular {

enum class NodeKind { Root, Branching, Leaf };
enum class TreeRole { Supplying, Draining };

struct VesselNode {
    int id = -1;
    Vec3 position{Vec3::Zero()};
    NodeKind kind = NodeKind::Branching;
};

/// Straight cylindrical vessel from node `tail` to node `head`.
/// length/radius in m, flow in m^3/s.
struct VesselSegment {
    int tail = -1;
    int head = -1;
    double length = 0.0;
    double radius = 0.0;
    double flow = 0.0;
};

/// Blood and metabolic constants used by the tree cost model.
struct HemoParams {
    double viscosity = 3.6e-3;       ///< dynamic viscosity [Pa s]
    double metabolic_demand = 600.0; ///< volumetric maintenance power [W/m^3]
};

/// Rooted directed arborescence of vessel segments. Node ids coincide with
/// their index in `nodes`; segment tail/head refer to those ids.
struct VascularTree {
    int dim = 2;
    std::vector<VesselNode> nodes;
    std::vector<VesselSegment> segments;
    TreeRole role = TreeRole::Supplying;
    double q_perf = 0.0;  ///< total perfusion flow through the root [m^3/s]
    double q_term = 0.0;  ///< per-leaf terminal flow, q_perf / #leaves [m^3/s]

    int root_node() const;
    int leaf_count() const;
};

/// Children segment indices per node plus parent segment index (-1 at root).
/// Throws StructureError unless the segments form an arborescence covering
/// every node exactly once.
struct TreeAdjacency {
    int root = -1;
    std::vector<std::vector<int>> child_segments;  // per node
    std::vector<int> parent_segment;               // per node, -1 at root
    std::vector<int> topo_order;                   // node ids, root first
};
TreeAdjacency build_adjacency(const VascularTree& tree);

/// Poiseuille resistance 8 eta l / (pi r^4) [Pa s / m^3].
double segment_resistance(double length, double radius, double viscosity);

/// Pressure drop R * Q over one segment [Pa].
double segment_pressure_drop(double resistance, double flow);

/// Cross-section mean velocity Q / (pi r^2) [m/s].
double mean_velocity(double flow, double radius);

/// Radius minimizing the per-length segment power
///   m_b pi r^2 + (8 eta / pi) Q^2 / r^4,
/// i.e. r* = (16 eta Q^2 / (pi^2 m_b))^(1/6).
double optimal_radius(double flow, const HemoParams& params);

/// Recompute lengths from node positions and fill segment flows by Kirchhoff:
/// leaves carry q_term, interior segments the sum of their children.
VascularTree propagate_flows(VascularTree tree);

/// Set every radius to optimal_radius(flow). Requires propagated flows.
/// The resulting radii satisfy Murray's law at every junction since r^3 is
/// proportional to Q and flows are conserved.
VascularTree assign_radii(VascularTree tree, const HemoParams& params);

struct TreeCost {
    double volumetric = 0.0;  ///< sum of m_b pi l r^2 [W]
    double viscous = 0.0;     ///< sum of (8 eta / pi) (l / r^4) Q^2 [W]
    double total() const { return volumetric + viscous; }
};

/// Total power of the tree, split into maintenance and viscous parts.
TreeCost tree_cost_breakdown(const VascularTree& tree, const HemoParams& params);
double tree_cost(const VascularTree& tree, const HemoParams& params);

/// Largest relative flow imbalance |Q_in - sum Q_out| / Q_in over interior nodes.
double max_kirchhoff_residual(const VascularTree& tree);

/// Largest relative Murray residual |r_p^3 - sum r_c^3| / r_p^3 over junctions.
double max_murray_residual(const VascularTree& tree);

/// Structural and metric validation; throws StructureError / DomainError with
/// a description of the first violation found.
void validate_tree(const VascularTree& tree);

}  // namespace perfusim::vascular

#endif
