#ifndef PERFUSIM_MESH_HPP
#define PERFUSIM_MESH_HPP

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "perfusim/geometry.hpp"

namespace perfusim::msh {

enum class BoundaryKind { Outer, Outflow };

struct BoundaryFacet {
    std::array<int, 3> vertices{-1, -1, -1};  // first `dim` entries used
    BoundaryKind kind = BoundaryKind::Outer;
    int port_id = -1;  // only meaningful for Outflow
};

/// Unstructured simplicial mesh: triangles (dim 2) or tetrahedra (dim 3).
/// Cells are stored flat, dim+1 vertex indices each, positively oriented.
struct Mesh {
    int dim = 2;
    std::vector<Vec3> vertices;  // z = 0 in 2D
    std::vector<int> cells;
    std::vector<BoundaryFacet> boundary;

    int vertices_per_cell() const { return dim + 1; }
    int cell_count() const {
        return cells.empty() ? 0 : static_cast<int>(cells.size()) / (dim + 1);
    }
    const int* cell(int c) const { return cells.data() + static_cast<std::size_t>(c) * (dim + 1); }

    /// Signed measure: area (2D) or volume (3D); positive for valid cells.
    double cell_measure(int c) const;
    Vec3 cell_centroid(int c) const;
    double total_measure() const;

    /// inradius / circumradius; 0.5 (triangle) or 1/3 (tet) for the regular simplex.
    double cell_quality(int c) const;
};

/// Quadratic (P2) node numbering on top of a mesh: the first V nodes are the
/// mesh vertices, followed by one node per unique edge. Edge nodes are
/// numbered in first-encounter order over cells, which is deterministic for
/// a given mesh.
struct P2Numbering {
    int vertex_count = 0;
    int node_count = 0;
    int nodes_per_cell = 0;                // 6 in 2D, 10 in 3D
    std::vector<int> cell_nodes;           // flat, nodes_per_cell per cell
    std::vector<Vec3> edge_node_positions; // node_count - vertex_count entries

    const int* cell(int c) const {
        return cell_nodes.data() + static_cast<std::size_t>(c) * nodes_per_cell;
    }
    Vec3 node_position(const Mesh& mesh, int node) const {
        return node < vertex_count ? mesh.vertices[node]
                                   : edge_node_positions[node - vertex_count];
    }
};

P2Numbering p2_enrich(const Mesh& mesh);

/// P2 nodes lying on a boundary facet: its vertices plus its edge midpoints.
std::vector<int> facet_p2_nodes(const Mesh& mesh, const P2Numbering& p2,
                                const BoundaryFacet& facet);

/// Local edge list of the reference cell, matching the edge-node order within
/// P2Numbering::cell_nodes (after the dim+1 vertex slots).
const std::array<std::array<int, 2>, 3>& triangle_edges();
const std::array<std::array<int, 2>, 6>& tet_edges();

struct ValidationReport {
    std::vector<std::string> findings;
    bool ok() const { return findings.empty(); }
};

/// Reports orientation violations, near-duplicate vertices (< 1e-12 apart),
/// boundary facets that do not match facet-incidence counting, and untagged
/// boundary facets. Never throws.
ValidationReport validate_mesh(const Mesh& mesh);

/// The topological boundary computed by counting facet incidences
/// (facets belonging to exactly one cell). Vertex triples/pairs are sorted.
std::vector<std::array<int, 3>> boundary_by_incidence(const Mesh& mesh);

}  // namespace perfusim::msh

#endif
