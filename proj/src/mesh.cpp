#include "perfusim/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "perfusim/errors.hpp"

namespace perfusim::msh {

namespace {

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

}  // namespace

double Mesh::cell_measure(int c) const {
    const int* v = cell(c);
    if (dim == 2) {
        const Vec3 e1 = vertices[v[1]] - vertices[v[0]];
        const Vec3 e2 = vertices[v[2]] - vertices[v[0]];
        return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
    }
    const Vec3 e1 = vertices[v[1]] - vertices[v[0]];
    const Vec3 e2 = vertices[v[2]] - vertices[v[0]];
    const Vec3 e3 = vertices[v[3]] - vertices[v[0]];
    return e1.cross(e2).dot(e3) / 6.0;
}

Vec3 Mesh::cell_centroid(int c) const {
    const int* v = cell(c);
    Vec3 centroid = Vec3::Zero();
    for (int i = 0; i <= dim; ++i) centroid += vertices[v[i]];
    return centroid / (dim + 1);
}

double Mesh::total_measure() const {
    double sum = 0.0;
    for (int c = 0; c < cell_count(); ++c) sum += cell_measure(c);
    return sum;
}

double Mesh::cell_quality(int c) const {
    const int* v = cell(c);
    if (dim == 2) {
        const double a = (vertices[v[1]] - vertices[v[2]]).norm();
        const double b = (vertices[v[2]] - vertices[v[0]]).norm();
        const double e = (vertices[v[0]] - vertices[v[1]]).norm();
        const double area = std::abs(cell_measure(c));
        if (area == 0.0) return 0.0;
        const double circum = a * b * e / (4.0 * area);
        const double inr = 2.0 * area / (a + b + e);
        // Normalized so the equilateral triangle scores 1.
        return inr / circum * 2.0;
    }
    const Vec3& p0 = vertices[v[0]];
    Eigen::Matrix3d m;
    Eigen::Vector3d rhs;
    for (int i = 0; i < 3; ++i) {
        const Vec3 d = vertices[v[i + 1]] - p0;
        m.row(i) = d.transpose();
        rhs[i] = 0.5 * d.squaredNorm();
    }
    const double vol = std::abs(cell_measure(c));
    if (vol == 0.0 || std::abs(m.determinant()) < 1e-300) return 0.0;
    const Vec3 center = p0 + m.fullPivLu().solve(rhs);
    const double circum = (center - p0).norm();
    double area_sum = 0.0;
    static const int faces[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
    for (const auto& f : faces) {
        const Vec3 e1 = vertices[v[f[1]]] - vertices[v[f[0]]];
        const Vec3 e2 = vertices[v[f[2]]] - vertices[v[f[0]]];
        area_sum += 0.5 * e1.cross(e2).norm();
    }
    const double inr = 3.0 * vol / area_sum;
    // Normalized so the regular tetrahedron scores 1.
    return inr / circum * 3.0;
}

const std::array<std::array<int, 2>, 3>& triangle_edges() {
    // Edge i is opposite vertex i, matching the P2 basis ordering.
    static const std::array<std::array<int, 2>, 3> edges{{{1, 2}, {2, 0}, {0, 1}}};
    return edges;
}

const std::array<std::array<int, 2>, 6>& tet_edges() {
    static const std::array<std::array<int, 2>, 6> edges{
        {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
    return edges;
}

P2Numbering p2_enrich(const Mesh& mesh) {
    P2Numbering p2;
    p2.vertex_count = static_cast<int>(mesh.vertices.size());
    p2.nodes_per_cell = mesh.dim == 2 ? 6 : 10;
    const int n_edges_per_cell = mesh.dim == 2 ? 3 : 6;
    p2.cell_nodes.resize(static_cast<std::size_t>(mesh.cell_count()) * p2.nodes_per_cell);

    std::unordered_map<std::uint64_t, int> edge_node;
    edge_node.reserve(mesh.cells.size() * 2);
    int next = p2.vertex_count;

    for (int c = 0; c < mesh.cell_count(); ++c) {
        const int* v = mesh.cell(c);
        int* out = p2.cell_nodes.data() + static_cast<std::size_t>(c) * p2.nodes_per_cell;
        for (int i = 0; i <= mesh.dim; ++i) out[i] = v[i];
        for (int e = 0; e < n_edges_per_cell; ++e) {
            const int a = mesh.dim == 2 ? v[triangle_edges()[e][0]] : v[tet_edges()[e][0]];
            const int b = mesh.dim == 2 ? v[triangle_edges()[e][1]] : v[tet_edges()[e][1]];
            auto [it, inserted] = edge_node.try_emplace(edge_key(a, b), next);
            if (inserted) {
                p2.edge_node_positions.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
                ++next;
            }
            out[mesh.dim + 1 + e] = it->second;
        }
    }
    p2.node_count = next;
    return p2;
}

std::vector<int> facet_p2_nodes(const Mesh& mesh, const P2Numbering& p2,
                                const BoundaryFacet& facet) {
    // Rebuild the facet's edge nodes through the cell-local tables by scanning
    // the cells; cheaper: recover from a midpoint map. Build a local map once
    // per call site would be wasteful, so reconstruct via an edge->node map
    // derived from the numbering itself.
    static thread_local const Mesh* cached_mesh = nullptr;
    static thread_local const P2Numbering* cached_p2 = nullptr;
    static thread_local std::unordered_map<std::uint64_t, int> edge_node;
    if (cached_mesh != &mesh || cached_p2 != &p2) {
        edge_node.clear();
        const int n_edges_per_cell = mesh.dim == 2 ? 3 : 6;
        for (int c = 0; c < mesh.cell_count(); ++c) {
            const int* v = mesh.cell(c);
            const int* nodes = p2.cell(c);
            for (int e = 0; e < n_edges_per_cell; ++e) {
                const int a = mesh.dim == 2 ? v[triangle_edges()[e][0]] : v[tet_edges()[e][0]];
                const int b = mesh.dim == 2 ? v[triangle_edges()[e][1]] : v[tet_edges()[e][1]];
                edge_node.emplace(edge_key(a, b), nodes[mesh.dim + 1 + e]);
            }
        }
        cached_mesh = &mesh;
        cached_p2 = &p2;
    }

    std::vector<int> out;
    if (mesh.dim == 2) {
        out = {facet.vertices[0], facet.vertices[1],
               edge_node.at(edge_key(facet.vertices[0], facet.vertices[1]))};
    } else {
        out = {facet.vertices[0], facet.vertices[1], facet.vertices[2],
               edge_node.at(edge_key(facet.vertices[0], facet.vertices[1])),
               edge_node.at(edge_key(facet.vertices[0], facet.vertices[2])),
               edge_node.at(edge_key(facet.vertices[1], facet.vertices[2]))};
    }
    return out;
}

std::vector<std::array<int, 3>> boundary_by_incidence(const Mesh& mesh) {
    std::map<std::array<int, 3>, int> counts;
    const int nfacets = mesh.dim + 1;
    for (int c = 0; c < mesh.cell_count(); ++c) {
        const int* v = mesh.cell(c);
        for (int f = 0; f < nfacets; ++f) {
            std::array<int, 3> facet{-1, -1, -1};
            int k = 0;
            for (int i = 0; i <= mesh.dim; ++i)
                if (i != f) facet[k++] = v[i];
            std::sort(facet.begin(), facet.begin() + mesh.dim);
            counts[facet] += 1;
        }
    }
    std::vector<std::array<int, 3>> result;
    for (const auto& [facet, count] : counts)
        if (count == 1) result.push_back(facet);
    return result;
}

ValidationReport validate_mesh(const Mesh& mesh) {
    ValidationReport report;
    for (int c = 0; c < mesh.cell_count(); ++c) {
        if (mesh.cell_measure(c) <= 0.0)
            report.findings.push_back("cell " + std::to_string(c) +
                                      " has non-positive orientation");
    }

    // Near-duplicate vertices: sort along a generic direction and compare
    // within a sliding window instead of all pairs.
    const Vec3 dir = Vec3(1.0, 0.7548776662466927, 0.5698402909980532).normalized();
    std::vector<std::pair<double, int>> keyed(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
        keyed[i] = {dir.dot(mesh.vertices[i]), static_cast<int>(i)};
    std::sort(keyed.begin(), keyed.end());
    for (std::size_t i = 0; i < keyed.size(); ++i) {
        for (std::size_t j = i + 1; j < keyed.size(); ++j) {
            if (keyed[j].first - keyed[i].first > 1e-12) break;
            if ((mesh.vertices[keyed[i].second] - mesh.vertices[keyed[j].second]).norm() < 1e-12)
                report.findings.push_back("vertices " + std::to_string(keyed[i].second) + " and " +
                                          std::to_string(keyed[j].second) + " coincide");
        }
    }

    auto incidence = boundary_by_incidence(mesh);
    std::map<std::array<int, 3>, int> tagged;
    for (std::size_t f = 0; f < mesh.boundary.size(); ++f) {
        std::array<int, 3> key = mesh.boundary[f].vertices;
        std::sort(key.begin(), key.begin() + mesh.dim);
        tagged[key] += 1;
    }
    for (const auto& facet : incidence) {
        if (!tagged.count(facet)) {
            std::string ids;
            for (int i = 0; i < mesh.dim; ++i) ids += (i ? "," : "") + std::to_string(facet[i]);
            report.findings.push_back("boundary facet (" + ids + ") is untagged");
        }
    }
    std::map<std::array<int, 3>, bool> incident;
    for (const auto& facet : incidence) incident[facet] = true;
    for (const auto& [key, count] : tagged) {
        if (!incident.count(key)) {
            std::string ids;
            for (int i = 0; i < mesh.dim; ++i) ids += (i ? "," : "") + std::to_string(key[i]);
            report.findings.push_back("tagged facet (" + ids + ") is not on the boundary");
        }
        if (count > 1) report.findings.push_back("facet tagged more than once");
    }
    return report;
}

}  // namespace perfusim::msh
