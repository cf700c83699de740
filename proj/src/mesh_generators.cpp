#include "perfusim/mesh_generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "perfusim/errors.hpp"

namespace perfusim::msh {

namespace {

constexpr double kPi = std::numbers::pi;

void orient_cells(Mesh& mesh) {
    for (int c = 0; c < mesh.cell_count(); ++c) {
        if (mesh.cell_measure(c) < 0.0) {
            int* cell = mesh.cells.data() + static_cast<std::size_t>(c) * (mesh.dim + 1);
            std::swap(cell[0], cell[1]);
        }
    }
}

void tag_outer_boundary(Mesh& mesh) {
    mesh.boundary.clear();
    for (const auto& facet : boundary_by_incidence(mesh)) {
        BoundaryFacet bf;
        bf.vertices = facet;
        bf.kind = BoundaryKind::Outer;
        mesh.boundary.push_back(bf);
    }
}

}  // namespace

Mesh gen_disk_mesh(double radius, double target_h) {
    if (!(target_h > 0.0) || !(target_h < radius))
        throw DomainError("gen_disk_mesh: need 0 < h < radius");
    const int rings = std::max(1, static_cast<int>(std::lround(radius / target_h)));
    if (6.0 * static_cast<double>(rings) * rings > 3e7)
        throw DomainError("gen_disk_mesh: target h would create more than 3e7 cells");

    Mesh mesh;
    mesh.dim = 2;
    mesh.vertices.push_back(Vec3::Zero());
    std::vector<int> ring_start(rings + 1, 0);
    for (int k = 1; k <= rings; ++k) {
        ring_start[k] = static_cast<int>(mesh.vertices.size());
        const double r = radius * k / rings;
        const int n = 6 * k;
        for (int j = 0; j < n; ++j) {
            const double a = 2.0 * kPi * j / n;
            mesh.vertices.push_back(Vec3(r * std::cos(a), r * std::sin(a), 0.0));
        }
    }

    auto ring_vertex = [&](int k, int j) {
        if (k == 0) return 0;
        const int n = 6 * k;
        return ring_start[k] + ((j % n) + n) % n;
    };

    // Between ring k-1 and ring k, each of the 6 sectors holds k "outward"
    // triangles and k-1 "inward" ones.
    for (int k = 1; k <= rings; ++k) {
        for (int s = 0; s < 6; ++s) {
            const int in0 = s * (k - 1);
            const int out0 = s * k;
            for (int j = 0; j < k; ++j) {
                mesh.cells.push_back(ring_vertex(k, out0 + j));
                mesh.cells.push_back(ring_vertex(k, out0 + j + 1));
                mesh.cells.push_back(ring_vertex(k - 1, in0 + j));
            }
            for (int j = 0; j + 1 < k; ++j) {
                mesh.cells.push_back(ring_vertex(k - 1, in0 + j));
                mesh.cells.push_back(ring_vertex(k, out0 + j + 1));
                mesh.cells.push_back(ring_vertex(k - 1, in0 + j + 1));
            }
        }
    }

    orient_cells(mesh);
    tag_outer_boundary(mesh);
    return mesh;
}

namespace {

Mesh freudenthal_grid(int n, const Vec3& lo, const Vec3& hi) {
    Mesh mesh;
    mesh.dim = 3;
    const int stride = n + 1;
    auto vid = [&](int i, int j, int k) { return (i * stride + j) * stride + k; };
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            for (int k = 0; k <= n; ++k)
                mesh.vertices.push_back(Vec3(lo.x() + (hi.x() - lo.x()) * i / n,
                                             lo.y() + (hi.y() - lo.y()) * j / n,
                                             lo.z() + (hi.z() - lo.z()) * k / n));

    // Six tetrahedra around the main diagonal (0,0,0)-(1,1,1) of each cube;
    // identical in every cube, so faces match across cube boundaries.
    static const int tets[6][4][3] = {
        {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {1, 1, 1}},
        {{0, 0, 0}, {1, 1, 0}, {0, 1, 0}, {1, 1, 1}},
        {{0, 0, 0}, {0, 1, 0}, {0, 1, 1}, {1, 1, 1}},
        {{0, 0, 0}, {0, 1, 1}, {0, 0, 1}, {1, 1, 1}},
        {{0, 0, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}},
        {{0, 0, 0}, {1, 0, 1}, {1, 0, 0}, {1, 1, 1}},
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (const auto& tet : tets)
                    for (const auto& corner : tet)
                        mesh.cells.push_back(
                            vid(i + corner[0], j + corner[1], k + corner[2]));
    return mesh;
}

}  // namespace

Mesh gen_ball_mesh(double radius, double target_h) {
    if (!(target_h > 0.0) || !(target_h < radius))
        throw DomainError("gen_ball_mesh: need 0 < h < radius");
    const int n = std::max(2, static_cast<int>(std::lround(2.0 * radius / target_h)));
    if (6.0 * std::pow(static_cast<double>(n), 3) > 2e6)
        throw DomainError("gen_ball_mesh: target h would create more than 2e6 cells");

    Mesh mesh = freudenthal_grid(n, Vec3(-1, -1, -1), Vec3(1, 1, 1));
    for (auto& v : mesh.vertices) {
        const double linf = std::max({std::abs(v.x()), std::abs(v.y()), std::abs(v.z())});
        const double l2 = v.norm();
        if (l2 > 0.0) v *= radius * linf / l2;
    }
    orient_cells(mesh);
    tag_outer_boundary(mesh);
    return mesh;
}

Mesh gen_unit_square_mesh(int n) {
    if (n < 1) throw DomainError("gen_unit_square_mesh: n must be >= 1");
    Mesh mesh;
    mesh.dim = 2;
    const int stride = n + 1;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            mesh.vertices.push_back(Vec3(static_cast<double>(i) / n,
                                         static_cast<double>(j) / n, 0.0));
    auto vid = [&](int i, int j) { return j * stride + i; };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            mesh.cells.insert(mesh.cells.end(),
                              {vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            mesh.cells.insert(mesh.cells.end(),
                              {vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    }
    orient_cells(mesh);
    tag_outer_boundary(mesh);
    return mesh;
}

Mesh gen_unit_cube_mesh(int n) {
    if (n < 1) throw DomainError("gen_unit_cube_mesh: n must be >= 1");
    Mesh mesh = freudenthal_grid(n, Vec3(0, 0, 0), Vec3(1, 1, 1));
    orient_cells(mesh);
    tag_outer_boundary(mesh);
    return mesh;
}

}  // namespace perfusim::msh
