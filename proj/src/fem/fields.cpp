#include "perfusim/fem/fields.hpp"

#include <cmath>
#include <map>

#include "perfusim/fem/quadrature.hpp"
#include "perfusim/fem/shape.hpp"

namespace perfusim::fem {

namespace {

template <int D>
struct CellGeometry {
    Eigen::Matrix<double, D, D> jgeo, jinv;
    Eigen::Matrix<double, D + 1, D> gp1;
    double measure = 0.0;

    CellGeometry(const msh::Mesh& mesh, const int* verts) {
        const Vec3& x0 = mesh.vertices[verts[0]];
        for (int i = 0; i < D; ++i)
            for (int d = 0; d < D; ++d) jgeo(d, i) = mesh.vertices[verts[i + 1]][d] - x0[d];
        jinv = jgeo.inverse();
        measure = jgeo.determinant() / (D == 2 ? 2.0 : 6.0);
        gp1 = P1Basis<D>::gradients({}) * jinv;
    }
};

template <int D>
Eigen::Matrix<double, D, D> deformation_gradient(const msh::Mesh&, const int* verts,
                                                 const CellGeometry<D>& geo,
                                                 const Eigen::VectorXd& u) {
    Eigen::Matrix<double, D + 1, D> ue;
    for (int i = 0; i <= D; ++i)
        for (int d = 0; d < D; ++d) ue(i, d) = u[verts[i] * D + d];
    return Eigen::Matrix<double, D, D>::Identity() + ue.transpose() * geo.gp1;
}

template <int D>
std::vector<Vec3> darcy_impl(const PoroProblem& pb, const State& state) {
    constexpr int NP = D == 2 ? 6 : 10;
    const msh::Mesh& mesh = *pb.mesh;
    const double mobility = pb.material.mobility();
    const QuadratureRule& rule = simplex_rule(D);
    std::vector<Vec3> velocity(mesh.cell_count(), Vec3::Zero());

    for (int c = 0; c < mesh.cell_count(); ++c) {
        const int* verts = mesh.cell(c);
        const int* pnodes = pb.p2->cell(c);
        const CellGeometry<D> geo(mesh, verts);
        const Eigen::Matrix<double, D, D> finv_t =
            deformation_gradient<D>(mesh, verts, geo, state.displacement).inverse().transpose();
        Eigen::Matrix<double, NP, 1> pe;
        for (int j = 0; j < NP; ++j) pe[j] = state.pressure[pnodes[j]];

        Eigen::Matrix<double, D, 1> w_avg = Eigen::Matrix<double, D, 1>::Zero();
        for (int q = 0; q < rule.size(); ++q) {
            const Eigen::Matrix<double, NP, D> grad2 =
                P2Basis<D>::gradients(rule.points[q]) * geo.jinv;
            w_avg += rule.weights[q] * (-mobility * (finv_t * (grad2.transpose() * pe)));
        }
        for (int d = 0; d < D; ++d) velocity[c][d] = w_avg[d];
    }
    return velocity;
}

}  // namespace

std::vector<Vec3> darcy_velocity(const PoroProblem& problem, const State& state) {
    return problem.mesh->dim == 2 ? darcy_impl<2>(problem, state)
                                  : darcy_impl<3>(problem, state);
}

std::vector<double> cell_jacobians(const PoroProblem& problem, const State& state) {
    const msh::Mesh& mesh = *problem.mesh;
    std::vector<double> jac(mesh.cell_count(), 1.0);
    for (int c = 0; c < mesh.cell_count(); ++c) {
        const int* verts = mesh.cell(c);
        if (mesh.dim == 2) {
            const CellGeometry<2> geo(mesh, verts);
            jac[c] = deformation_gradient<2>(mesh, verts, geo, state.displacement).determinant();
        } else {
            const CellGeometry<3> geo(mesh, verts);
            jac[c] = deformation_gradient<3>(mesh, verts, geo, state.displacement).determinant();
        }
    }
    return jac;
}

std::vector<double> porosity_at_vertices(const PoroProblem& problem, const State& state) {
    const msh::Mesh& mesh = *problem.mesh;
    const std::vector<double> jac = cell_jacobians(problem, state);
    std::vector<double> j_avg(mesh.vertices.size(), 0.0);
    std::vector<double> weight(mesh.vertices.size(), 0.0);
    for (int c = 0; c < mesh.cell_count(); ++c) {
        const double m = mesh.cell_measure(c);
        for (int i = 0; i <= mesh.dim; ++i) {
            j_avg[mesh.cell(c)[i]] += m * jac[c];
            weight[mesh.cell(c)[i]] += m;
        }
    }
    std::vector<double> phi(mesh.vertices.size(), problem.material.reference_porosity);
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        const double j = weight[v] > 0.0 ? j_avg[v] / weight[v] : 1.0;
        phi[v] = porosity_from_pressure(state.pressure[static_cast<int>(v)], j,
                                        problem.material);
    }
    return phi;
}

namespace {

template <int D>
double pressure_error_impl(const PoroProblem& pb, const State& state,
                           const std::function<double(const Vec3&)>& exact) {
    constexpr int NP = D == 2 ? 6 : 10;
    const msh::Mesh& mesh = *pb.mesh;
    const QuadratureRule& rule = simplex_rule(D);
    double err2 = 0.0;
    for (int c = 0; c < mesh.cell_count(); ++c) {
        const int* verts = mesh.cell(c);
        const int* pnodes = pb.p2->cell(c);
        const double measure = mesh.cell_measure(c);
        Eigen::Matrix<double, NP, 1> pe;
        for (int j = 0; j < NP; ++j) pe[j] = state.pressure[pnodes[j]];
        for (int q = 0; q < rule.size(); ++q) {
            const auto vals2 = P2Basis<D>::values(rule.points[q]);
            Vec3 xq = Vec3::Zero();
            for (int i = 0; i <= D; ++i) xq += rule.points[q][i] * mesh.vertices[verts[i]];
            const double diff = vals2.dot(pe) - (exact ? exact(xq) : 0.0);
            err2 += rule.weights[q] * measure * diff * diff;
        }
    }
    return std::sqrt(err2);
}

double p1_vector_l2(const msh::Mesh& mesh, const Eigen::VectorXd& a, const Eigen::VectorXd* b,
                    const std::function<Vec3(const Vec3&)>* exact) {
    const QuadratureRule& rule = simplex_rule(mesh.dim);
    const int dim = mesh.dim;
    double err2 = 0.0;
    for (int c = 0; c < mesh.cell_count(); ++c) {
        const int* verts = mesh.cell(c);
        const double measure = mesh.cell_measure(c);
        for (int q = 0; q < rule.size(); ++q) {
            Vec3 xq = Vec3::Zero();
            Vec3 diff = Vec3::Zero();
            for (int i = 0; i <= dim; ++i) {
                const double w = rule.points[q][i];
                xq += w * mesh.vertices[verts[i]];
                for (int d = 0; d < dim; ++d) {
                    double val = a[verts[i] * dim + d];
                    if (b) val -= (*b)[verts[i] * dim + d];
                    diff[d] += w * val;
                }
            }
            if (exact) diff -= (*exact)(xq);
            err2 += rule.weights[q] * measure * diff.squaredNorm();
        }
    }
    return std::sqrt(err2);
}

}  // namespace

double pressure_l2_error(const PoroProblem& problem, const State& state,
                         const std::function<double(const Vec3&)>& exact) {
    return problem.mesh->dim == 2 ? pressure_error_impl<2>(problem, state, exact)
                                  : pressure_error_impl<3>(problem, state, exact);
}

double pressure_l2_norm(const PoroProblem& problem, const State& state) {
    return pressure_l2_error(problem, state, nullptr);
}

double displacement_l2_norm(const msh::Mesh& mesh, const Eigen::VectorXd& u) {
    return p1_vector_l2(mesh, u, nullptr, nullptr);
}

double displacement_l2_diff(const msh::Mesh& mesh, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b) {
    return p1_vector_l2(mesh, a, &b, nullptr);
}

double displacement_l2_error(const msh::Mesh& mesh, const Eigen::VectorXd& u,
                             const std::function<Vec3(const Vec3&)>& exact) {
    return p1_vector_l2(mesh, u, nullptr, &exact);
}

namespace {

template <int D>
double boundary_flux_impl(const PoroProblem& pb, const State& state) {
    constexpr int NP = D == 2 ? 6 : 10;
    const msh::Mesh& mesh = *pb.mesh;
    const double mobility = pb.material.mobility();

    // Facet -> owning cell, for gradient evaluation on the boundary.
    std::map<std::array<int, 3>, int> owner;
    for (int c = 0; c < mesh.cell_count(); ++c) {
        const int* v = mesh.cell(c);
        for (int f = 0; f <= D; ++f) {
            std::array<int, 3> key{-1, -1, -1};
            int k = 0;
            for (int i = 0; i <= D; ++i)
                if (i != f) key[k++] = v[i];
            std::sort(key.begin(), key.begin() + D);
            owner[key] = c;
        }
    }

    const QuadratureRule& rule = facet_rule(D);
    double flux = 0.0;
    for (const auto& facet : mesh.boundary) {
        if (facet.kind != msh::BoundaryKind::Outer) continue;
        std::array<int, 3> key = facet.vertices;
        std::sort(key.begin(), key.begin() + D);
        const auto it = owner.find(key);
        if (it == owner.end()) continue;
        const int c = it->second;
        const int* verts = mesh.cell(c);
        const int* pnodes = pb.p2->cell(c);
        const CellGeometry<D> geo(mesh, verts);
        const Eigen::Matrix<double, D, D> finv_t =
            deformation_gradient<D>(mesh, verts, geo, state.displacement).inverse().transpose();
        Eigen::Matrix<double, NP, 1> pe;
        for (int j = 0; j < NP; ++j) pe[j] = state.pressure[pnodes[j]];

        double fmeasure;
        Vec3 normal;
        if constexpr (D == 2) {
            const Vec3 e = mesh.vertices[facet.vertices[1]] - mesh.vertices[facet.vertices[0]];
            fmeasure = e.norm();
            normal = Vec3(e.y(), -e.x(), 0.0).normalized();
        } else {
            const Vec3 e1 = mesh.vertices[facet.vertices[1]] - mesh.vertices[facet.vertices[0]];
            const Vec3 e2 = mesh.vertices[facet.vertices[2]] - mesh.vertices[facet.vertices[0]];
            const Vec3 cr = e1.cross(e2);
            fmeasure = 0.5 * cr.norm();
            normal = cr.normalized();
        }
        if (normal.dot(mesh.vertices[facet.vertices[0]] - mesh.cell_centroid(c)) < 0.0)
            normal = -normal;

        for (int q = 0; q < rule.size(); ++q) {
            Vec3 xq = Vec3::Zero();
            for (int i = 0; i < D; ++i) xq += rule.points[q][i] * mesh.vertices[facet.vertices[i]];
            // reference coordinates of xq inside the owning cell
            Eigen::Matrix<double, D, 1> rel;
            for (int d = 0; d < D; ++d) rel[d] = xq[d] - mesh.vertices[verts[0]][d];
            const Eigen::Matrix<double, D, 1> xi = geo.jinv * rel;
            std::array<double, 4> bary{};
            double l0 = 1.0;
            for (int d = 0; d < D; ++d) {
                bary[d + 1] = xi[d];
                l0 -= xi[d];
            }
            bary[0] = l0;
            const Eigen::Matrix<double, NP, D> grad2 = P2Basis<D>::gradients(bary) * geo.jinv;
            const Eigen::Matrix<double, D, 1> w = -mobility * (finv_t * (grad2.transpose() * pe));
            double wn = 0.0;
            for (int d = 0; d < D; ++d) wn += w[d] * normal[d];
            flux += rule.weights[q] * fmeasure * wn;
        }
    }
    return flux;
}

}  // namespace

double outer_boundary_flux(const PoroProblem& problem, const State& state) {
    return problem.mesh->dim == 2 ? boundary_flux_impl<2>(problem, state)
                                  : boundary_flux_impl<3>(problem, state);
}

}  // namespace perfusim::fem
