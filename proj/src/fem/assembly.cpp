#include "perfusim/fem/assembly.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "perfusim/fem/quadrature.hpp"
#include "perfusim/fem/shape.hpp"

namespace perfusim::fem {

namespace {

template <int D>
struct ElementResult {
    static constexpr int NV = D + 1;
    static constexpr int NU = D * (D + 1);
    static constexpr int NP = D == 2 ? 6 : 10;
    static constexpr int NT = NU + NP;

    Eigen::Matrix<double, NT, 1> re = Eigen::Matrix<double, NT, 1>::Zero();
    Eigen::Matrix<double, NT, NT> ke = Eigen::Matrix<double, NT, NT>::Zero();
    std::array<int, NT> dofs{};
};

template <int D, bool WithJacobian>
void element_kernel(const PoroProblem& pb, const State& state, int c, ElementResult<D>& out) {
    using Mat = Eigen::Matrix<double, D, D>;
    constexpr int NV = ElementResult<D>::NV;
    constexpr int NU = ElementResult<D>::NU;
    constexpr int NP = ElementResult<D>::NP;

    const msh::Mesh& mesh = *pb.mesh;
    const int* verts = mesh.cell(c);
    const int* pnodes = pb.p2->cell(c);

    for (int i = 0; i < NV; ++i)
        for (int d = 0; d < D; ++d) out.dofs[i * D + d] = verts[i] * D + d;
    for (int j = 0; j < NP; ++j) out.dofs[NU + j] = pb.p_dof(pnodes[j]);
    out.re.setZero();
    if constexpr (WithJacobian) out.ke.setZero();

    Mat jgeo;
    const Vec3& x0 = mesh.vertices[verts[0]];
    for (int i = 0; i < D; ++i)
        for (int d = 0; d < D; ++d) jgeo(d, i) = mesh.vertices[verts[i + 1]][d] - x0[d];
    const double detj = jgeo.determinant();
    if (detj <= 0.0)
        throw StateError("element " + std::to_string(c) + " has non-positive orientation");
    const double measure = detj / (D == 2 ? 2.0 : 6.0);
    const Mat jinv = jgeo.inverse();

    const std::array<double, 4> center{};  // P1 gradients are constant
    const Eigen::Matrix<double, NV, D> gp1 = P1Basis<D>::gradients(center) * jinv;

    Eigen::Matrix<double, NV, D> ue;
    for (int i = 0; i < NV; ++i)
        for (int d = 0; d < D; ++d) ue(i, d) = state.displacement[verts[i] * D + d];
    Eigen::Matrix<double, NP, 1> pe;
    for (int j = 0; j < NP; ++j) pe[j] = state.pressure[pnodes[j]];

    const Mat deform = Mat::Identity() + ue.transpose() * gp1;
    const double jac = deform.determinant();
    if (jac <= 0.0)
        throw StateError("inadmissible state: det F <= 0 in element " + std::to_string(c));
    const Mat finv_t = deform.inverse().transpose();
    const Mat cauchy_green = deform.transpose() * deform;
    const Mat cinv = cauchy_green.inverse();
    const double log_i3 = std::log(cauchy_green.determinant());

    const double lambda = pb.material.lambda();
    const double mu = pb.material.mu();
    const double mobility = pb.material.mobility();
    const Mat s_skel = 0.5 * lambda * log_i3 * cinv + mu * (Mat::Identity() - cinv);

    // h_i = F^-T grad0 N_i for the P1 basis; reused by several blocks.
    Eigen::Matrix<double, NV, D> h1;
    for (int i = 0; i < NV; ++i) h1.row(i) = (finv_t * gp1.row(i).transpose()).transpose();

    const QuadratureRule& rule = simplex_rule(D);
    for (int q = 0; q < rule.size(); ++q) {
        const auto& bary = rule.points[q];
        const double wq = rule.weights[q] * measure;

        const auto vals2 = P2Basis<D>::values(bary);
        const Eigen::Matrix<double, NP, D> grad2 =
            P2Basis<D>::gradients(bary) * jinv;

        const double p_q = vals2.dot(pe);
        Eigen::Matrix<double, D, 1> grad0p = grad2.transpose() * pe;
        Eigen::Matrix<double, D, 1> g_p = finv_t * grad0p;

        const Mat stress = s_skel - p_q * jac * cinv;
        const Mat fs = deform * stress;

        for (int i = 0; i < NV; ++i) {
            const Eigen::Matrix<double, D, 1> ri = fs * gp1.row(i).transpose();
            for (int m = 0; m < D; ++m) out.re[i * D + m] += wq * ri[m];
        }

        Eigen::Matrix<double, NP, D> fg2;
        for (int ip = 0; ip < NP; ++ip)
            fg2.row(ip) = (finv_t * grad2.row(ip).transpose()).transpose();

        double theta_q = 0.0;
        if (pb.source) {
            Vec3 xq = Vec3::Zero();
            for (int i = 0; i < NV; ++i) xq += bary[i] * mesh.vertices[verts[i]];
            theta_q = pb.source(xq);
        }
        for (int ip = 0; ip < NP; ++ip) {
            out.re[NU + ip] += wq * (mobility * fg2.row(ip).dot(g_p) - theta_q * vals2[ip]);
        }

        if constexpr (WithJacobian) {
            // pressure-pressure
            for (int ip = 0; ip < NP; ++ip)
                for (int jp = 0; jp < NP; ++jp)
                    out.ke(NU + ip, NU + jp) += wq * mobility * fg2.row(ip).dot(fg2.row(jp));

            // momentum-pressure: dS/dp = -J C^-1, so d(FS) = -N_jp J F^-T
            for (int i = 0; i < NV; ++i)
                for (int m = 0; m < D; ++m)
                    for (int jp = 0; jp < NP; ++jp)
                        out.ke(i * D + m, NU + jp) -= wq * vals2[jp] * jac * h1(i, m);

            // pressure-momentum: variation of both pulled-back gradients
            for (int j = 0; j < NV; ++j) {
                for (int n = 0; n < D; ++n) {
                    const Eigen::Matrix<double, D, 1> hj = h1.row(j).transpose();
                    const double hj_gp = hj.dot(g_p);
                    for (int ip = 0; ip < NP; ++ip) {
                        const double val = -mobility *
                                           (g_p[n] * hj.dot(fg2.row(ip).transpose()) +
                                            fg2(ip, n) * hj_gp);
                        out.ke(NU + ip, j * D + n) += wq * val;
                    }
                }
            }

            // momentum-momentum: geometric + material + pressure parts
            const double coeff_trace = 0.5 * (lambda - p_q * jac);
            const double coeff_cdc = mu - 0.5 * lambda * log_i3 + p_q * jac;
            for (int j = 0; j < NV; ++j) {
                for (int n = 0; n < D; ++n) {
                    Mat delta_f = Mat::Zero();
                    delta_f.row(n) = gp1.row(j);
                    const Mat delta_c =
                        delta_f.transpose() * deform + deform.transpose() * delta_f;
                    const double trace_term = (cinv * delta_c).trace();
                    const Mat cdc = cinv * delta_c * cinv;
                    const Mat ds = coeff_trace * trace_term * cinv + coeff_cdc * cdc;
                    const Mat dfs = delta_f * stress + deform * ds;
                    for (int i = 0; i < NV; ++i) {
                        const Eigen::Matrix<double, D, 1> ki = dfs * gp1.row(i).transpose();
                        for (int m = 0; m < D; ++m)
                            out.ke(i * D + m, j * D + n) += wq * ki[m];
                    }
                }
            }
        }
    }
}

/// Spring traction on Outer facets in spring contact mode.
template <int D, bool WithJacobian>
void boundary_kernel(const PoroProblem& pb, const State& state,
                     std::vector<Eigen::Triplet<double>>* triplets,
                     Eigen::VectorXd& residual) {
    const msh::Mesh& mesh = *pb.mesh;
    constexpr int NF = D;  // facet vertex count: 2 in 2D, 3 in 3D
    const QuadratureRule& rule = facet_rule(D);
    const double beta_floor = pb.spring_floor_fraction * pb.spring.max_stiffness;

    for (const auto& facet : mesh.boundary) {
        if (facet.kind != msh::BoundaryKind::Outer) continue;

        double fmeasure = 0.0;
        if constexpr (D == 2) {
            fmeasure =
                (mesh.vertices[facet.vertices[1]] - mesh.vertices[facet.vertices[0]]).norm();
        } else {
            const Vec3 e1 = mesh.vertices[facet.vertices[1]] - mesh.vertices[facet.vertices[0]];
            const Vec3 e2 = mesh.vertices[facet.vertices[2]] - mesh.vertices[facet.vertices[0]];
            fmeasure = 0.5 * e1.cross(e2).norm();
        }

        Eigen::Matrix<double, NF, D> uf;
        for (int i = 0; i < NF; ++i)
            for (int d = 0; d < D; ++d)
                uf(i, d) = state.displacement[facet.vertices[i] * D + d];

        for (int q = 0; q < rule.size(); ++q) {
            const double wq = rule.weights[q] * fmeasure;
            Eigen::Matrix<double, NF, 1> vals;
            for (int i = 0; i < NF; ++i) vals[i] = rule.points[q][i];

            const Eigen::Matrix<double, D, 1> uq = uf.transpose() * vals;
            const double umag = uq.norm();
            const double beta = spring_stiffness(umag, pb.spring) + beta_floor;

            for (int i = 0; i < NF; ++i)
                for (int m = 0; m < D; ++m)
                    residual[facet.vertices[i] * D + m] += wq * vals[i] * beta * uq[m];

            if constexpr (WithJacobian) {
                Eigen::Matrix<double, D, D> dt = beta * Eigen::Matrix<double, D, D>::Identity();
                if (umag > 0.0) {
                    const Eigen::Matrix<double, D, 1> dir = uq / umag;
                    dt += spring_stiffness_derivative(umag, pb.spring) * umag *
                          (dir * dir.transpose());
                }
                for (int i = 0; i < NF; ++i)
                    for (int j = 0; j < NF; ++j)
                        for (int m = 0; m < D; ++m)
                            for (int n = 0; n < D; ++n)
                                triplets->emplace_back(facet.vertices[i] * D + m,
                                                       facet.vertices[j] * D + n,
                                                       wq * vals[i] * vals[j] * dt(m, n));
            }
        }
    }
}

template <int D>
Eigen::VectorXd residual_impl(const PoroProblem& pb, const State& state) {
    Eigen::VectorXd residual = Eigen::VectorXd::Zero(pb.n_dofs());
    ElementResult<D> work;
    for (int c = 0; c < pb.mesh->cell_count(); ++c) {
        element_kernel<D, false>(pb, state, c, work);
        for (int k = 0; k < ElementResult<D>::NT; ++k) residual[work.dofs[k]] += work.re[k];
    }
    if (pb.contact == ContactMode::Spring)
        boundary_kernel<D, false>(pb, state, nullptr, residual);
    return residual;
}

template <int D>
void system_impl(const PoroProblem& pb, const State& state,
                 Eigen::SparseMatrix<double>& jacobian, Eigen::VectorXd& residual,
                 int threads) {
    constexpr int NT = ElementResult<D>::NT;
    const int n_cells = pb.mesh->cell_count();
    const int chunk_size = 512;
    const int n_chunks = (n_cells + chunk_size - 1) / chunk_size;

    struct ChunkOut {
        std::vector<Eigen::Triplet<double>> triplets;
        std::vector<std::pair<int, double>> res;
        std::exception_ptr error;
    };
    std::vector<ChunkOut> chunks(std::max(n_chunks, 1));

    auto run_chunk = [&](int chunk) {
        ChunkOut& out = chunks[chunk];
        try {
            ElementResult<D> work;
            const int begin = chunk * chunk_size;
            const int end = std::min(begin + chunk_size, n_cells);
            out.triplets.reserve(static_cast<std::size_t>(end - begin) * NT * NT);
            for (int c = begin; c < end; ++c) {
                element_kernel<D, true>(pb, state, c, work);
                for (int k = 0; k < NT; ++k) {
                    out.res.emplace_back(work.dofs[k], work.re[k]);
                    for (int l = 0; l < NT; ++l)
                        out.triplets.emplace_back(work.dofs[k], work.dofs[l], work.ke(k, l));
                }
            }
        } catch (...) {
            out.error = std::current_exception();
        }
    };

    if (threads <= 1 || n_chunks <= 1) {
        for (int chunk = 0; chunk < n_chunks; ++chunk) run_chunk(chunk);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        const int n_workers = std::min(threads, n_chunks);
        pool.reserve(n_workers);
        for (int t = 0; t < n_workers; ++t)
            pool.emplace_back([&] {
                for (int chunk = next.fetch_add(1); chunk < n_chunks;
                     chunk = next.fetch_add(1))
                    run_chunk(chunk);
            });
        for (auto& worker : pool) worker.join();
    }
    for (const auto& chunk : chunks)
        if (chunk.error) std::rethrow_exception(chunk.error);

    residual = Eigen::VectorXd::Zero(pb.n_dofs());
    std::vector<Eigen::Triplet<double>> triplets;
    std::size_t total = 0;
    for (const auto& chunk : chunks) total += chunk.triplets.size();
    triplets.reserve(total + 1024);
    for (const auto& chunk : chunks) {
        triplets.insert(triplets.end(), chunk.triplets.begin(), chunk.triplets.end());
        for (const auto& [dof, value] : chunk.res) residual[dof] += value;
    }

    if (pb.contact == ContactMode::Spring)
        boundary_kernel<D, true>(pb, state, &triplets, residual);

    jacobian.resize(pb.n_dofs(), pb.n_dofs());
    jacobian.setFromTriplets(triplets.begin(), triplets.end());
}

}  // namespace

Eigen::VectorXd assemble_residual(const PoroProblem& problem, const State& state) {
    return problem.mesh->dim == 2 ? residual_impl<2>(problem, state)
                                  : residual_impl<3>(problem, state);
}

void assemble_system(const PoroProblem& problem, const State& state,
                     Eigen::SparseMatrix<double>& jacobian, Eigen::VectorXd& residual,
                     int threads) {
    if (problem.mesh->dim == 2)
        system_impl<2>(problem, state, jacobian, residual, threads);
    else
        system_impl<3>(problem, state, jacobian, residual, threads);
}

Eigen::SparseMatrix<double> assemble_jacobian(const PoroProblem& problem, const State& state) {
    Eigen::SparseMatrix<double> jacobian;
    Eigen::VectorXd residual;
    assemble_system(problem, state, jacobian, residual, 1);
    return jacobian;
}

double min_det_f(const PoroProblem& problem, const State& state) {
    const msh::Mesh& mesh = *problem.mesh;
    const int dim = mesh.dim;
    double worst = std::numeric_limits<double>::max();

    auto cell_det = [&](auto dtag, int c) {
        constexpr int D = decltype(dtag)::value;
        using Mat = Eigen::Matrix<double, D, D>;
        const int* verts = mesh.cell(c);
        Mat jgeo;
        const Vec3& x0 = mesh.vertices[verts[0]];
        for (int i = 0; i < D; ++i)
            for (int d = 0; d < D; ++d) jgeo(d, i) = mesh.vertices[verts[i + 1]][d] - x0[d];
        const Eigen::Matrix<double, D + 1, D> gp1 =
            P1Basis<D>::gradients({}) * jgeo.inverse();
        Eigen::Matrix<double, D + 1, D> ue;
        for (int i = 0; i <= D; ++i)
            for (int d = 0; d < D; ++d) ue(i, d) = state.displacement[verts[i] * D + d];
        const Mat f = Mat::Identity() + ue.transpose() * gp1;
        return f.determinant();
    };

    for (int c = 0; c < mesh.cell_count(); ++c) {
        const double det = dim == 2 ? cell_det(std::integral_constant<int, 2>{}, c)
                                    : cell_det(std::integral_constant<int, 3>{}, c);
        worst = std::min(worst, det);
    }
    return worst;
}

double integrate(const msh::Mesh& mesh, const std::function<double(const Vec3&)>& f) {
    const QuadratureRule& rule = simplex_rule(mesh.dim);
    double sum = 0.0;
    for (int c = 0; c < mesh.cell_count(); ++c) {
        const double measure = mesh.cell_measure(c);
        const int* verts = mesh.cell(c);
        for (int q = 0; q < rule.size(); ++q) {
            Vec3 xq = Vec3::Zero();
            for (int i = 0; i <= mesh.dim; ++i)
                xq += rule.points[q][i] * mesh.vertices[verts[i]];
            sum += rule.weights[q] * measure * f(xq);
        }
    }
    return sum;
}

}  // namespace perfusim::fem
