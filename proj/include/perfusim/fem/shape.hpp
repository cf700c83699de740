#ifndef PERFUSIM_FEM_SHAPE_HPP
#define PERFUSIM_FEM_SHAPE_HPP

#include <Eigen/Dense>
#include <array>

namespace perfusim::fem {

/// Lagrange basis on the reference simplex in barycentric coordinates.
/// P1 nodes: the dim+1 vertices. P2 nodes: vertices then edge midpoints in
/// the order of msh::triangle_edges() / msh::tet_edges().
///
/// Gradients are taken with respect to the reference coordinates
/// xi_1..xi_dim where lambda_0 = 1 - sum(xi), lambda_i = xi_i.

template <int Dim>
struct P1Basis {
    static constexpr int n_nodes = Dim + 1;

    static Eigen::Matrix<double, n_nodes, 1> values(const std::array<double, 4>& bary) {
        Eigen::Matrix<double, n_nodes, 1> v;
        for (int i = 0; i < n_nodes; ++i) v[i] = bary[i];
        return v;
    }

    static Eigen::Matrix<double, n_nodes, Dim> gradients(const std::array<double, 4>&) {
        Eigen::Matrix<double, n_nodes, Dim> g;
        for (int d = 0; d < Dim; ++d) g(0, d) = -1.0;
        for (int i = 1; i < n_nodes; ++i)
            for (int d = 0; d < Dim; ++d) g(i, d) = (i - 1 == d) ? 1.0 : 0.0;
        return g;
    }
};

template <int Dim>
struct P2Basis {
    static constexpr int n_nodes = Dim == 2 ? 6 : 10;
    static constexpr int n_edges = Dim == 2 ? 3 : 6;

    static const std::array<std::array<int, 2>, n_edges>& edges();

    static Eigen::Matrix<double, n_nodes, 1> values(const std::array<double, 4>& bary) {
        Eigen::Matrix<double, n_nodes, 1> v;
        for (int i = 0; i <= Dim; ++i) v[i] = bary[i] * (2.0 * bary[i] - 1.0);
        for (int e = 0; e < n_edges; ++e)
            v[Dim + 1 + e] = 4.0 * bary[edges()[e][0]] * bary[edges()[e][1]];
        return v;
    }

    static Eigen::Matrix<double, n_nodes, Dim> gradients(const std::array<double, 4>& bary) {
        // d(lambda_0)/d(xi_d) = -1, d(lambda_i)/d(xi_d) = delta_{i-1,d}
        Eigen::Matrix<double, Dim + 1, Dim> dl;
        for (int d = 0; d < Dim; ++d) dl(0, d) = -1.0;
        for (int i = 1; i <= Dim; ++i)
            for (int d = 0; d < Dim; ++d) dl(i, d) = (i - 1 == d) ? 1.0 : 0.0;

        Eigen::Matrix<double, n_nodes, Dim> g;
        for (int i = 0; i <= Dim; ++i)
            g.row(i) = (4.0 * bary[i] - 1.0) * dl.row(i);
        for (int e = 0; e < n_edges; ++e) {
            const int a = edges()[e][0], b = edges()[e][1];
            g.row(Dim + 1 + e) = 4.0 * (bary[a] * dl.row(b) + bary[b] * dl.row(a));
        }
        return g;
    }
};

template <>
inline const std::array<std::array<int, 2>, 3>& P2Basis<2>::edges() {
    static const std::array<std::array<int, 2>, 3> e{{{1, 2}, {2, 0}, {0, 1}}};
    return e;
}

template <>
inline const std::array<std::array<int, 2>, 6>& P2Basis<3>::edges() {
    static const std::array<std::array<int, 2>, 6> e{
        {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
    return e;
}

}  // namespace perfusim::fem

#endif
