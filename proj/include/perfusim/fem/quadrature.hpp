#ifndef PERFUSIM_FEM_QUADRATURE_HPP
#define PERFUSIM_FEM_QUADRATURE_HPP

#include <vector>

#include "perfusim/geometry.hpp"

namespace perfusim::fem {

/// Quadrature rule on the reference simplex. Points are barycentric
/// coordinates (lambda_0 .. lambda_dim); weights sum to one, so
///   integral over cell ~= measure(cell) * sum_q w_q f(x_q).
struct QuadratureRule {
    std::vector<std::array<double, 4>> points;  // first dim+1 entries used
    std::vector<double> weights;
    int size() const { return static_cast<int>(weights.size()); }
};

/// Degree-5 rules: 7 points on the triangle, 14 on the tetrahedron.
const QuadratureRule& simplex_rule(int dim);

/// Degree-5 Gauss rule on the unit interval (3 points), expressed in
/// barycentric coordinates of the edge.
const QuadratureRule& edge_rule();

/// Rule for boundary facets: edge_rule in 2D, triangle rule in 3D.
const QuadratureRule& facet_rule(int mesh_dim);

}  // namespace perfusim::fem

#endif
