#ifndef PERFUSIM_FEM_FIELDS_HPP
#define PERFUSIM_FEM_FIELDS_HPP

#include <functional>
#include <vector>

#include "perfusim/fem/problem.hpp"

namespace perfusim::fem {

/// Darcy velocity w = -K F^-T grad0(p) averaged over the quadrature points
/// of each cell (spatial gradient via pull-back).
std::vector<Vec3> darcy_velocity(const PoroProblem& problem, const State& state);

/// det F per cell (constant for P1 displacement).
std::vector<double> cell_jacobians(const PoroProblem& problem, const State& state);

/// Porosity phi = 1 - J^s / J at mesh vertices; J is volume-averaged over the
/// cells sharing the vertex, p is the nodal pressure.
std::vector<double> porosity_at_vertices(const PoroProblem& problem, const State& state);

/// L2 norm of the P2 pressure error against an exact field (cell quadrature).
double pressure_l2_error(const PoroProblem& problem, const State& state,
                         const std::function<double(const Vec3&)>& exact);
double pressure_l2_norm(const PoroProblem& problem, const State& state);

/// L2 norms of P1 vector fields over a mesh.
double displacement_l2_norm(const msh::Mesh& mesh, const Eigen::VectorXd& u);
double displacement_l2_diff(const msh::Mesh& mesh, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b);
double displacement_l2_error(const msh::Mesh& mesh, const Eigen::VectorXd& u,
                             const std::function<Vec3(const Vec3&)>& exact);

/// Net flux integral of w . n over Outer-tagged boundary facets (outward
/// normal); near zero for an impermeable outer boundary.
double outer_boundary_flux(const PoroProblem& problem, const State& state);

}  // namespace perfusim::fem

#endif
