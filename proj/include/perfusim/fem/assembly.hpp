#ifndef PERFUSIM_FEM_ASSEMBLY_HPP
#define PERFUSIM_FEM_ASSEMBLY_HPP

#include <Eigen/Sparse>

#include "perfusim/fem/problem.hpp"

namespace perfusim::fem {

/// Galerkin residual of the coupled weak form (no Dirichlet elimination):
///   momentum block:  int (F S) : grad0(v) dOmega0  [+ spring term on Outer]
///   pressure block:  int K (F^-T grad0 p) . (F^-T grad0 q) dOmega0 - int theta q
/// Throws StateError (with the element id) if det F <= 0 anywhere.
Eigen::VectorXd assemble_residual(const PoroProblem& problem, const State& state);

/// Residual and its consistent tangent in one pass. `threads` > 1 assembles
/// cell chunks concurrently; chunking is independent of the thread count, so
/// the accumulation order and the result are reproducible.
void assemble_system(const PoroProblem& problem, const State& state,
                     Eigen::SparseMatrix<double>& jacobian, Eigen::VectorXd& residual,
                     int threads = 1);

Eigen::SparseMatrix<double> assemble_jacobian(const PoroProblem& problem, const State& state);

/// Smallest det F over all cells (P1 displacement makes F constant per cell).
double min_det_f(const PoroProblem& problem, const State& state);

/// Cell-quadrature integral of a scalar field over the reference mesh.
double integrate(const msh::Mesh& mesh, const std::function<double(const Vec3&)>& f);

}  // namespace perfusim::fem

#endif
