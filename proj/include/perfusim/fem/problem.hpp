#ifndef PERFUSIM_FEM_PROBLEM_HPP
#define PERFUSIM_FEM_PROBLEM_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "perfusim/fem/material.hpp"
#include "perfusim/mesh.hpp"

namespace perfusim::fem {

/// Discrete solution: displacement coefficients on linear (vertex) nodes,
/// pressure coefficients on quadratic nodes.
struct State {
    Eigen::VectorXd displacement;
    Eigen::VectorXd pressure;
};

enum class ContactMode { Fixed, Spring };

/// Steady poroelastic boundary-value problem on a reference mesh.
/// Dof layout: displacement dof (vertex, component) -> vertex*dim + component,
/// pressure dof (p2 node) -> dim*V + node.
struct PoroProblem {
    const msh::Mesh* mesh = nullptr;
    const msh::P2Numbering* p2 = nullptr;
    Material material;

    ContactMode contact = ContactMode::Fixed;
    SpringBC spring;
    /// Small Robin stiffness added to beta during assembly. The sigmoid has
    /// zero slope at u = 0, which would leave rigid modes unconstrained in
    /// spring mode; the floor pins them without noticeably changing the
    /// solution. Expressed as a fraction of alpha.
    double spring_floor_fraction = 1e-8;

    /// Volumetric fluid source theta(X) [1/s]; null means zero.
    std::function<double(const Vec3&)> source;

    /// Pressure Dirichlet data: quadratic node ids and values (outlet ports
    /// use zero).
    std::vector<int> pressure_dirichlet_nodes;
    std::vector<double> pressure_dirichlet_values;  // empty => all zero

    /// Extra displacement constraints (dof ids as defined above).
    std::vector<int> displacement_dirichlet_dofs;
    std::vector<double> displacement_dirichlet_values;  // empty => all zero

    /// Constrain every displacement dof to its current value (pressure-only
    /// solves; the Darcy subproblem is then linear).
    bool freeze_displacement = false;

    int n_u_dofs() const { return mesh->dim * static_cast<int>(mesh->vertices.size()); }
    int n_p_dofs() const { return p2->node_count; }
    int n_dofs() const { return n_u_dofs() + n_p_dofs(); }
    int u_dof(int vertex, int component) const { return vertex * mesh->dim + component; }
    int p_dof(int p2_node) const { return n_u_dofs() + p2_node; }

    /// All constrained dofs/values for a given state (freeze_displacement
    /// constrains u to the state's current values).
    void collect_constraints(const State& state, std::vector<int>& dofs,
                             std::vector<double>& values) const;
};

/// Vertex displacement dofs on Outer-tagged boundary facets (all components);
/// the fixed-boundary contact condition constrains these to zero.
std::vector<int> outer_boundary_displacement_dofs(const msh::Mesh& mesh);

}  // namespace perfusim::fem

#endif
