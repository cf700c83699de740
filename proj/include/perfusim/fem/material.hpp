#ifndef PERFUSIM_FEM_MATERIAL_HPP
#define PERFUSIM_FEM_MATERIAL_HPP

#include <Eigen/Dense>

#include "perfusim/errors.hpp"

namespace perfusim::fem {

/// Skeleton and pore-fluid constitutive parameters. Lame/bulk moduli and the
/// Darcy mobility are derived from the primary inputs.
struct Material {
    double youngs_modulus = 1.0;   ///< E [Pa]
    double poisson_ratio = 0.3;    ///< nu
    double reference_porosity = 0.5;  ///< phi_0
    double permeability = 3.6e-3;  ///< k [m^2]
    double fluid_viscosity = 3.6e-3;  ///< eta [Pa s]

    double lambda() const {
        return youngs_modulus * poisson_ratio /
               ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
    }
    double mu() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }
    double bulk_modulus() const { return youngs_modulus / (3.0 * (1.0 - 2.0 * poisson_ratio)); }
    double mobility() const { return permeability / fluid_viscosity; }

    void validate() const {
        if (youngs_modulus <= 0.0) throw DomainError("material: E must be positive");
        if (poisson_ratio <= 0.0 || poisson_ratio >= 0.5)
            throw DomainError("material: nu must lie in (0, 0.5)");
        if (reference_porosity <= 0.0 || reference_porosity >= 1.0)
            throw DomainError("material: phi_0 must lie in (0, 1)");
        if (permeability <= 0.0) throw DomainError("material: permeability must be positive");
        if (fluid_viscosity <= 0.0) throw DomainError("material: viscosity must be positive");
    }
};

/// Saturating boundary-spring law for the surrounding-tissue contact.
struct SpringBC {
    double max_stiffness = 0.0;  ///< alpha [Pa/m]
    double steepness = 15.0;     ///< c [1/m]
};

/// beta(|u|) = 2 alpha / (1 + exp(-c |u|)) - alpha. Zero at rest,
/// monotone, saturates at alpha.
double spring_stiffness(double u_magnitude, const SpringBC& bc);
/// d beta / d|u|.
double spring_stiffness_derivative(double u_magnitude, const SpringBC& bc);

/// Skeleton free energy (per reference volume) of compressible Neo-Hookean
/// type in the invariants of C:  1/8 lambda ln^2(I3) + 1/2 mu (I1 - d - ln I3)
/// with d = trace dimension; in 2D this is the plane-strain restriction.
template <int Dim>
double neo_hookean_energy(const Eigen::Matrix<double, Dim, Dim>& C, double lambda, double mu) {
    const double i3 = C.determinant();
    if (i3 <= 0.0) throw StateError("neo_hookean_energy: det C must be positive");
    const double li3 = std::log(i3);
    return 0.125 * lambda * li3 * li3 + 0.5 * mu * (C.trace() - Dim - li3);
}

/// Second Piola-Kirchhoff stress of the skeleton:
///   S = 1/2 lambda ln(I3) C^-1 + mu (I - C^-1).
template <int Dim>
Eigen::Matrix<double, Dim, Dim> neo_hookean_pk2(const Eigen::Matrix<double, Dim, Dim>& C,
                                                double lambda, double mu) {
    const double i3 = C.determinant();
    if (i3 <= 0.0) throw StateError("neo_hookean_pk2: det C must be positive");
    const Eigen::Matrix<double, Dim, Dim> cinv = C.inverse();
    return 0.5 * lambda * std::log(i3) * cinv +
           mu * (Eigen::Matrix<double, Dim, Dim>::Identity() - cinv);
}

/// Total stress including the pore-pressure contribution: S_skel - p J C^-1.
template <int Dim>
Eigen::Matrix<double, Dim, Dim> total_pk2(const Eigen::Matrix<double, Dim, Dim>& C, double p,
                                          double lambda, double mu) {
    const double i3 = C.determinant();
    if (i3 <= 0.0) throw StateError("total_pk2: det C must be positive");
    const double jac = std::sqrt(i3);
    return neo_hookean_pk2<Dim>(C, lambda, mu) - p * jac * C.inverse();
}

/// Invert the pressure-porosity relation p = kappa (-1/(1-phi_0) + 1/J^s):
/// J^s = 1 / (p/kappa + 1/(1-phi_0)), phi = 1 - J^s / J.
double porosity_from_pressure(double p, double jacobian, const Material& material);

}  // namespace perfusim::fem

#endif
