#include "perfusim/fem/material.hpp"

#include <cmath>

namespace perfusim::fem {

double spring_stiffness(double u_magnitude, const SpringBC& bc) {
    if (u_magnitude < 0.0) throw DomainError("spring_stiffness: magnitude must be >= 0");
    const double e = std::exp(-bc.steepness * u_magnitude);
    return 2.0 * bc.max_stiffness / (1.0 + e) - bc.max_stiffness;
}

double spring_stiffness_derivative(double u_magnitude, const SpringBC& bc) {
    const double e = std::exp(-bc.steepness * u_magnitude);
    const double denom = (1.0 + e) * (1.0 + e);
    return 2.0 * bc.max_stiffness * bc.steepness * e / denom;
}

double porosity_from_pressure(double p, double jacobian, const Material& material) {
    const double kappa = material.bulk_modulus();
    const double denom = p / kappa + 1.0 / (1.0 - material.reference_porosity);
    if (denom <= 0.0)
        throw StateError("porosity_from_pressure: pressure below -kappa/(1-phi_0)");
    if (jacobian <= 0.0) throw StateError("porosity_from_pressure: J must be positive");
    const double js = 1.0 / denom;
    return 1.0 - js / jacobian;
}

}  // namespace perfusim::fem
