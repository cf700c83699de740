#ifndef PERFUSIM_MESH_GENERATORS_HPP
#define PERFUSIM_MESH_GENERATORS_HPP

#include "perfusim/mesh.hpp"

namespace perfusim::msh {

/// Structured polar triangulation of a disk centered at the origin.
/// Rings at radius k*R/M carry 6k vertices, giving 6*M^2 triangles with
/// M = round(R/h). The outer ring lies exactly on the circle; all boundary
/// edges are tagged Outer.
Mesh gen_disk_mesh(double radius, double target_h);

/// Tetrahedral mesh of a ball centered at the origin, built by mapping a
/// Freudenthal-subdivided cube onto the ball along rays from the center.
/// Boundary triangles lie on the sphere and are tagged Outer.
Mesh gen_ball_mesh(double radius, double target_h);

/// Structured right-triangle mesh of [0,1]^2 with n x n quads split into two
/// triangles each. Used by manufactured-solution studies.
Mesh gen_unit_square_mesh(int n);

/// Structured Freudenthal mesh of [0,1]^3 with n^3 cubes, 6 tets each.
Mesh gen_unit_cube_mesh(int n);

}  // namespace perfusim::msh

#endif
