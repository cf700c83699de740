#ifndef PERFUSIM_MESH_IO_HPP
#define PERFUSIM_MESH_IO_HPP

#include <iosfwd>
#include <string>

#include "perfusim/mesh.hpp"

namespace perfusim::msh {

/// ASCII mesh format:
///   pmesh 1 <dim>
///   <V> <C> <F>
///   V lines: vertex coordinates (dim floats)
///   C lines: cell vertex indices (dim+1 ints, 0-based)
///   F lines: facet vertex indices (dim ints) followed by "outer" or "outflow:<id>"
/// Whitespace separated, LF line endings. Floats are written with enough
/// digits that write/read round-trips bit-exactly.
Mesh read_mesh(std::istream& in);
Mesh read_mesh(const std::string& path);
void write_mesh(const Mesh& mesh, std::ostream& out);
void write_mesh(const Mesh& mesh, const std::string& path);

}  // namespace perfusim::msh

#endif
