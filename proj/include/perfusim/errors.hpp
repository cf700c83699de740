#ifndef PERFUSIM_ERRORS_HPP
#define PERFUSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace perfusim {

/// Invalid physical input (non-positive length, negative flow, ...).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Broken graph/mesh structure (cycle, disconnected node, bad index).
struct StructureError : std::runtime_error {
    explicit StructureError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operation called before required state exists (flows not propagated, ...).
struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Linear or nonlinear solver failure.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file; carries a line number when known.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg, long line = -1)
        : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_number(line) {}
    long line_number;
};

/// Invalid or inconsistent scenario configuration.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Resection produced an unusable setup (empty mesh, root cut, no outlet).
struct ResectionError : std::runtime_error {
    explicit ResectionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Conflicting Dirichlet constraints on the same dof.
struct ConstraintError : std::runtime_error {
    explicit ConstraintError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace perfusim

#endif
