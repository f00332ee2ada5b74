#pragma once

#include <stdexcept>
#include <string>

namespace subalg {

// Failure categories used across the library. The CLI maps these to exit
// codes, so the set is part of the public contract.
enum class errc {
  singular,
  singular_on_subspace,
  not_direct_sum,
  singular_l,
  singular_on_j,
  singular_resolvent,
  singular_coupling,
  singular_fej,
  divergent,
  dimension_mismatch,
  singular_map,
  port_mismatch,
  coupling_singular,
  degenerate_ports,
  no_inverse,
  slot_out_of_range,
  plug_not_scalar,
  not_subspace_of_u,
  singular_t,
  condition_violated,
  singular_g,
  assumption_violated,
  syntax_error,
  not_homogenizable,
  not_normalizable,
  pole_hit,
  realization_failed,
  not_pruned,
  u_not_scalar,
  degree_mismatch,
  not_expressible,
  dimension_constraint_violated,
  zero_component,
  not_scalar_u,
  not_three_phase,
  invalid_argument,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::singular: return "Singular";
    case errc::singular_on_subspace: return "SingularOnSubspace";
    case errc::not_direct_sum: return "NotDirectSum";
    case errc::singular_l: return "SingularL";
    case errc::singular_on_j: return "SingularOnJ";
    case errc::singular_resolvent: return "SingularResolvent";
    case errc::singular_coupling: return "SingularCoupling";
    case errc::singular_fej: return "SingularFEJ";
    case errc::divergent: return "Divergent";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::singular_map: return "SingularMap";
    case errc::port_mismatch: return "PortMismatch";
    case errc::coupling_singular: return "CouplingSingular";
    case errc::degenerate_ports: return "DegeneratePorts";
    case errc::no_inverse: return "NoInverse";
    case errc::slot_out_of_range: return "SlotOutOfRange";
    case errc::plug_not_scalar: return "PlugNotScalar";
    case errc::not_subspace_of_u: return "NotSubspaceOfU";
    case errc::singular_t: return "SingularT";
    case errc::condition_violated: return "ConditionViolated";
    case errc::singular_g: return "SingularG";
    case errc::assumption_violated: return "AssumptionViolated";
    case errc::syntax_error: return "SyntaxError";
    case errc::not_homogenizable: return "NotHomogenizable";
    case errc::not_normalizable: return "NotNormalizable";
    case errc::pole_hit: return "PoleHit";
    case errc::realization_failed: return "RealizationFailed";
    case errc::not_pruned: return "NotPruned";
    case errc::u_not_scalar: return "UNotScalar";
    case errc::degree_mismatch: return "DegreeMismatch";
    case errc::not_expressible: return "NotExpressible";
    case errc::dimension_constraint_violated: return "DimensionConstraintViolated";
    case errc::zero_component: return "ZeroComponent";
    case errc::not_scalar_u: return "NotScalarU";
    case errc::not_three_phase: return "NotThreePhase";
    case errc::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const { return code_; }

 private:
  errc code_;
};

// Syntax errors carry the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& what)
      : Error(errc::syntax_error, what + " (at offset " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

}  // namespace subalg
