#pragma once

#include <json.hpp>

#include "tikhonov/core.hpp"
#include "tikhonov/dichotomy.hpp"

namespace tikhonov::cli {

/// Fast-slow system whose f and g components are sums of monomials
/// coef * prod u_i^a_i * prod v_j^b_j * t^k * eps^l; see
/// docs/config_schema.md. Jacobians are exact.
FastSlowSystem user_system(const nlohmann::json& spec);

/// Default initial state (u, v) stored with a user system, if any.
Vector user_default_init(const nlohmann::json& spec);

/// Matrix function from a JSON array of rows; each entry is a number or an
/// object summing "const", "poly" (coefficients in t, ascending) and "sin"
/// / "cos" terms {"amp", "freq", "phase"}.
MatrixFunction matrix_function(const nlohmann::json& spec);

}  // namespace tikhonov::cli
