#ifndef SPCONF_SPCONF_HPP
#define SPCONF_SPCONF_HPP

#include "basis.hpp"
#include "config_json.hpp"
#include "dgp.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "grid_fields.hpp"
#include "io.hpp"
#include "mc.hpp"
#include "oracle.hpp"
#include "pls.hpp"
#include "rng.hpp"

namespace spconf {
inline constexpr const char* kVersion = "0.1.0";
}

#endif // SPCONF_SPCONF_HPP
