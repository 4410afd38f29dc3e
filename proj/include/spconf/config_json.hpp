#ifndef SPCONF_CONFIG_JSON_HPP
#define SPCONF_CONFIG_JSON_HPP

// JSON form of ScenarioConfig. Keys mirror the struct's field names; a
// spectral field is {"k_min","k_max","decay","variance"} and an iid one is
// {"iid": true, "sd": ...}.

#include <cstdint>
#include <cstdio>
#include <string>

#include "dgp.hpp"
#include "json.hpp"

namespace spconf {

using Json = nlohmann::json;

/// Malformed configuration document; `field` names the offending key.
class ConfigError : public InvalidArgument {
public:
  ConfigError(const std::string& field, const std::string& msg)
      : InvalidArgument("config field '" + field + "': " + msg), field_(field) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

inline Json to_json(const SpectralSpec& s) {
  return Json{{"k_min", s.k_min}, {"k_max", s.k_max}, {"decay", s.decay}, {"variance", s.variance}};
}

inline Json to_json(const FieldSpec& s) {
  if (const auto* sp = std::get_if<SpectralSpec>(&s)) return to_json(*sp);
  return Json{{"iid", true}, {"sd", std::get<IidSpec>(s).sd}};
}

inline Json to_json(const ScenarioConfig& c) {
  return Json{{"beta", c.beta},       {"loadings", c.loadings},      {"nu_sd", c.nu_sd},
              {"sigma", c.sigma},     {"spec_S1", to_json(c.spec_S1)}, {"spec_S2", to_json(c.spec_S2)},
              {"spec_C", to_json(c.spec_C)}, {"e_sd", c.e_sd},        {"u_sd", c.u_sd},
              {"m", c.m}};
}

namespace detail {

inline const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(path + key, "missing");
  return j.at(key);
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline int integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

template <std::size_t N>
std::array<double, N> number_array(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != N)
    throw ConfigError(path, "expected an array of " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = number(j[i], path + "[" + std::to_string(i) + "]");
  return out;
}

inline SpectralSpec spectral_from_json(const Json& j, const std::string& path) {
  SpectralSpec s;
  s.k_min = integer(require(j, "k_min", path + "."), path + ".k_min");
  s.k_max = integer(require(j, "k_max", path + "."), path + ".k_max");
  s.decay = j.contains("decay") ? number(j.at("decay"), path + ".decay") : 0.0;
  s.variance = number(require(j, "variance", path + "."), path + ".variance");
  return s;
}

inline FieldSpec field_spec_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  if (j.value("iid", false)) return IidSpec{number(require(j, "sd", path + "."), path + ".sd")};
  return spectral_from_json(j, path);
}

} // namespace detail

/// Parses and validates; errors name the offending field.
inline ScenarioConfig config_from_json(const Json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  ScenarioConfig c;
  c.beta = number_array<6>(require(j, "beta", ""), "beta");
  c.loadings = number_array<3>(require(j, "loadings", ""), "loadings");
  c.nu_sd = number(require(j, "nu_sd", ""), "nu_sd");
  c.sigma = number(require(j, "sigma", ""), "sigma");
  c.spec_S1 = spectral_from_json(require(j, "spec_S1", ""), "spec_S1");
  c.spec_S2 = spectral_from_json(require(j, "spec_S2", ""), "spec_S2");
  c.spec_C = j.contains("spec_C") ? field_spec_from_json(j.at("spec_C"), "spec_C") : FieldSpec{IidSpec{1.0}};
  c.e_sd = number(require(j, "e_sd", ""), "e_sd");
  c.u_sd = j.contains("u_sd") ? number(j.at("u_sd"), "u_sd") : 0.0;
  c.m = integer(require(j, "m", ""), "m");
  c.validate();
  return c;
}

/// Stable hex digest of the canonical JSON form.
inline std::string config_hash(const ScenarioConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
  return buf;
}

} // namespace spconf

#endif // SPCONF_CONFIG_JSON_HPP
