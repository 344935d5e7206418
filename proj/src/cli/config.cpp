#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace exgcp::cli {

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
}

Json config_from_file(const std::filesystem::path& path) {
  Json j = load_json_file(path);
  if (!j.is_object()) throw ValidationError("config " + path.string() + " must be a JSON object");
  if (j.contains("config") && j["config"].is_object()) return j["config"];
  return j;
}

Json merge(Json base, const Json& overrides) {
  if (base.is_null()) base = Json::object();
  for (const auto& [k, v] : overrides.items()) base[k] = v;
  return base;
}

const Json& ConfigReader::require(const std::string& key) const {
  if (!has(key)) throw ValidationError("missing required setting '" + key + "'");
  return cfg_[key];
}

double ConfigReader::number(const std::string& key, std::optional<double> fallback) {
  double v = 0.0;
  if (!has(key) && fallback) {
    v = *fallback;
  } else {
    const Json& j = require(key);
    if (!j.is_number()) throw ValidationError("setting '" + key + "' must be a number");
    v = j.get<double>();
  }
  if (!std::isfinite(v)) throw ValidationError("setting '" + key + "' must be finite");
  effective_[key] = v;
  return v;
}

std::size_t ConfigReader::count(const std::string& key, std::optional<std::size_t> fallback) {
  std::size_t v = 0;
  if (!has(key) && fallback) {
    v = *fallback;
  } else {
    const Json& j = require(key);
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0)
      throw ValidationError("setting '" + key + "' must be a non-negative integer");
    v = j.get<std::size_t>();
  }
  effective_[key] = v;
  return v;
}

std::uint64_t ConfigReader::seed(const std::string& key) {
  if (!has(key)) throw ValidationError("a seed is required ('" + key + "')");
  const Json& j = cfg_[key];
  if (!j.is_number_integer() || (!j.is_number_unsigned() && j.get<std::int64_t>() < 0))
    throw ValidationError("seed must be a non-negative integer");
  const auto v = j.get<std::uint64_t>();
  effective_[key] = v;
  return v;
}

bool ConfigReader::flag(const std::string& key, bool fallback) {
  bool v = fallback;
  if (has(key)) {
    if (!cfg_[key].is_boolean()) throw ValidationError("setting '" + key + "' must be true/false");
    v = cfg_[key].get<bool>();
  }
  effective_[key] = v;
  return v;
}

std::string ConfigReader::text(const std::string& key, std::optional<std::string> fallback) {
  std::string v;
  if (!has(key) && fallback) {
    v = *fallback;
  } else {
    const Json& j = require(key);
    if (!j.is_string()) throw ValidationError("setting '" + key + "' must be a string");
    v = j.get<std::string>();
  }
  effective_[key] = v;
  return v;
}

std::vector<double> ConfigReader::numbers(const std::string& key,
                                          std::optional<std::vector<double>> fallback) {
  std::vector<double> v;
  if (!has(key) && fallback) {
    v = *fallback;
  } else {
    const Json& j = require(key);
    if (j.is_number()) {
      v.push_back(j.get<double>());
    } else if (j.is_array()) {
      for (const auto& e : j) {
        if (!e.is_number()) throw ValidationError("setting '" + key + "' must hold numbers");
        v.push_back(e.get<double>());
      }
    } else {
      throw ValidationError("setting '" + key + "' must be a number or an array of numbers");
    }
  }
  effective_[key] = v;
  return v;
}

Domain ConfigReader::domain(const std::string& key) {
  const auto v = numbers(key);
  if (v.size() != 4) throw ValidationError("domain needs four values: x_min,x_max,y_min,y_max");
  return Domain(v[0], v[1], v[2], v[3]);
}

}  // namespace exgcp::cli
