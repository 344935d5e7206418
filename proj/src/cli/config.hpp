#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "exgcp/errors.hpp"
#include "exgcp/geometry.hpp"

namespace exgcp::cli {

using Json = nlohmann::ordered_json;

Json load_json_file(const std::filesystem::path& path);

/// A config file is either a flat object or a manifest carrying "config".
Json config_from_file(const std::filesystem::path& path);

/// Top-level keys of `overrides` replace those of `base`.
Json merge(Json base, const Json& overrides);

/// Typed access to a flat config object. Every value read, including
/// defaults, is recorded in `effective` so the manifest can replay the run.
class ConfigReader {
 public:
  explicit ConfigReader(const Json& cfg) : cfg_(cfg), effective_(Json::object()) {}

  bool has(const std::string& key) const { return cfg_.contains(key) && !cfg_[key].is_null(); }

  double number(const std::string& key, std::optional<double> fallback = {});
  std::size_t count(const std::string& key, std::optional<std::size_t> fallback = {});
  std::uint64_t seed(const std::string& key = "seed");
  bool flag(const std::string& key, bool fallback);
  std::string text(const std::string& key, std::optional<std::string> fallback = {});
  std::vector<double> numbers(const std::string& key,
                              std::optional<std::vector<double>> fallback = {});
  Domain domain(const std::string& key = "domain");

  const Json& effective() const { return effective_; }

 private:
  const Json& require(const std::string& key) const;

  const Json& cfg_;
  Json effective_;
};

}  // namespace exgcp::cli
