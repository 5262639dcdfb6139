#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hwy/dqn.hpp"
#include "hwy/highway_env.hpp"

namespace hwy {

/// Everything a training run needs, in one file.
struct RunConfig {
  HighwayConfig env;
  TrainConfig train;

  void validate() const;
};

/// Raised for unknown keys, unparsable values and values that fail
/// validation. key() names the offending entry when there is one.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Flat "key = value" text. Blank lines and '#' comments are ignored; keys
/// not mentioned keep their defaults. Nested parameter bundles use dotted
/// keys (idm.a_max, mobil.b_safe, ...), speed ranges take "min,max" and
/// train.hidden takes a comma-separated width list.
RunConfig parse_config(std::istream& in);
RunConfig load_config_file(const std::string& path);

/// Writes every key with its current value; parse_config reads it back
/// to an identical configuration.
void write_config(std::ostream& out, const RunConfig& config);

/// All recognised keys, in file order.
std::vector<std::string> config_keys();

}  // namespace hwy
