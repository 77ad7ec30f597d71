#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace rxn {

struct KeySpec {
  enum class Kind { String, Path, PathList, Int, Real, Bool, Choice, List };

  std::string name;
  Kind kind = Kind::String;
  std::string default_value;
  double lo = -1e300, hi = 1e300;
  bool lo_open = false, hi_open = false;
  std::vector<std::string> choices;
  std::string help;
};

const std::vector<KeySpec>& config_keys();
const KeySpec& config_key(std::string_view name);  // throws UnknownConfigKey

// Flat `key = value` configuration with `#` comments. Every key has a
// registered type and default; unknown keys are rejected.
class Config {
 public:
  Config();

  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  void set(std::string_view key, std::string_view value);

  bool is_set(std::string_view key) const;  // non-empty effective value
  const std::string& str(std::string_view key) const;
  long long integer(std::string_view key) const;
  std::uint64_t seed() const;
  double real(std::string_view key) const;
  bool flag(std::string_view key) const;
  std::vector<std::string> list(std::string_view key) const;
  // Throws MissingConfigKey when empty.
  std::filesystem::path path(std::string_view key) const;
  std::vector<std::filesystem::path> paths(std::string_view key) const;

  // Every key with its effective value, sorted, one `key = value` per line.
  std::string canonical() const;
  std::uint64_t hash() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace rxn
