#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace driftlab {

// Minimal "key = value" config text: one entry per line, '#' starts a
// comment, keys may repeat. Used for plans, scenarios and external model specs.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, std::string_view source_name = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  // Last value for key, if any.
  std::optional<std::string> get(std::string_view key) const;
  std::vector<std::string> get_all(std::string_view key) const;

  // Throws ValidationError naming any key not in `known` (prefix match when a
  // known entry ends in '*').
  void reject_unknown(const std::vector<std::string_view>& known) const;

  const std::string& source() const { return source_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::string source_;
};

long long parse_integer(std::string_view text, std::string_view what);
unsigned long long parse_unsigned(std::string_view text, std::string_view what);
double parse_real(std::string_view text, std::string_view what);
bool parse_bool(std::string_view text, std::string_view what);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace driftlab
