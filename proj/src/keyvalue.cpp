#include "driftlab/keyvalue.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "driftlab/error.hpp"

namespace driftlab {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

KeyValueConfig KeyValueConfig::parse(std::istream& in, std::string_view source_name) {
  KeyValueConfig cfg;
  cfg.source_ = source_name;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError(std::string(source_name) + ":" + std::to_string(line_no) +
                            ": expected 'key = value'");
    }
    const auto key = trim(view.substr(0, eq));
    if (key.empty()) {
      throw ValidationError(std::string(source_name) + ":" + std::to_string(line_no) +
                            ": empty key");
    }
    cfg.entries_.emplace_back(std::string(key), std::string(trim(view.substr(eq + 1))));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  return parse(in, path.string());
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  std::optional<std::string> found;
  for (const auto& [k, v] : entries_) {
    if (k == key) found = v;
  }
  return found;
}

std::vector<std::string> KeyValueConfig::get_all(std::string_view key) const {
  std::vector<std::string> values;
  for (const auto& [k, v] : entries_) {
    if (k == key) values.push_back(v);
  }
  return values;
}

void KeyValueConfig::reject_unknown(const std::vector<std::string_view>& known) const {
  for (const auto& [k, v] : entries_) {
    const bool ok = std::any_of(known.begin(), known.end(), [&](std::string_view pattern) {
      if (!pattern.empty() && pattern.back() == '*') {
        return std::string_view(k).starts_with(pattern.substr(0, pattern.size() - 1));
      }
      return k == pattern;
    });
    if (!ok) throw ValidationError(source_ + ": unknown key '" + k + "'");
  }
}

long long parse_integer(std::string_view text, std::string_view what) {
  text = trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError(std::string(what) + ": not an integer: '" + std::string(text) + "'");
  }
  return value;
}

unsigned long long parse_unsigned(std::string_view text, std::string_view what) {
  text = trim(text);
  unsigned long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError(std::string(what) + ": not an unsigned integer: '" + std::string(text) +
                          "'");
  }
  return value;
}

double parse_real(std::string_view text, std::string_view what) {
  const std::string copy(trim(text));
  if (copy.empty()) throw ValidationError(std::string(what) + ": empty number");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(copy.c_str(), &end);
  if (end != copy.c_str() + copy.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ValidationError(std::string(what) + ": not a number: '" + copy + "'");
  }
  return v;
}

bool parse_bool(std::string_view text, std::string_view what) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ValidationError(std::string(what) + ": not a boolean: '" + std::string(text) + "'");
}

}  // namespace driftlab
