#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "driftlab/ingest.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/time.hpp"

namespace test_support {

inline driftlab::Timestamp ts(const std::string& text) {
  auto t = driftlab::parse_timestamp(text);
  if (!t) throw std::runtime_error("bad test timestamp " + text);
  return *t;
}

inline driftlab::Timestamp day(int n) {
  return ts("2020-01-01T00:00:00Z") + std::chrono::days(n);
}

inline driftlab::LabeledExample example(std::string id, driftlab::Timestamp t,
                                        driftlab::Label label, std::string text = "some example text") {
  driftlab::LabeledExample e;
  e.item_id = std::move(id);
  e.text = std::move(text);
  e.created_at = t;
  e.label = label;
  e.agreement = 1.0;
  e.n_votes = 3;
  e.votes[driftlab::index_of(label)] = 3;
  return e;
}

// Removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("driftlab-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace test_support
