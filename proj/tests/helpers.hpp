#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "relact/action_model.hpp"
#include "relact/geometry.hpp"

namespace testutil {

inline std::filesystem::path source_dir() { return RELACT_SOURCE_DIR; }
inline std::filesystem::path models_dir() { return source_dir() / "config" / "models"; }

inline relact::ActionModel reference_model(const std::string& action) {
  return relact::load_action_models(models_dir() / (action + ".json")).at(0);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("relact-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
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
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline relact::BoundingBox random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0, 300), ext(0, 80);
  return {pos(rng), pos(rng), ext(rng), ext(rng)};
}

}  // namespace testutil
