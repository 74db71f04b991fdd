#pragma once

#include <stdexcept>
#include <string>

namespace clignet {

/// Bad or inconsistent user input (files, config, arguments).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pipeline stage was asked to run before the artifact it depends on exists.
class MissingArtifactError : public std::runtime_error {
 public:
  explicit MissingArtifactError(const std::string& artifact)
      : std::runtime_error("missing prerequisite artifact: " + artifact), artifact_(artifact) {}

  const std::string& artifact() const noexcept { return artifact_; }

 private:
  std::string artifact_;
};

/// Non-finite values during training or evaluation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace clignet
