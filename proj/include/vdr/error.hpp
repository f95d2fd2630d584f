#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace vdr {

// Every failure carries a stable identifier (e.g. "empty-logits",
// "dataset-parse:3") plus a human-readable message. Validation errors map to
// exit code 1 at the CLI, runtime errors to exit code 2.
class Error : public std::runtime_error {
 public:
  enum class Kind { validation, runtime };

  Error(Kind kind, std::string id, const std::string& message)
      : std::runtime_error(id + ": " + message), kind_(kind), id_(std::move(id)) {}

  Kind kind() const { return kind_; }
  const std::string& id() const { return id_; }

 private:
  Kind kind_;
  std::string id_;
};

[[noreturn]] inline void fail(const std::string& id, const std::string& message) {
  throw Error(Error::Kind::validation, id, message);
}

[[noreturn]] inline void fail_runtime(const std::string& id, const std::string& message) {
  throw Error(Error::Kind::runtime, id, message);
}

inline void require(bool cond, const std::string& id, const std::string& message) {
  if (!cond) fail(id, message);
}

}  // namespace vdr
