#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace fflsim {

// Flat error taxonomy: a code for programmatic handling, a message for humans.
// Library functions throw; the CLI maps Error to exit code 2 (usage/config) or 1.
enum class Errc {
  dimension_mismatch,
  empty_dataset,
  invalid_argument,
  numerical,
  divergence,
  infeasible,
  gradient_bound,
  unsupported,
  io,
  config,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace fflsim
