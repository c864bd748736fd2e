#pragma once

#include <stdexcept>
#include <string>

namespace gcmopt {

enum class ErrorKind {
  kConfig,    // invalid parameters or scenario
  kIo,        // unreadable/unwritable/corrupt files
  kSolver,    // infeasible instance, oracle limits
  kContract,  // broken internal invariant (e.g. unreachable flight target)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error config_error(const std::string& what) { return {ErrorKind::kConfig, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::kIo, what}; }
inline Error solver_error(const std::string& what) { return {ErrorKind::kSolver, what}; }
inline Error contract_error(const std::string& what) { return {ErrorKind::kContract, what}; }

}  // namespace gcmopt
