#pragma once

#include <stdexcept>
#include <string>

namespace htree {

enum class ErrorCode {
  invalid_argument,
  parse,
  disjoint_support,
  infeasible_boundary,
  size_cap_exceeded,
  enumeration_cap_exceeded,
  non_positive_rate,
  alpha_not_above_one,
  missing_edge_weight,
  invalid_flow,
  empty_edge_set,
  empty_interval,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace htree
