#pragma once

#include <stdexcept>
#include <string>

namespace breadsim {

struct ConfigInvalid : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct MalformedTrace : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct GroupTooSmall : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RatioUndefined : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MaskMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ExpertNotSuccessful : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RoundBudgetExceeded : std::runtime_error {
  explicit RoundBudgetExceeded(int round, const std::string& what)
      : std::runtime_error(what), round(round) {}
  int round;
};

struct OutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct EmptyInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidQuery : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace breadsim
