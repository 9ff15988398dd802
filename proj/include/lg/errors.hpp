#pragma once

#include <stdexcept>
#include <string>

namespace lg {

// Error categories map one-to-one onto CLI exit codes.
enum class Fault {
  validation = 2,   // malformed input, violated precondition
  budget = 3,       // enumeration / dimension budget exceeded
  verification = 4, // a checked mathematical property failed
};

class Error : public std::runtime_error {
public:
  Error(Fault fault, const std::string& what) : std::runtime_error(what), fault_(fault) {}

  Fault fault() const { return fault_; }
  int exit_code() const { return static_cast<int>(fault_); }

private:
  Fault fault_;
};

} // namespace lg
