#pragma once

#include <stdexcept>
#include <string>

namespace ranknosh {

// A caller broke a documented precondition (double charge, oversized k, ...).
// These indicate scheduler or harness bugs, never bad input data.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or inconsistent benchmark data, or a lookup the table cannot serve.
class BenchmarkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Search-space construction/sampling failures.
class SpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values inside the ranker (forward pass or training).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ranknosh
