#pragma once

#include <stdexcept>
#include <string>

namespace cdrgeo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed input files, bad configuration.
class InputError : public Error {
 public:
  using Error::Error;
};

// A computed product violates one of its own invariants.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Zero-variance field handed to a statistic that standardizes by it.
class DegenerateField : public Error {
 public:
  explicit DegenerateField(const std::string& what)
      : Error("degenerate_field: " + what) {}
};

}  // namespace cdrgeo
