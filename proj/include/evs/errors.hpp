#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace evs {

// Base of every engine error. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidModel : public Error {
 public:
  using Error::Error;
};

class UnknownVariable : public Error {
 public:
  explicit UnknownVariable(std::string name)
      : Error("unknown variable '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

// Restriction to an event of probability zero: the restricted world is empty.
class ZeroSupport : public Error {
 public:
  using Error::Error;
};

// Some treatment level has no mass inside an adjustment stratum.
class PositivityViolation : public Error {
 public:
  PositivityViolation(int treatment_value,
                      std::vector<std::pair<std::string, int>> stratum,
                      const std::string& message)
      : Error(message),
        treatment_value_(treatment_value),
        stratum_(std::move(stratum)) {}

  int treatment_value() const { return treatment_value_; }
  const std::vector<std::pair<std::string, int>>& stratum() const {
    return stratum_;
  }

 private:
  int treatment_value_;
  std::vector<std::pair<std::string, int>> stratum_;
};

class ScopeMismatch : public Error {
 public:
  using Error::Error;
};

class SizeOverflow : public Error {
 public:
  using Error::Error;
};

class EmptyAdmissible : public Error {
 public:
  using Error::Error;
};

}  // namespace evs
