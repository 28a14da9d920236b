#pragma once

#include <stdexcept>
#include <string>

namespace sgues {

// Malformed or inconsistent user input (spec files, classifications, profiles).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Certificate cannot be formed for the requested configuration.
class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The constructive signal generator could not realise the profile.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgues
