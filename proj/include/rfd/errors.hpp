#pragma once

#include <stdexcept>
#include <string>

namespace rfd {

// Tensor/model dimension disagreement.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Layer cut, class index or layer-set index outside its valid range.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// An attack asked the oracle for information its threat model forbids.
class AccessError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Arguments outside the mathematical domain of a closed form.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed, truncated or unsupported model/dataset/config files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by estimators that cannot produce a statistic from the data they saw.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rfd
