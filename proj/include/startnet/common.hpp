#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace startnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Version stamp embedded in every file format this project writes.
inline constexpr int kFormatVersion = 1;

/// Invalid inputs, inconsistent shapes, malformed files.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values where finite numerics are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat, named view over one parameter tensor. The optimizer, the gradient
/// checker and the checkpoint writer all address parameters through these.
struct ParamSlot {
  std::string name;
  double* data = nullptr;
  std::ptrdiff_t size = 0;
};

}  // namespace startnet
