// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cibse {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or block shapes that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data: images, label files, dataset layout.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument that is neither a shape nor a data problem.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace cibse
