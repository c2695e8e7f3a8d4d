/*
Copyright 2026 The gcmap Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include <stdexcept>
#include <string>

namespace gcmap {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions do not chain.
class ShapeError : public Error {
  public:
    using Error::Error;
};

/// Malformed or inconsistent input data (files, labels, indices, configs).
class DataError : public Error {
  public:
    using Error::Error;
};

/// A training loss became non-finite or exceeded the divergence ceiling.
class DivergenceError : public Error {
  public:
    using Error::Error;
};

namespace detail {

inline void require_shape(bool ok, const std::string &what) {
    if (!ok) throw ShapeError(what);
}

inline void require_data(bool ok, const std::string &what) {
    if (!ok) throw DataError(what);
}

} // namespace detail
} // namespace gcmap
