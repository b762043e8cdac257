// Copyright 2026 The posefuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fmt/format.h>

#include <stdexcept>
#include <string>

namespace posefuse {

/// Failure categories. The C API maps each one onto a distinct status code.
enum class ErrorKind {
  InvalidArgument,
  Parse,
  Precondition,
  Divergence,
  Io,
  Incompatible,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept {
    return kind_;
  }

 private:
  ErrorKind kind_;
};

template <typename... Args>
[[noreturn]] void fail(ErrorKind kind, fmt::format_string<Args...> format, Args&&... args) {
  throw Error(kind, fmt::format(format, std::forward<Args>(args)...));
}

#define PF_THROW_IF(cond, kind, ...)      \
  do {                                    \
    if (cond) {                           \
      ::posefuse::fail(kind, __VA_ARGS__); \
    }                                     \
  } while (0)

} // namespace posefuse
