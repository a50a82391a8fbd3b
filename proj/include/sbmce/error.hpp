// SPDX-License-Identifier: Apache-2.0
//
// sbmce: score-based MIMO channel estimation
// Copyright (C) 2026 sbmce contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace sbmce {

enum class ErrorKind {
    Parameter, // invalid numeric parameter (negative variance, K < 2, ...)
    Dimension, // shape/length mismatch
    Config,    // malformed or inconsistent run configuration
    Io,        // file could not be opened/read/written
    Format,    // file contents are not a valid container
    Numeric    // factorization or non-finite failure
};

inline const char *to_string(ErrorKind kind)
{
    switch (kind)
    {
    case ErrorKind::Parameter:
        return "parameter";
    case ErrorKind::Dimension:
        return "dimension";
    case ErrorKind::Config:
        return "config";
    case ErrorKind::Io:
        return "io";
    case ErrorKind::Format:
        return "format";
    case ErrorKind::Numeric:
        return "numeric";
    }
    return "unknown";
}

class Error : public std::runtime_error
{
  public:
    Error(ErrorKind kind, const std::string &what)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

// CLI exit status for an error kind: 2 config, 3 IO, 4 numeric.
inline int exit_code(ErrorKind kind)
{
    switch (kind)
    {
    case ErrorKind::Parameter:
    case ErrorKind::Config:
        return 2;
    case ErrorKind::Io:
    case ErrorKind::Format:
    case ErrorKind::Dimension:
        return 3;
    case ErrorKind::Numeric:
        return 4;
    }
    return 1;
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string &what)
{
    if (!condition)
        fail(kind, what);
}

} // namespace sbmce
