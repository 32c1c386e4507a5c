// Copyright 2026 The socprob Authors
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

#ifndef SOCPROB__ERROR_HPP_
#define SOCPROB__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace socprob
{

/// Root of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Tensor or map shapes that cannot be combined.
class DimensionError : public Error
{
public:
  using Error::Error;
};

/// NaN/Inf encountered where finite values are required.
class NumericError : public Error
{
public:
  using Error::Error;
};

/// Malformed text input. Carries the 1-based line number.
class ParseError : public Error
{
public:
  ParseError(std::size_t line, const std::string & what)
  : Error("line " + std::to_string(line) + ": " + what), line_(line)
  {
  }

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// Well-formed input whose content is inconsistent (duplicates, bad frames).
class DataError : public Error
{
public:
  using Error::Error;
};

/// Unknown names, missing files or checkpoints, invalid settings.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Invalid call arguments that are not shape problems.
class ArgumentError : public Error
{
public:
  using Error::Error;
};

/// A probability map that cannot be turned back into a coordinate.
class DecodeError : public Error
{
public:
  using Error::Error;
};

/// Binary file with the wrong magic bytes or an unparseable header.
class FormatError : public Error
{
public:
  using Error::Error;
};

/// Binary file written by an incompatible format version.
class VersionError : public Error
{
public:
  using Error::Error;
};

/// Read/write failures, including truncated files.
class IoError : public Error
{
public:
  using Error::Error;
};

}  // namespace socprob

#endif  // SOCPROB__ERROR_HPP_
