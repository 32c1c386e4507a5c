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

#ifndef SOCPROB__CLI_HPP_
#define SOCPROB__CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace socprob::cli
{

inline constexpr const char * kVersion = "0.1.0";

enum ExitCode : int
{
  kSuccess = 0,
  kUsage = 1,
  kDataError = 2,
  kNumericError = 3,
};

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);
int run(int argc, const char * const * argv);

}  // namespace socprob::cli

#endif  // SOCPROB__CLI_HPP_
