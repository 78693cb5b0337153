// Copyright 2026 The Promptsmith Authors.
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

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "promptsmith/core.hpp"

namespace promptsmith::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode { kOk = 0, kDomainError = 1, kUsageError = 2 };

// Runs one command line (without the program name). The result JSON goes to
// out, diagnostics to err. Every invocation writes one run record under
// <out-dir>/runs/.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const std::map<std::string, std::string>& env);
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace promptsmith::cli
