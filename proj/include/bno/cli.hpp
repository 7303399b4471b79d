// Copyright 2026 The BNO Authors.
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

// The `bno` command line: generate, dmd, train, predict, rollout, superres
// and report. Configuration is a flat JSON object; every key may be
// overridden with --key=value. Unknown keys are rejected and the whole
// configuration is validated before anything is written.

#ifndef BNO_CLI_HPP_
#define BNO_CLI_HPP_

#include "bno/error.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace bno::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2, kIo = 3 };

/// Exit code for an error of the given kind.
int exit_code_for(ErrorKind kind);

/// Every recognised key with its default value.
nlohmann::json default_config();

/// Runs one command; `args` excludes the program name. Never throws.
int run(const std::vector<std::string>& args);

}  // namespace bno::cli

#endif  // BNO_CLI_HPP_
