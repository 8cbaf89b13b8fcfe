/* Copyright 2026 The sigmaquant Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sigmaquant_cli/config.hpp"

namespace sigmaquant::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr int kExitError = 1;

/// Each command writes its artifacts under config.out, prints a short
/// summary to `log` and returns the process exit code.
int cmd_train(const RunConfig& config, std::ostream& log);
int cmd_stats(const RunConfig& config, std::ostream& log);
int cmd_cluster(const RunConfig& config, std::ostream& log);
int cmd_plan(const RunConfig& config, std::ostream& log);
int cmd_quantize(const RunConfig& config, std::ostream& log);
int cmd_evaluate(const RunConfig& config, std::ostream& log);
int cmd_hw_report(const RunConfig& config, std::ostream& log);
int cmd_verify_trace(const RunConfig& config, std::ostream& log);

/// Full command line (argv[0] excluded). Errors are reported on `err` and
/// mapped to exit code 1.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sigmaquant::cli
