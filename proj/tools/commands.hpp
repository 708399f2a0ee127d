// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <CLI11.hpp>

#include <functional>
#include <vector>

namespace reflex::cli {

struct Command {
  CLI::App* app = nullptr;
  std::function<void()> run;
};

/// Adds every subcommand to `app`. The returned handlers read option values
/// bound during parsing.
std::vector<Command> register_commands(CLI::App& app);

}  // namespace reflex::cli
