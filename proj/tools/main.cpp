// SPDX-License-Identifier: Apache-2.0
// reflex: command-line front end for training, evaluation and analysis.
#include <fmt/format.h>

#include <algorithm>
#include <exception>

#include "cli_support.hpp"
#include "commands.hpp"
#include "reflex/errors.hpp"

namespace {

int fail(int code, const std::string& kind, const std::string& what) {
  fmt::print(stderr, "reflex: {}: {}\n", kind, what);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace reflex::cli;
  CLI::App app{"Learn and analyse sound-change transductions across related languages", "reflex"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.footer(fmt::format(
      "Every subcommand also takes --config FILE (key = value lines; flags win).\n"
      "Exit codes: {} usage, {} I/O, {} input/configuration, {} diverged training, {} internal.",
      static_cast<int>(kUsage), static_cast<int>(kIo), static_cast<int>(kConfig), static_cast<int>(kDiverged),
      static_cast<int>(kInternal)));
  const auto commands = register_commands(app);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail(kUsage, "usage error", fmt::format("{} (see --help)", e.what()));
  } catch (const reflex::IoError& e) {
    return fail(kIo, "I/O error", e.what());
  } catch (const reflex::Error& e) {
    return fail(kConfig, "configuration error", e.what());
  }

  try {
    for (const auto& c : commands) {
      if (c.app->parsed()) c.run();
    }
  } catch (const reflex::IoError& e) {
    return fail(kIo, "I/O error", e.what());
  } catch (const reflex::CheckpointError& e) {
    return fail(kIo, "checkpoint error", e.what());
  } catch (const reflex::TrainingError& e) {
    return fail(kDiverged, "training diverged", e.what());
  } catch (const reflex::Error& e) {
    return fail(kConfig, "error", e.what());
  } catch (const std::exception& e) {
    return fail(kInternal, "internal error", e.what());
  }
  return kOk;
}
