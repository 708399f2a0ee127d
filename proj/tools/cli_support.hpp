// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "reflex/corpus.hpp"
#include "reflex/model.hpp"

namespace reflex::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,   // bad flags or flag values
  kIo = 3,      // missing or unwritable files
  kConfig = 4,  // malformed inputs, mode mismatches, bad hyperparameters
  kDiverged = 5,
};

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kOutDirEnv = "REFLEX_OUT_DIR";

/// Default output directory: $REFLEX_OUT_DIR, else ./reflex-out.
std::string default_out_dir();

/// Reads `key = value` lines ('#' comments) and returns `--key=value` tokens.
std::vector<std::string> config_tokens(const std::filesystem::path& path);

/// Moves `--config FILE` out of `args` and splices its tokens in right after
/// the subcommand name. Keys that also appear as flags are dropped, so flags
/// win.
std::vector<std::string> expand_config(std::vector<std::string> args);

/// Every option of `sub` with its resolved value, as JSON, plus the tool and
/// checkpoint versions. Written before the command runs.
void write_manifest(const CLI::App& sub, const std::filesystem::path& dir);

std::filesystem::path prepare_out_dir(const std::string& dir);
std::ofstream open_output(const std::filesystem::path& dir, const std::string& name);

/// Re-encodes corpus pairs in the model's vocabularies and language table.
std::vector<CognatePair> pairs_for_model(const Corpus& corpus, const TransducerModel& model);
SegmentSeq encode_input(const TransducerModel& model, const std::string& segments);

}  // namespace reflex::cli
