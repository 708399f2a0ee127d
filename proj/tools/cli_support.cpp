// SPDX-License-Identifier: Apache-2.0
#include "cli_support.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>

#include "reflex/errors.hpp"

namespace reflex::cli {

std::string default_out_dir() {
  const char* env = std::getenv(kOutDirEnv);
  return env != nullptr && *env != '\0' ? std::string(env) : std::string("reflex-out");
}

std::vector<std::string> config_tokens(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config file {}", path.string()));
  std::vector<std::string> out;
  std::string line;
  std::size_t number = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(fmt::format("{}:{}: expected key = value", path.string(), number), number);
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    if (key.empty()) throw ParseError(fmt::format("{}:{}: empty key", path.string(), number), number);
    out.push_back(fmt::format("--{}={}", key, value));
  }
  return out;
}

std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file name");
      config = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!config || args.empty()) return args;
  auto given = [&](const std::string& token) {
    const auto key = token.substr(0, token.find('='));
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == key || a.rfind(key + "=", 0) == 0; });
  };
  std::vector<std::string> tokens;
  for (auto& t : config_tokens(*config)) {
    if (!given(t)) tokens.push_back(std::move(t));
  }
  // args[0] is the subcommand name.
  args.insert(args.begin() + 1, tokens.begin(), tokens.end());
  return args;
}

void write_manifest(const CLI::App& sub, const std::filesystem::path& dir) {
  nlohmann::json options = nlohmann::json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const auto name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      options[name] = results.size() == 1 ? nlohmann::json(results.front()) : nlohmann::json(results);
    } else {
      options[name] = opt->get_default_str();
    }
  }
  nlohmann::json manifest;
  manifest["tool"] = "reflex";
  manifest["version"] = kToolVersion;
  manifest["checkpoint_version"] = kCheckpointVersion;
  manifest["command"] = sub.get_name();
  manifest["options"] = std::move(options);
  auto out = open_output(dir, "manifest.json");
  out << manifest.dump(2) << '\n';
}

std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory {}: {}", dir, ec.message()));
  return dir;
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  return out;
}

std::vector<CognatePair> pairs_for_model(const Corpus& corpus, const TransducerModel& model) {
  std::vector<CognatePair> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus.pairs()) {
    CognatePair q;
    q.language = model.language_id(corpus.language_name(p.language));
    for (auto s : p.etymon) q.etymon.push_back(model.input_vocab().id(corpus.input_vocab().symbol(s)));
    for (auto s : p.reflex) q.reflex.push_back(model.output_vocab().id(corpus.output_vocab().symbol(s)));
    out.push_back(std::move(q));
  }
  return out;
}

SegmentSeq encode_input(const TransducerModel& model, const std::string& segments) {
  SegmentSeq out;
  for (const auto& sym : split_segments(segments)) out.push_back(model.input_vocab().id(sym));
  return out;
}

}  // namespace reflex::cli
