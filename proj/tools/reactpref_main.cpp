/*
 * Copyright 2026 The reactpref Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end. Talks to the library only through its C interface.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "reactpref/reactpref.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct RunOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
};

int exit_code(rp_status s) {
  if (s == RP_OK) return 0;
  return s == RP_ERR_CONFIG ? kExitConfig : kExitRuntime;
}

int report_failure(rp_status s) {
  std::cerr << "error (" << rp_status_name(s) << "): " << rp_last_error() << "\n";
  return exit_code(s);
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

/// --out, then $REACTPREF_OUTPUT/<command>, then output_dir from the config,
/// then runs/<command>.
std::string output_dir(const std::string& command, const RunOptions& opts,
                       const std::string& config_json) {
  if (!opts.out.empty()) return opts.out;
  if (const char* root = std::getenv("REACTPREF_OUTPUT"); root != nullptr && *root != '\0')
    return (std::filesystem::path(root) / command).string();
  const auto doc = nlohmann::json::parse(config_json, nullptr, false);
  if (doc.is_object() && doc.contains("output_dir") && doc["output_dir"].is_string() &&
      !doc["output_dir"].get<std::string>().empty())
    return doc["output_dir"].get<std::string>();
  return (std::filesystem::path("runs") / command).string();
}

int run(const std::string& command, const RunOptions& opts) {
  std::string config = "{}";
  if (!opts.config_path.empty() && !read_file(opts.config_path, config)) {
    std::cerr << "error (config): cannot read " << opts.config_path << "\n";
    return kExitConfig;
  }
  for (const auto& assignment : opts.overrides) {
    char* next = nullptr;
    const rp_status s = rp_config_override(config.c_str(), assignment.c_str(), &next);
    if (s != RP_OK) return report_failure(s);
    config = next;
    rp_string_free(next);
  }
  const std::string out = output_dir(command, opts, config);
  const rp_status s = rp_run_command(command.c_str(), config.c_str(), out.c_str());
  if (s != RP_OK) return report_failure(s);
  std::cout << command << ": outputs written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reactpref: tier-aware preference training and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rp_version()));

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "generate a planted synthetic world"},
      {"train", "train the generator with the preference objective"},
      {"train-judge", "train the multimodal judge"},
      {"eval", "evaluate generated motions for each requested mode"},
      {"sweep", "train and evaluate over the margin / ranking-weight grid"},
  };
  std::vector<RunOptions> options(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].first, commands[i].second);
    sub->add_option("-c,--config", options[i].config_path, "JSON run configuration")
        ->check(CLI::ExistingFile);
    sub->add_option("-s,--set", options[i].overrides, "override, e.g. train.margin=1.0");
    sub->add_option("-o,--out", options[i].out,
                    "output directory (default: $REACTPREF_OUTPUT/<command>)");
    subs.push_back(sub);
  }
  std::string report_path;
  CLI::App* report = app.add_subcommand("report", "print a report JSON or sweep table");
  report->add_option("path", report_path, "report_*.json or sweep.jsonl")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) return run(commands[i].first, options[i]);

  char* text = nullptr;
  const rp_status s = rp_render_report(report_path.c_str(), &text);
  if (s != RP_OK) return report_failure(s);
  std::cout << text;
  rp_string_free(text);
  return 0;
}
