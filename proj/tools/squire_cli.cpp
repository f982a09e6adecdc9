#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "harness.hpp"

namespace fs = std::filesystem;
using namespace squire::harness;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::string config;
  std::vector<std::string> overrides;
  std::vector<std::pair<std::string, std::string>> keyed;  // per-key flags, in declaration order
  bool print_spec = false;
};

void add_common(const std::string& name, CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Experiment seed");
  sub->add_option("--out", c.out, "Output file (default: $" + std::string(kOutDirEnv) + "/<subcommand>.<format>)");
  sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--config", c.config, "key=value file, or a previous JSON/CSV report to rerun");
  sub->add_option("--set", c.overrides, "Override one spec key (key=value), repeatable");
  sub->add_flag("--print-spec", c.print_spec, "Print the resolved spec and exit");
  const Spec defaults = Spec::defaults(name);
  c.keyed.reserve(defaults.entries().size());
  for (const auto& [key, value] : defaults.entries()) {
    if (key == "seed" || key == "format") continue;
    c.keyed.emplace_back(key, std::string{});
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    sub->add_option("--" + flag, c.keyed.back().second, "default: " + (value.empty() ? "(none)" : value));
  }
}

Spec resolve(const std::string& name, const Common& c) {
  Spec spec = Spec::defaults(name);
  if (!c.config.empty()) apply_config_file(spec, c.config);
  for (const auto& [key, value] : c.keyed) {
    if (!value.empty()) spec.set(key, value);
  }
  for (const auto& kv : c.overrides) apply_config_text(spec, kv);
  if (c.seed) spec.set("seed", std::to_string(*c.seed));
  if (!c.format.empty()) spec.set("format", c.format);
  spec.validate();
  return spec;
}

fs::path output_path(const std::string& name, const Common& c, const std::string& format) {
  if (!c.out.empty()) return c.out;
  const char* dir = std::getenv(kOutDirEnv);
  return fs::path(dir != nullptr && *dir != '\0' ? dir : ".") / (name + "." + format);
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Squire accelerator simulator and experiment harness"};
  app.require_subcommand(1);
  std::map<std::string, Common> common;
  for (const auto& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(name, sub, common[name]);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();
  const Common& c = common[name];
  try {
    const Spec spec = resolve(name, c);
    if (c.print_spec) {
      for (const auto& [k, v] : spec.entries()) std::cout << k << "=" << v << "\n";
      return 0;
    }
    const Outcome outcome = run(spec);
    const std::string format = spec.get("format");
    const fs::path path = output_path(name, c, format);
    write_file(path, format == "csv" ? render_csv(outcome) : render_json(outcome));
    std::cerr << "wrote " << path.string() << "\n";
    if (!outcome.jsonl.empty()) {
      fs::path reads = path;
      reads.replace_extension(".reads.jsonl");
      std::string text;
      for (const auto& line : outcome.jsonl) text += line + "\n";
      write_file(reads, text);
      std::cerr << "wrote " << reads.string() << "\n";
    }
    for (const auto& f : outcome.report["faults"]) std::cerr << "fault: " << f.dump() << "\n";
    return outcome.clean() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
