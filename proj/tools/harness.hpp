#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace squire::harness {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kOutDirEnv = "SQUIRE_OUT_DIR";

using Json = nlohmann::ordered_json;

// Fully resolved experiment parameters. Keys are fixed per subcommand and
// values are kept as strings so a spec round-trips exactly.
class Spec {
 public:
  static Spec defaults(const std::string& subcommand);

  const std::string& subcommand() const { return subcommand_; }
  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);  // throws on unknown key
  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::vector<std::int64_t> get_ints(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  // Checks every value parses and lies in range; throws std::invalid_argument.
  void validate() const;
  Json to_json() const;

 private:
  std::string subcommand_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

const std::vector<std::string>& subcommands();

// Applies key=value lines. Also accepts a JSON report (its "spec" object) or
// a CSV report (its "# spec.key=value" header lines), so any output file can
// be replayed.
void apply_config_file(Spec& spec, const std::string& path);
void apply_config_text(Spec& spec, const std::string& text);

struct Outcome {
  Json report;                     // schema_version, subcommand, spec, rows, summary, faults
  std::vector<std::string> jsonl;  // per-read lines (pipeline only)
  bool clean() const;              // no faults or deadlocks
};

Outcome run(const Spec& spec);

std::string render_json(const Outcome& outcome);
std::string render_csv(const Outcome& outcome);

// Knee rule: smallest size whose MPKI is within `tolerance` of the MPKI at
// the largest size. Sizes ascend.
std::uint64_t knee_size(const std::vector<std::uint64_t>& sizes, const std::vector<double>& mpki,
                        double tolerance = 0.10);

}  // namespace squire::harness
