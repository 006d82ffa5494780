#pragma once

// Experiment runner behind the relbound executable.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace relbound::cli {

using Json = nlohmann::ordered_json;

/// Raw settings as given on the command line or in a config file, keyed by option name
/// ("depth", "M", "tau", ...). Unset keys take the per-experiment defaults from the catalog.
struct ExperimentConfig {
  std::string experiment;
  std::map<std::string, std::string> values;
  bool timing = false;
};

/// Every option name accepted by some experiment.
const std::vector<std::string>& known_keys();

struct CatalogEntry {
  std::string name;
  std::string section;
  std::string summary;
  std::vector<std::pair<std::string, std::string>> defaults;
};

/// The nine experiments, in a fixed order.
const std::vector<CatalogEntry>& catalog();
const CatalogEntry& catalog_entry(const std::string& name);

struct Outcome {
  Json record;
  std::optional<std::string> csv;
  int exit_code = 0;  ///< 0 pass, 1 violation
};

/// Throws UsageError / PreconditionError on bad configuration.
Outcome run(const ExperimentConfig& config);

/// JSON array text for a list of records.
std::string emit_json(const std::vector<Json>& records);
/// Write-then-rename; throws std::runtime_error naming the path on failure.
void write_atomically(const std::string& path, const std::string& content);

/// Full command-line entry point; returns the process exit code.
int main(int argc, char** argv);

}  // namespace relbound::cli
