#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clignet/config.hpp"
#include "clignet/corpus.hpp"
#include "clignet/encoder.hpp"
#include "clignet/metrics.hpp"
#include "clignet/network.hpp"

namespace clignet {

/// Command-line level options shared by every command.
struct RunOptions {
  std::filesystem::path run_dir = "run";
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<Mode> mode;
};

/// Config file (or the run directory's snapshot, or defaults) with the seed
/// and mode overrides applied and the mode's switches turned on.
RunConfig resolve_config(const RunOptions& options);

/// Everything a command needs from the ingest step.
struct Workspace {
  RunConfig config;
  Corpus corpus;
  SplitAssignment split;
  std::filesystem::path mode_dir;
};
Workspace load_workspace(const RunOptions& options);

/// Model inputs for every record (indexed by record id).
struct ModelInputs {
  std::vector<DocInput> docs;
  std::vector<TokenSequence> tokens;  // reference encoder only
  ChunkParams chunks;
  FeatureHasher hasher;
};
ModelInputs build_inputs(const RunConfig& config, const Corpus& corpus);

NetworkConfig network_config(const RunConfig& config, std::size_t num_labels);

/// Each command writes into the run directory and refreshes manifest.txt.
void cmd_ingest(const std::filesystem::path& csv_path, const RunOptions& options);
void cmd_train(const RunOptions& options);
void cmd_calibrate(const RunOptions& options);
EvalReport cmd_evaluate(const RunOptions& options, const std::vector<Mode>& compare = {});
void cmd_attribute(const RunOptions& options, const std::vector<std::size_t>& records = {});
void cmd_ablate(const RunOptions& options);

/// `relative/path sha256` for every file below `run_dir` except the manifest.
void write_manifest(const std::filesystem::path& run_dir);

/// 2 input error, 3 missing prerequisite, 4 numeric failure, 1 otherwise.
int exit_code_for(const std::exception& error) noexcept;

}  // namespace clignet
