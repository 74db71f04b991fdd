#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "clignet/network.hpp"

namespace clignet {

inline constexpr char kCheckpointMagic[5] = {'L', 'G', 'C', 'K', 'P'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Versioned container: a type tag, the resolved config text, the label
/// vocabulary, the graph hash, named string lists, and named tensors. Each
/// tensor is stored as an embedding block (one record per row, float32).
struct Checkpoint {
  std::string type;
  std::string config;
  std::vector<std::string> labels;
  std::string graph_hash;
  std::map<std::string, std::vector<std::string>> lists;
  std::map<std::string, Eigen::MatrixXd> tensors;

  const Eigen::MatrixXd& tensor(const std::string& name) const;
};

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws MissingArtifactError when the file is absent, InputError when it is
/// malformed.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Rounds every parameter to float32 precision so an in-memory model matches
/// its reloaded copy.
void round_to_storage(ModelParams& params);
Eigen::MatrixXd round_to_storage(const Eigen::MatrixXd& m);

inline constexpr const char* kModelTag = "clignet-model";
inline constexpr const char* kBaselineTag = "tfidf-ovr";

/// Packs a network (parameters, graph and node features) into a checkpoint.
Checkpoint network_checkpoint(const Network& net, const std::string& config_text,
                              const std::vector<std::string>& labels, const std::string& graph_hash);

/// Rebuilds a network and verifies every shape against `config`.
Network network_from_checkpoint(const Checkpoint& ckpt, const NetworkConfig& config);

}  // namespace clignet
