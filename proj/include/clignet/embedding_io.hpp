#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <vector>

namespace clignet {

/// Binary float container shared with the embedding exporter.
///
///   header:  "LGEMB" (5 bytes) | version u16 | record count u64 | dimension u32
///   payload: count x (record id u64 | dimension x float32)
///
/// All integers and floats are little-endian. Version 1 is the only version.
inline constexpr char kEmbeddingMagic[5] = {'L', 'G', 'E', 'M', 'B'};
inline constexpr std::uint16_t kEmbeddingVersion = 1;

struct EmbeddingRecord {
  std::uint64_t id = 0;
  std::vector<float> values;
};

struct EmbeddingTable {
  std::uint32_t dim = 0;
  std::vector<EmbeddingRecord> records;  // file order
};

void write_embeddings(std::ostream& out, const EmbeddingTable& table);
void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

/// Reads one container and validates it: magic, version, full payload,
/// unique ids, finite values. `what` names the source in error messages.
EmbeddingTable read_embeddings(std::istream& in, const std::string& what);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

/// Embeddings keyed by record id, widened to double.
std::map<std::uint64_t, Eigen::VectorXd> load_precomputed(const std::filesystem::path& path);

/// Matrix <-> container: row r becomes the record with id r.
EmbeddingTable matrix_to_table(const Eigen::MatrixXd& m);
Eigen::MatrixXd table_to_matrix(const EmbeddingTable& table);

}  // namespace clignet
