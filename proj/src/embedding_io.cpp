#include "clignet/embedding_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <string>

#include "clignet/errors.hpp"

namespace clignet {
namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  const U bits = std::bit_cast<U>(value);
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(U));
}

template <typename T>
bool get_le(std::istream& in, T& value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) return false;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  value = std::bit_cast<T>(bits);
  return true;
}

}  // namespace

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out.write(kEmbeddingMagic, sizeof(kEmbeddingMagic));
  put_le<std::uint16_t>(out, kEmbeddingVersion);
  put_le<std::uint64_t>(out, table.records.size());
  put_le<std::uint32_t>(out, table.dim);
  for (const auto& r : table.records) {
    if (r.values.size() != table.dim) throw InputError("embedding record dimension mismatch");
    put_le<std::uint64_t>(out, r.id);
    for (const float v : r.values) put_le<float>(out, v);
  }
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_embeddings(out, table);
}

EmbeddingTable read_embeddings(std::istream& in, const std::string& what) {
  char magic[sizeof(kEmbeddingMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kEmbeddingMagic, sizeof(magic)) != 0) {
    throw InputError(what + ": bad magic, not an embedding container");
  }
  std::uint16_t version = 0;
  std::uint64_t count = 0;
  EmbeddingTable table;
  if (!get_le(in, version)) throw InputError(what + ": truncated header");
  if (version != kEmbeddingVersion) {
    throw InputError(what + ": unsupported version " + std::to_string(version));
  }
  if (!get_le(in, count) || !get_le(in, table.dim)) throw InputError(what + ": truncated header");

  std::set<std::uint64_t> seen;
  table.records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t r = 0; r < count; ++r) {
    EmbeddingRecord rec;
    if (!get_le(in, rec.id)) throw InputError(what + ": truncated payload at record " + std::to_string(r));
    if (!seen.insert(rec.id).second) throw InputError(what + ": duplicate record id " + std::to_string(rec.id));
    rec.values.resize(table.dim);
    for (auto& v : rec.values) {
      if (!get_le(in, v)) throw InputError(what + ": truncated payload in record id " + std::to_string(rec.id));
      if (!std::isfinite(v)) throw InputError(what + ": non-finite value in record id " + std::to_string(rec.id));
    }
    table.records.push_back(std::move(rec));
  }
  return table;
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_embeddings(in, path.string());
}

std::map<std::uint64_t, Eigen::VectorXd> load_precomputed(const std::filesystem::path& path) {
  const auto table = read_embeddings(path);
  std::map<std::uint64_t, Eigen::VectorXd> out;
  for (const auto& r : table.records) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(table.dim));
    for (std::uint32_t i = 0; i < table.dim; ++i) v[i] = static_cast<double>(r.values[i]);
    out.emplace(r.id, std::move(v));
  }
  return out;
}

EmbeddingTable matrix_to_table(const Eigen::MatrixXd& m) {
  EmbeddingTable t;
  t.dim = static_cast<std::uint32_t>(m.cols());
  t.records.resize(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto& rec = t.records[static_cast<std::size_t>(r)];
    rec.id = static_cast<std::uint64_t>(r);
    rec.values.resize(t.dim);
    for (Eigen::Index c = 0; c < m.cols(); ++c) rec.values[static_cast<std::size_t>(c)] = static_cast<float>(m(r, c));
  }
  return t;
}

Eigen::MatrixXd table_to_matrix(const EmbeddingTable& t) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.records.size()), static_cast<Eigen::Index>(t.dim));
  for (const auto& rec : t.records) {
    if (rec.id >= t.records.size()) throw InputError("matrix container has out-of-range row id");
    for (std::uint32_t c = 0; c < t.dim; ++c) m(static_cast<Eigen::Index>(rec.id), c) = rec.values[c];
  }
  return m;
}

}  // namespace clignet
