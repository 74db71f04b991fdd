#include "clignet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "clignet/embedding_io.hpp"
#include "clignet/errors.hpp"

namespace clignet {

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in, const std::string& what) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw InputError(what + ": truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, const std::string& what) {
  const auto n = get_u64(in, what);
  if (n > (1ull << 32)) throw InputError(what + ": implausible string length in checkpoint");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw InputError(what + ": truncated checkpoint");
  return s;
}

void put_list(std::ostream& out, const std::vector<std::string>& items) {
  put_u64(out, items.size());
  for (const auto& s : items) put_string(out, s);
}

std::vector<std::string> get_list(std::istream& in, const std::string& what) {
  const auto n = get_u64(in, what);
  std::vector<std::string> items;
  for (std::uint64_t i = 0; i < n; ++i) items.push_back(get_string(in, what));
  return items;
}

void require(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InputError("checkpoint tensor " + name + " is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", config expects " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

}  // namespace

const Eigen::MatrixXd& Checkpoint::tensor(const std::string& name) const {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw InputError("checkpoint lacks tensor " + name);
  return it->second;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const char version[2] = {static_cast<char>(kCheckpointVersion & 0xFF), static_cast<char>(kCheckpointVersion >> 8)};
  out.write(version, 2);
  put_string(out, ckpt.type);
  put_string(out, ckpt.config);
  put_list(out, ckpt.labels);
  put_string(out, ckpt.graph_hash);
  put_u64(out, ckpt.lists.size());
  for (const auto& [name, items] : ckpt.lists) {
    put_string(out, name);
    put_list(out, items);
  }
  put_u64(out, ckpt.tensors.size());
  for (const auto& [name, m] : ckpt.tensors) {
    put_string(out, name);
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    std::ostringstream block(std::ios::binary);
    write_embeddings(block, matrix_to_table(m));
    put_string(out, block.str());
  }
  if (!out) throw InputError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError(path.string());
  const std::string what = path.string();
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw InputError(what + ": not a checkpoint (bad magic)");
  }
  unsigned char v[2];
  if (!in.read(reinterpret_cast<char*>(v), 2)) throw InputError(what + ": truncated checkpoint");
  const unsigned version = v[0] | (v[1] << 8);
  if (version != kCheckpointVersion) throw InputError(what + ": unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.type = get_string(in, what);
  ckpt.config = get_string(in, what);
  ckpt.labels = get_list(in, what);
  ckpt.graph_hash = get_string(in, what);
  const auto n_lists = get_u64(in, what);
  for (std::uint64_t i = 0; i < n_lists; ++i) {
    auto name = get_string(in, what);
    ckpt.lists[name] = get_list(in, what);
  }
  const auto n_tensors = get_u64(in, what);
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    auto name = get_string(in, what);
    const auto rows = get_u64(in, what);
    const auto cols = get_u64(in, what);
    std::istringstream block(get_string(in, what), std::ios::binary);
    const auto table = read_embeddings(block, what + " tensor " + name);
    if (table.records.size() != rows || (rows > 0 && table.dim != cols)) {
      throw InputError(what + ": tensor " + name + " shape does not match its header");
    }
    Eigen::MatrixXd m = rows == 0 ? Eigen::MatrixXd(0, static_cast<Eigen::Index>(cols)) : table_to_matrix(table);
    ckpt.tensors.emplace(std::move(name), std::move(m));
  }
  return ckpt;
}

Eigen::MatrixXd round_to_storage(const Eigen::MatrixXd& m) {
  return m.unaryExpr([](double x) { return static_cast<double>(static_cast<float>(x)); });
}

void round_to_storage(ModelParams& params) {
  for (auto& b : params.blocks()) {
    b.values = b.values.unaryExpr([](double x) { return static_cast<double>(static_cast<float>(x)); });
  }
}

Checkpoint network_checkpoint(const Network& net, const std::string& config_text,
                              const std::vector<std::string>& labels, const std::string& graph_hash) {
  Checkpoint c;
  c.type = kModelTag;
  c.config = config_text;
  c.labels = labels;
  c.graph_hash = graph_hash;
  const auto& p = net.params();
  c.tensors["graph.a_hat"] = net.a_hat();
  c.tensors["graph.node_features"] = net.node_features();
  if (p.projection.size() > 0) c.tensors["projection"] = p.projection;
  c.tensors["gcn.w0"] = p.gcn.w0;
  c.tensors["gcn.w1"] = p.gcn.w1;
  c.tensors["fusion.wp"] = p.fusion.wp;
  c.tensors["fusion.gates"] = p.fusion.gates;
  c.tensors["fusion.head_w"] = p.fusion.head_w;
  c.tensors["fusion.head_b"] = p.fusion.head_b;
  return c;
}

Network network_from_checkpoint(const Checkpoint& ckpt, const NetworkConfig& config) {
  if (ckpt.type != kModelTag) throw InputError("checkpoint type is '" + ckpt.type + "', expected " + kModelTag);
  const auto k = static_cast<Eigen::Index>(config.num_labels);
  if (ckpt.labels.size() != config.num_labels) throw InputError("checkpoint label count differs from the corpus");
  const auto& a_hat = ckpt.tensor("graph.a_hat");
  const auto& h0 = ckpt.tensor("graph.node_features");
  require(a_hat, k, k, "graph.a_hat");
  require(h0, k, static_cast<Eigen::Index>(config.input_dim), "graph.node_features");
  Network net(config, a_hat, h0);
  auto& p = net.params();
  const auto it = ckpt.tensors.find("projection");
  if (it != ckpt.tensors.end()) p.projection = it->second;
  p.gcn.w0 = ckpt.tensor("gcn.w0");
  p.gcn.w1 = ckpt.tensor("gcn.w1");
  p.gcn.dropout_rate = config.dropout;
  p.fusion.wp = ckpt.tensor("fusion.wp");
  p.fusion.gates = ckpt.tensor("fusion.gates");
  p.fusion.head_w = ckpt.tensor("fusion.head_w");
  const auto& hb = ckpt.tensor("fusion.head_b");
  require(hb, k, 1, "fusion.head_b");
  p.fusion.head_b = hb.col(0);
  net.validate();
  net.mark_trained();
  return net;
}

}  // namespace clignet
