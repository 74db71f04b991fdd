#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "clignet/corpus.hpp"

namespace clignet {

/// Chapter code per label. "NONE" never grants the same-chapter bonus.
struct ChapterMap {
  static constexpr const char* kNone = "NONE";
  std::vector<std::string> chapter;

  bool same_chapter(std::size_t i, std::size_t j) const;
};

/// Resolves chapters for the given label names from `specialty_name,chapter_code`
/// lines. Names missing from the file map to NONE.
ChapterMap read_chapter_map(const std::filesystem::path& path, const std::vector<std::string>& label_names);
ChapterMap parse_chapter_map(std::string_view text, const std::vector<std::string>& label_names);

/// Built-in best-effort mapping for the 40 transcription specialties.
ChapterMap default_chapter_map(const std::vector<std::string>& label_names);
std::string default_chapter_map_text();

struct GraphParams {
  double tau = 0.30;
  double bonus = 0.20;
  std::size_t per_label_cap = 30;
};

struct LabelGraph {
  Eigen::MatrixXd node_features;  // K x d_enc
  Eigen::MatrixXi adjacency;      // K x K, symmetric, zero diagonal
  Eigen::MatrixXd normalized;     // D^-1/2 (A + I) D^-1/2
  double tau = 0.30;
  double bonus = 0.20;

  std::size_t num_nodes() const noexcept { return static_cast<std::size_t>(normalized.rows()); }
  std::size_t num_edges() const;
  /// SHA-256 over the normalized matrix and edge list.
  std::string hash() const;
};

/// Per label, mean of the embeddings of up to `cap` training documents taken in
/// seeded-shuffle order of the training split.
Eigen::MatrixXd build_node_features(const Corpus& corpus, const SplitAssignment& split,
                                    const std::function<Eigen::VectorXd(std::size_t)>& embedding_of,
                                    std::size_t cap, std::uint64_t seed);

/// u.v / (|u||v|); 0 when either vector is zero.
double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Edge (i, j), i != j, iff s_ij + b_ij >= tau.
Eigen::MatrixXi build_adjacency(const Eigen::MatrixXd& features, const ChapterMap& chapters, double tau,
                                double bonus);

Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXi& adjacency);

LabelGraph build_label_graph(Eigen::MatrixXd node_features, const ChapterMap& chapters, const GraphParams& params);

/// Largest |eigenvalue| estimate by power iteration.
double spectral_radius(const Eigen::MatrixXd& m, std::size_t iterations = 1000);

/// `i,j,name_i,name_j` for each edge with i < j.
void write_edge_list(const LabelGraph& graph, const std::vector<std::string>& names,
                     const std::filesystem::path& path);

}  // namespace clignet
