#include "clignet/labelgraph.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "clignet/csv.hpp"
#include "clignet/errors.hpp"
#include "clignet/hashing.hpp"
#include "clignet/rng.hpp"
#include "clignet/text.hpp"

namespace clignet {

namespace {

// ICD-10 chapter stand-ins for the transcription specialties. Administrative
// document types (letters, discharge summaries, ...) carry no chapter.
constexpr const char* kDefaultChapters = R"(Allergy / Immunology,III
Autopsy,NONE
Bariatrics,IV
Cardiovascular / Pulmonary,IX
Chiropractic,XIII
Consult - History and Phy.,XXI
Cosmetic / Plastic Surgery,XII
Dentistry,XI
Dermatology,XII
Diets and Nutritions,IV
Discharge Summary,NONE
ENT - Otolaryngology,VIII
Emergency Room Reports,XIX
Endocrinology,IV
Gastroenterology,XI
General Medicine,XXI
Hematology - Oncology,II
Hospice - Palliative Care,XXI
IME-QME-Work Comp etc.,NONE
Lab Medicine - Pathology,XVIII
Letters,NONE
Nephrology,XIV
Neurology,VI
Neurosurgery,VI
Obstetrics / Gynecology,XV
Office Notes,XXI
Ophthalmology,VII
Orthopedic,XIII
Pain Management,XVIII
Pediatrics - Neonatal,XVI
Physical Medicine - Rehab,XIII
Podiatry,XIII
Psychiatry / Psychology,V
Radiology,XVIII
Rheumatology,XIII
SOAP / Chart / Progress Notes,XXI
Sleep Medicine,VI
Speech - Language,XVIII
Surgery,NONE
Urology,XIV
)";

}  // namespace

bool ChapterMap::same_chapter(std::size_t i, std::size_t j) const {
  return chapter[i] != kNone && chapter[i] == chapter[j];
}

ChapterMap parse_chapter_map(std::string_view text, const std::vector<std::string>& label_names) {
  std::map<std::string, std::string> by_name;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto comma = t.rfind(',');
    if (comma == std::string::npos) {
      throw InputError("chapter map line " + std::to_string(lineno) + " lacks a comma");
    }
    const std::string code = trim(std::string_view(t).substr(comma + 1));
    by_name[trim(std::string_view(t).substr(0, comma))] = code.empty() ? ChapterMap::kNone : code;
  }
  ChapterMap map;
  for (const auto& name : label_names) {
    const auto it = by_name.find(name);
    map.chapter.push_back(it == by_name.end() ? ChapterMap::kNone : it->second);
  }
  return map;
}

ChapterMap read_chapter_map(const std::filesystem::path& path, const std::vector<std::string>& label_names) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open chapter map " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_chapter_map(ss.str(), label_names);
}

std::string default_chapter_map_text() { return kDefaultChapters; }

ChapterMap default_chapter_map(const std::vector<std::string>& label_names) {
  return parse_chapter_map(kDefaultChapters, label_names);
}

std::size_t LabelGraph::num_edges() const {
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < adjacency.cols(); ++j) n += adjacency(i, j) != 0;
  }
  return n;
}

std::string LabelGraph::hash() const {
  std::ostringstream bytes;
  bytes << normalized.rows() << ';';
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < adjacency.cols(); ++j) {
      if (adjacency(i, j)) bytes << i << '-' << j << ';';
    }
  }
  bytes.write(reinterpret_cast<const char*>(normalized.data()),
              static_cast<std::streamsize>(normalized.size() * sizeof(double)));
  return sha256_hex(bytes.str());
}

Eigen::MatrixXd build_node_features(const Corpus& corpus, const SplitAssignment& split,
                                    const std::function<Eigen::VectorXd(std::size_t)>& embedding_of,
                                    std::size_t cap, std::uint64_t seed) {
  auto train = split.ids(Split::train);
  Rng rng(seed);
  rng.shuffle(std::span(train));

  const std::size_t k_labels = corpus.num_labels();
  std::vector<std::vector<std::size_t>> chosen(k_labels);
  for (const std::size_t id : train) {
    auto& bucket = chosen[static_cast<std::size_t>(corpus.records[id].label)];
    if (bucket.size() < cap) bucket.push_back(id);
  }

  Eigen::MatrixXd features;
  for (std::size_t k = 0; k < k_labels; ++k) {
    if (chosen[k].empty()) {
      throw InputError("label '" + corpus.labels.names[k] + "' has no training document for node features");
    }
    Eigen::VectorXd sum;
    for (const std::size_t id : chosen[k]) {
      const Eigen::VectorXd e = embedding_of(id);
      if (sum.size() == 0) sum = Eigen::VectorXd::Zero(e.size());
      sum += e;
    }
    if (features.size() == 0) features.resize(static_cast<Eigen::Index>(k_labels), sum.size());
    features.row(static_cast<Eigen::Index>(k)) = sum.transpose() / static_cast<double>(chosen[k].size());
  }
  return features;
}

double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return u.dot(v) / (nu * nv);
}

Eigen::MatrixXi build_adjacency(const Eigen::MatrixXd& features, const ChapterMap& chapters, double tau,
                                double bonus) {
  const Eigen::Index k = features.rows();
  if (static_cast<Eigen::Index>(chapters.chapter.size()) != k) {
    throw InputError("chapter map size does not match the number of labels");
  }
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double s = cosine_similarity(features.row(i).transpose(), features.row(j).transpose());
      const double b = chapters.same_chapter(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) ? bonus : 0.0;
      if (s + b >= tau) a(i, j) = a(j, i) = 1;
    }
  }
  return a;
}

Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXi& adjacency) {
  const Eigen::Index k = adjacency.rows();
  Eigen::VectorXd inv_sqrt_deg(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double deg = 1.0;  // self-loop
    for (Eigen::Index j = 0; j < k; ++j) {
      if (j != i) deg += adjacency(i, j);
    }
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j) {
      const double aij = i == j ? 1.0 : static_cast<double>(adjacency(i, j));
      out(i, j) = out(j, i) = inv_sqrt_deg[i] * aij * inv_sqrt_deg[j];
    }
  }
  return out;
}

LabelGraph build_label_graph(Eigen::MatrixXd node_features, const ChapterMap& chapters, const GraphParams& params) {
  LabelGraph g;
  g.adjacency = build_adjacency(node_features, chapters, params.tau, params.bonus);
  g.normalized = normalize_adjacency(g.adjacency);
  g.node_features = std::move(node_features);
  g.tau = params.tau;
  g.bonus = params.bonus;
  return g;
}

double spectral_radius(const Eigen::MatrixXd& m, std::size_t iterations) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 0.01 * static_cast<double>(i % 7);
  v.normalize();
  double estimate = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    Eigen::VectorXd w = m * v;
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    estimate = n;
    v = w / n;
  }
  return estimate;
}

void write_edge_list(const LabelGraph& graph, const std::vector<std::string>& names,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "source,target,source_name,target_name\n";
  for (Eigen::Index i = 0; i < graph.adjacency.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < graph.adjacency.cols(); ++j) {
      if (graph.adjacency(i, j)) {
        out << i << ',' << j << ',' << csv::escape(names[static_cast<std::size_t>(i)]) << ','
            << csv::escape(names[static_cast<std::size_t>(j)]) << '\n';
      }
    }
  }
}

}  // namespace clignet
