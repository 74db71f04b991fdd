#include "clignet/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "clignet/csv.hpp"
#include "clignet/errors.hpp"
#include "clignet/rng.hpp"
#include "clignet/text.hpp"

namespace clignet {

namespace {

constexpr std::array<std::string_view, 5> kRequiredColumns = {
    "description", "medical_specialty", "sample_name", "transcription", "keywords"};

// Remainders closer than this count as tied.
constexpr double kTieEps = 1e-9;

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool blank_row(const csv::Row& row) { return row.size() == 1 && row[0].empty(); }

}  // namespace

std::optional<int> LabelVocabulary::find(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw InputError("unknown split name '" + std::string(text) + "'");
}

std::vector<std::size_t> SplitAssignment::ids(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == which) out.push_back(i);
  }
  return out;
}

std::array<std::size_t, 3> SplitAssignment::totals() const {
  std::array<std::size_t, 3> t{};
  for (const Split s : split) ++t[static_cast<std::size_t>(s)];
  return t;
}

std::vector<RawRecord> parse_records(std::string_view csv_text) {
  const auto rows = csv::parse(csv_text);
  if (rows.empty()) throw InputError("CSV has no header row");

  const auto& header = rows.front();
  std::array<std::size_t, kRequiredColumns.size()> column{};
  for (std::size_t c = 0; c < kRequiredColumns.size(); ++c) {
    const auto it = std::find_if(header.begin(), header.end(),
                                 [&](const std::string& h) { return trim(h) == kRequiredColumns[c]; });
    if (it == header.end()) {
      throw InputError("CSV is missing required column '" + std::string(kRequiredColumns[c]) + "'");
    }
    column[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<RawRecord> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (blank_row(row)) continue;
    if (row.size() > header.size()) {
      throw InputError("malformed CSV at row " + std::to_string(r) + ": " + std::to_string(row.size()) +
                       " fields, header has " + std::to_string(header.size()));
    }
    const auto cell = [&](std::size_t c) -> std::string {
      return column[c] < row.size() ? row[column[c]] : std::string();
    };
    out.push_back(RawRecord{r, cell(0), cell(1), cell(2), cell(3), cell(4)});
  }
  return out;
}

std::vector<RawRecord> load_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("CSV file not found: " + path.string());
  return parse_records(slurp(path));
}

Corpus clean(const std::vector<RawRecord>& raw) {
  Corpus corpus;
  std::unordered_map<std::string, int> label_of;
  for (const auto& r : raw) {
    if (word_count(r.transcription) == 0) continue;
    const std::string name = trim(r.medical_specialty);
    auto [it, inserted] = label_of.try_emplace(name, static_cast<int>(corpus.labels.names.size()));
    if (inserted) corpus.labels.names.push_back(name);
    corpus.records.push_back(
        Record{corpus.records.size(), r.description, it->second, r.sample_name, r.transcription, r.keywords});
  }
  if (corpus.records.empty()) throw InputError("no records survive cleaning");
  corpus.labels.counts.assign(corpus.labels.names.size(), 0);
  return corpus;
}

std::array<std::size_t, 3> largest_remainder(std::size_t n, const SplitFractions& fractions) {
  std::array<std::size_t, 3> alloc{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double q = static_cast<double>(n) * fractions[s];
    alloc[s] = static_cast<std::size_t>(std::floor(q + kTieEps));
    rem[s] = std::max(0.0, q - static_cast<double>(alloc[s]));
    assigned += alloc[s];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + kTieEps; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3, ++assigned) ++alloc[order[k]];
  return alloc;
}

SplitAssignment stratified_split(const Corpus& corpus, const SplitFractions& fractions,
                                 std::uint64_t seed) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("split fractions must sum to 1");
  for (const double f : fractions) {
    if (f < 0.0) throw InputError("split fractions must be non-negative");
  }

  const std::size_t k_labels = corpus.num_labels();
  std::vector<std::vector<std::size_t>> members(k_labels);
  for (const auto& r : corpus.records) members[static_cast<std::size_t>(r.label)].push_back(r.id);

  Rng rng(seed);
  for (auto& ids : members) rng.shuffle(std::span(ids));

  // alloc[c][s]: records of class c assigned to split s; extra[c][s] marks a +1 on top of the floor.
  std::vector<std::array<std::size_t, 3>> alloc(k_labels);
  std::vector<std::array<double, 3>> rem(k_labels);
  std::vector<std::array<bool, 3>> extra(k_labels, {false, false, false});
  std::vector<std::size_t> leftover(k_labels, 0);

  for (std::size_t c = 0; c < k_labels; ++c) {
    const std::size_t n = members[c].size();
    if (n < 3) {
      for (std::size_t i = 0; i < n; ++i) alloc[c][i] = 1;
      continue;
    }
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const double q = static_cast<double>(n) * fractions[s];
      alloc[c][s] = static_cast<std::size_t>(std::floor(q + kTieEps));
      rem[c][s] = std::max(0.0, q - static_cast<double>(alloc[c][s]));
      assigned += alloc[c][s];
    }
    leftover[c] = n - assigned;
  }

  const auto target = largest_remainder(corpus.size(), fractions);
  std::array<long long, 3> residual{};
  for (std::size_t s = 0; s < 3; ++s) {
    long long used = 0;
    for (std::size_t c = 0; c < k_labels; ++c) used += static_cast<long long>(alloc[c][s]);
    residual[s] = static_cast<long long>(target[s]) - used;
  }
  const bool reconcile = std::all_of(residual.begin(), residual.end(), [](long long r) { return r >= 0; });

  struct Candidate {
    std::size_t label;
    std::size_t split;
    double rem;
  };
  std::vector<Candidate> candidates;
  for (std::size_t c = 0; c < k_labels; ++c) {
    if (leftover[c] == 0) continue;
    for (std::size_t s = 0; s < 3; ++s) candidates.push_back({c, s, rem[c][s]});
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (std::abs(a.rem - b.rem) > kTieEps) return a.rem > b.rem;
    if (a.split != b.split) return a.split < b.split;
    return a.label < b.label;
  });

  const auto give = [&](std::size_t c, std::size_t s) {
    ++alloc[c][s];
    extra[c][s] = true;
    --leftover[c];
    --residual[s];
  };

  if (reconcile) {
    for (const auto& cand : candidates) {
      if (leftover[cand.label] > 0 && residual[cand.split] > 0 && !extra[cand.label][cand.split]) {
        give(cand.label, cand.split);
      }
    }
    // Records the greedy pass could not place: search for a chain of moves
    // c -> s1, c1 moves s1 -> s2, ... ending in a split with spare capacity,
    // so no class takes two extras in one split.
    const auto augment = [&](std::size_t c) {
      struct Step {
        std::size_t label;
        std::size_t split;
        std::size_t parent;
      };
      std::vector<Step> steps;
      std::vector<bool> seen_label(k_labels, false);
      std::array<bool, 3> seen_split{};
      std::vector<std::size_t> frontier{c};
      std::vector<std::size_t> from_step{SIZE_MAX};
      seen_label[c] = true;
      for (std::size_t head = 0; head < frontier.size(); ++head) {
        const std::size_t u = frontier[head];
        for (std::size_t s = 0; s < 3; ++s) {
          if (extra[u][s] || seen_split[s] || fractions[s] <= 0.0) continue;
          seen_split[s] = true;
          steps.push_back({u, s, from_step[head]});
          const std::size_t idx = steps.size() - 1;
          if (residual[s] > 0) {
            for (std::size_t i = idx; i != SIZE_MAX; i = steps[i].parent) {
              const std::size_t parent = steps[i].parent;
              // The class of step i leaves the split it entered at its parent step.
              if (parent != SIZE_MAX) {
                extra[steps[i].label][steps[parent].split] = false;
                --alloc[steps[i].label][steps[parent].split];
              }
              ++alloc[steps[i].label][steps[i].split];
              extra[steps[i].label][steps[i].split] = true;
            }
            --leftover[c];
            --residual[s];
            return true;
          }
          for (std::size_t v = 0; v < k_labels; ++v) {
            if (!seen_label[v] && extra[v][s]) {
              seen_label[v] = true;
              frontier.push_back(v);
              from_step.push_back(idx);
            }
          }
        }
      }
      return false;
    };
    for (std::size_t c = 0; c < k_labels; ++c) {
      while (leftover[c] > 0 && augment(c)) {
      }
      for (std::size_t s = 0; s < 3 && leftover[c] > 0; ++s) {
        while (residual[s] > 0 && leftover[c] > 0) give(c, s);
      }
    }
  } else {
    // Tiny classes overfilled some split; fall back to per-class rounding only.
    for (const auto& cand : candidates) {
      if (leftover[cand.label] > 0 && !extra[cand.label][cand.split]) give(cand.label, cand.split);
    }
  }

  SplitAssignment out;
  out.fractions = fractions;
  out.seed = seed;
  out.split.assign(corpus.size(), Split::train);
  for (std::size_t c = 0; c < k_labels; ++c) {
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t i = 0; i < alloc[c][s]; ++i) out.split[members[c][pos++]] = static_cast<Split>(s);
    }
  }
  return out;
}

std::vector<std::size_t> train_label_counts(const Corpus& corpus, const SplitAssignment& split) {
  std::vector<std::size_t> counts(corpus.num_labels(), 0);
  for (const auto& r : corpus.records) {
    if (split.split[r.id] == Split::train) ++counts[static_cast<std::size_t>(r.label)];
  }
  return counts;
}

CorpusStats corpus_stats(const Corpus& corpus, const SplitAssignment& split, std::size_t window_tokens) {
  CorpusStats st;
  st.num_records = corpus.size();
  st.num_labels = corpus.num_labels();
  st.split_totals = split.totals();
  st.window_tokens = window_tokens;
  st.class_counts.assign(st.num_labels, 0);
  for (const auto& r : corpus.records) ++st.class_counts[static_cast<std::size_t>(r.label)];
  st.train_counts = train_label_counts(corpus, split);

  if (st.num_labels > 0) {
    const auto [mn, mx] = std::minmax_element(st.class_counts.begin(), st.class_counts.end());
    st.largest_label = static_cast<std::size_t>(mx - st.class_counts.begin());
    st.smallest_label = static_cast<std::size_t>(mn - st.class_counts.begin());
    st.imbalance_ratio = *mn > 0 ? static_cast<double>(*mx) / static_cast<double>(*mn) : 0.0;
  }
  st.classes_below_20_train = static_cast<std::size_t>(
      std::count_if(st.train_counts.begin(), st.train_counts.end(), [](std::size_t n) { return n < 20; }));

  std::vector<std::size_t> words;
  words.reserve(corpus.size());
  std::size_t over = 0;
  for (const auto& r : corpus.records) {
    words.push_back(word_count(r.transcription));
    if (tokenize(r.transcription).size() > window_tokens) ++over;
  }
  if (!words.empty()) {
    std::sort(words.begin(), words.end());
    const std::size_t m = words.size() / 2;
    st.median_word_count = words.size() % 2 ? static_cast<double>(words[m])
                                            : 0.5 * static_cast<double>(words[m - 1] + words[m]);
    st.fraction_over_window = static_cast<double>(over) / static_cast<double>(words.size());
  }
  return st;
}

std::string format_stats(const Corpus& corpus, const CorpusStats& st) {
  std::ostringstream out;
  out << std::setprecision(6);
  out << "records: " << st.num_records << '\n';
  out << "labels: " << st.num_labels << '\n';
  out << "train: " << st.split_totals[0] << '\n';
  out << "val: " << st.split_totals[1] << '\n';
  out << "test: " << st.split_totals[2] << '\n';
  if (st.num_labels > 0) {
    out << "largest_class: " << corpus.labels.names[st.largest_label] << " ("
        << st.class_counts[st.largest_label] << ")\n";
    out << "smallest_class: " << corpus.labels.names[st.smallest_label] << " ("
        << st.class_counts[st.smallest_label] << ")\n";
  }
  out << "imbalance_ratio: " << st.imbalance_ratio << '\n';
  out << "classes_below_20_train: " << st.classes_below_20_train << '\n';
  out << "median_word_count: " << st.median_word_count << '\n';
  out << "fraction_over_" << st.window_tokens << "_tokens: " << st.fraction_over_window << '\n';
  out << "per_class: label,name,total,train\n";
  for (std::size_t k = 0; k < st.num_labels; ++k) {
    out << "  " << k << ',' << csv::escape(corpus.labels.names[k]) << ',' << st.class_counts[k] << ','
        << st.train_counts[k] << '\n';
  }
  return out.str();
}

void write_corpus_store(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  csv::write_row(out, {"id", "label", "medical_specialty", "description", "sample_name", "transcription", "keywords"});
  for (const auto& r : corpus.records) {
    csv::write_row(out, {std::to_string(r.id), std::to_string(r.label),
                         corpus.labels.names[static_cast<std::size_t>(r.label)], r.description, r.sample_name,
                         r.transcription, r.keywords});
  }
}

Corpus read_corpus_store(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError(path.string());
  const auto rows = csv::parse(slurp(path));
  if (rows.empty() || rows[0].size() != 7 || rows[0][0] != "id") {
    throw InputError("corpus store has an unexpected header: " + path.string());
  }
  Corpus corpus;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (blank_row(row)) continue;
    if (row.size() != 7) throw InputError("corpus store row " + std::to_string(r) + " has wrong width");
    const std::size_t id = std::stoul(row[0]);
    const int label = std::stoi(row[1]);
    if (id != corpus.records.size()) throw InputError("corpus store ids are not dense at row " + std::to_string(r));
    if (label == static_cast<int>(corpus.labels.names.size())) {
      corpus.labels.names.push_back(row[2]);
    } else if (label < 0 || label > static_cast<int>(corpus.labels.names.size()) ||
               corpus.labels.names[static_cast<std::size_t>(label)] != row[2]) {
      throw InputError("corpus store label ids inconsistent at row " + std::to_string(r));
    }
    corpus.records.push_back(Record{id, row[3], label, row[4], row[5], row[6]});
  }
  corpus.labels.counts.assign(corpus.labels.names.size(), 0);
  return corpus;
}

void write_split_manifest(const SplitAssignment& split, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "record_id,split\n";
  for (std::size_t i = 0; i < split.split.size(); ++i) out << i << ',' << to_string(split.split[i]) << '\n';
}

SplitAssignment read_split_manifest(const std::filesystem::path& path, std::size_t num_records) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError(path.string());
  const auto rows = csv::parse(slurp(path));
  SplitAssignment out;
  out.split.assign(num_records, Split::train);
  std::vector<bool> seen(num_records, false);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (blank_row(rows[r])) continue;
    if (rows[r].size() != 2) throw InputError("split manifest row " + std::to_string(r) + " malformed");
    const std::size_t id = std::stoul(rows[r][0]);
    if (id >= num_records || seen[id]) throw InputError("split manifest has bad record id " + rows[r][0]);
    seen[id] = true;
    out.split[id] = parse_split(rows[r][1]);
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw InputError("split manifest does not cover every record");
  }
  return out;
}

}  // namespace clignet
