#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>

#include "clignet/corpus.hpp"
#include "clignet/csv.hpp"
#include "clignet/errors.hpp"
#include "clignet/rng.hpp"
#include "clignet/synth.hpp"

using namespace clignet;

namespace {

const char* kHeader = ",description,medical_specialty,sample_name,transcription,keywords\n";

std::string fixture_rows(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::string text = kHeader;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    text += std::to_string(i) + ",desc," + rows[i].first + ",name," + csv::escape(rows[i].second) + ",kw\n";
  }
  return text;
}

Corpus sized_corpus(const std::vector<std::size_t>& sizes) {
  std::vector<RawRecord> raw;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      RawRecord r;
      r.row = raw.size() + 1;
      r.medical_specialty = "class" + std::to_string(c);
      r.transcription = "text " + std::to_string(i);
      raw.push_back(r);
    }
  }
  return clean(raw);
}

}  // namespace

TEST(LoadCsv, HeaderOnlyGivesNoRecords) { EXPECT_TRUE(parse_records(kHeader).empty()); }

TEST(LoadCsv, MissingCellBecomesEmpty) {
  const std::string text = std::string(kHeader) + "0,d,Surgery,n,hello,k\n1,d,Urology,n,,k\n2,d,Surgery,n,bye,\n";
  const auto raw = parse_records(text);
  ASSERT_EQ(raw.size(), 3u);
  EXPECT_EQ(raw[1].transcription, "");
  EXPECT_EQ(raw[2].keywords, "");
  EXPECT_EQ(raw[2].row, 3u);
}

TEST(LoadCsv, MissingColumnIsNamed) {
  try {
    parse_records("description,medical_specialty,sample_name,keywords\n");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("transcription"), std::string::npos);
  }
}

TEST(LoadCsv, MissingFileFails) { EXPECT_THROW(load_csv("/nonexistent/mtsamples.csv"), InputError); }

TEST(Clean, DropsWhitespaceOnlyTranscriptions) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({i % 2 ? " Surgery" : "Urology ", i == 3 || i == 7 ? " \t " : "text"});
  const Corpus c = clean(parse_records(fixture_rows(rows)));
  EXPECT_EQ(c.size(), 8u);
  EXPECT_EQ(c.labels.names, (std::vector<std::string>{"Urology", "Surgery"}));
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c.records[i].id, i);
}

TEST(Clean, NothingSurvivingFails) {
  EXPECT_THROW(clean(parse_records(fixture_rows({{"Surgery", " "}}))), InputError);
}

TEST(Clean, SyntheticFullSizeCorpus) {
  SynthOptions o;
  o.classes = 40;
  o.documents = 4966;
  o.empty_transcriptions = 33;
  o.min_words = 3;
  o.max_words = 8;
  const auto raw = parse_records(synth_csv(o));
  ASSERT_EQ(raw.size(), 4999u);
  const Corpus c = clean(raw);
  EXPECT_EQ(c.size(), 4966u);
  EXPECT_EQ(c.num_labels(), 40u);
  const auto split = stratified_split(c, {0.70, 0.15, 0.15}, 42);
  EXPECT_EQ(split.totals(), (std::array<std::size_t, 3>{3476, 745, 745}));
}

TEST(LargestRemainder, Examples) {
  EXPECT_EQ(largest_remainder(4966, {0.70, 0.15, 0.15}), (std::array<std::size_t, 3>{3476, 745, 745}));
  EXPECT_EQ(largest_remainder(10, {0.70, 0.15, 0.15}), (std::array<std::size_t, 3>{7, 2, 1}));
  EXPECT_EQ(largest_remainder(5, {1.0, 0.0, 0.0}), (std::array<std::size_t, 3>{5, 0, 0}));
}

TEST(Split, SingleClassOfTen) {
  const auto split = stratified_split(sized_corpus({10}), {0.70, 0.15, 0.15}, 42);
  EXPECT_EQ(split.totals(), (std::array<std::size_t, 3>{7, 2, 1}));
}

TEST(Split, AllTrain) {
  const auto split = stratified_split(sized_corpus({4, 6}), {1.0, 0.0, 0.0}, 1);
  EXPECT_EQ(split.totals(), (std::array<std::size_t, 3>{10, 0, 0}));
}

TEST(Split, FractionsMustSumToOne) {
  EXPECT_THROW(stratified_split(sized_corpus({5}), {0.7, 0.2, 0.2}, 1), InputError);
}

TEST(Split, TinyClassesFillTrainFirst) {
  const Corpus c = sized_corpus({1, 2, 30});
  const auto split = stratified_split(c, {0.70, 0.15, 0.15}, 3);
  for (const auto& r : c.records) {
    if (r.label == 0) EXPECT_EQ(split.split[r.id], Split::train);
  }
  std::map<Split, int> second;
  for (const auto& r : c.records) {
    if (r.label == 1) ++second[split.split[r.id]];
  }
  EXPECT_EQ(second[Split::train], 1);
  EXPECT_EQ(second[Split::val], 1);
}

TEST(Split, PropertiesOnSkewedSyntheticCorpora) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    Rng rng(seed);
    std::vector<std::size_t> sizes;
    for (int c = 0; c < 12; ++c) sizes.push_back(1 + rng.below(150));
    const Corpus corpus = sized_corpus(sizes);
    const SplitFractions f{0.70, 0.15, 0.15};
    const auto split = stratified_split(corpus, f, seed);
    ASSERT_EQ(split.split.size(), corpus.size());
    EXPECT_EQ(split.totals(), largest_remainder(corpus.size(), f));

    std::set<std::size_t> seen;
    for (int s = 0; s < 3; ++s) {
      for (auto id : split.ids(static_cast<Split>(s))) EXPECT_TRUE(seen.insert(id).second);
    }
    EXPECT_EQ(seen.size(), corpus.size());

    for (std::size_t c = 0; c < sizes.size(); ++c) {
      if (sizes[c] < 20) continue;
      std::array<double, 3> got{};
      for (const auto& r : corpus.records) {
        if (r.label == static_cast<int>(c)) got[static_cast<std::size_t>(split.split[r.id])] += 1;
      }
      for (int s = 0; s < 3; ++s) EXPECT_LE(std::abs(got[s] - f[s] * sizes[c]), 1.0) << "seed " << seed << " class " << c << " size " << sizes[c] << " split " << s << " got " << got[s];
    }

    const auto again = stratified_split(corpus, f, seed);
    EXPECT_EQ(again.split, split.split);
  }
}

TEST(Stats, ImbalanceAndSmallClasses) {
  const Corpus c = sized_corpus({30, 10, 5});
  const auto split = stratified_split(c, {0.70, 0.15, 0.15}, 42);
  const auto st = corpus_stats(c, split);
  EXPECT_DOUBLE_EQ(st.imbalance_ratio, 6.0);
  EXPECT_EQ(st.classes_below_20_train, 2u);
  EXPECT_EQ(st.largest_label, 0u);
  EXPECT_EQ(st.smallest_label, 2u);

  const Corpus balanced = sized_corpus({10, 10});
  EXPECT_DOUBLE_EQ(corpus_stats(balanced, stratified_split(balanced, {0.7, 0.15, 0.15}, 1)).imbalance_ratio, 1.0);
}

TEST(Store, CorpusAndSplitRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "clignet_store_test";
  std::filesystem::create_directories(dir);
  const Corpus c = clean(parse_records(fixture_rows({{"A", "one, \"two\"\nthree"}, {"B", "x"}, {"A", "y"}})));
  const auto split = stratified_split(c, {0.70, 0.15, 0.15}, 42);
  write_corpus_store(c, dir / "corpus.csv");
  write_split_manifest(split, dir / "split.csv");
  const Corpus back = read_corpus_store(dir / "corpus.csv");
  ASSERT_EQ(back.size(), c.size());
  EXPECT_EQ(back.records[0].transcription, c.records[0].transcription);
  EXPECT_EQ(back.labels.names, c.labels.names);
  EXPECT_EQ(read_split_manifest(dir / "split.csv", c.size()).split, split.split);
  EXPECT_THROW(read_corpus_store(dir / "absent.csv"), MissingArtifactError);
  std::filesystem::remove_all(dir);
}
