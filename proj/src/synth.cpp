#include "clignet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>

#include "clignet/csv.hpp"
#include "clignet/errors.hpp"
#include "clignet/rng.hpp"

namespace clignet {

const std::vector<std::string>& synth_class_names() {
  static const std::vector<std::string> names{
      "Neurology",   "Neurosurgery",  "Nephrology",  "Urology",          "Orthopedic",
      "Podiatry",    "Dermatology",   "Cosmetic / Plastic Surgery",      "Gastroenterology",
      "Dentistry",   "Psychiatry / Psychology", "Sleep Medicine",      "Obstetrics / Gynecology",
      "Pediatrics - Neonatal",        "Hematology - Oncology",           "Allergy / Immunology"};
  return names;
}

std::string synth_csv(const SynthOptions& o) {
  if (o.classes < 2) throw InputError("synthetic corpus needs at least 2 classes");
  if (o.min_words == 0 || o.max_words < o.min_words) throw InputError("synthetic word range is invalid");
  Rng rng(o.seed);

  std::vector<std::size_t> sizes = o.class_sizes;
  if (sizes.empty()) {
    // Skewed weights 1, 1/2^0.5, ..., rescaled so the sizes sum to `documents`.
    std::vector<double> w(o.classes);
    double total = 0.0;
    for (std::size_t c = 0; c < o.classes; ++c) total += w[c] = 1.0 / std::sqrt(1.0 + static_cast<double>(c % 4));
    std::size_t used = 0;
    for (std::size_t c = 0; c < o.classes; ++c) {
      sizes.push_back(std::max<std::size_t>(3, static_cast<std::size_t>(w[c] / total * static_cast<double>(o.documents))));
      used += sizes.back();
    }
    for (std::size_t c = 0; used < o.documents; c = (c + 1) % o.classes, ++used) ++sizes[c];
  }
  if (sizes.size() != o.classes) throw InputError("class_sizes length differs from the class count");

  const auto& base_names = synth_class_names();
  const auto name_of = [&](std::size_t c) {
    return c < base_names.size() ? base_names[c] : "Specialty " + std::to_string(c);
  };

  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < o.classes; ++c) labels.insert(labels.end(), sizes[c], c);
  rng.shuffle(std::span(labels));

  std::ostringstream out;
  csv::write_row(out, {"", "description", "medical_specialty", "sample_name", "transcription", "keywords"});
  std::size_t row = 0;
  std::size_t empties_left = o.empty_transcriptions;
  const std::size_t total_rows = labels.size() + o.empty_transcriptions;
  for (std::size_t i = 0; i < total_rows; ++i) {
    // Spread blank rows evenly through the file.
    const bool blank = empties_left > 0 && (i * o.empty_transcriptions) / total_rows !=
                                                ((i + 1) * o.empty_transcriptions) / total_rows;
    if (blank) {
      --empties_left;
      csv::write_row(out, {std::to_string(row++), "blank record", " " + name_of(i % o.classes), "blank", i % 2 ? "" : "  ", ""});
      continue;
    }
    const std::size_t c = labels.at(i - (o.empty_transcriptions - empties_left));
    const std::size_t pair = c / 2;
    const std::size_t len = o.min_words + rng.below(o.max_words - o.min_words + 1);
    std::string text;
    for (std::size_t w = 0; w < len; ++w) {
      const double u = rng.uniform();
      std::string word;
      if (u < o.class_share) word = "c" + std::to_string(c) + "w" + std::to_string(rng.below(o.class_vocab));
      else if (u < o.class_share + o.pair_share) word = "p" + std::to_string(pair) + "w" + std::to_string(rng.below(o.pair_vocab));
      else word = "g" + std::to_string(rng.below(o.common_vocab));
      if (!text.empty()) text += (w % 17 == 0) ? ", " : " ";
      text += word;
    }
    text += '.';
    csv::write_row(out, {std::to_string(row++), "Synthetic note " + std::to_string(i), " " + name_of(c),
                         "Sample " + std::to_string(i), text, "synthetic"});
  }
  return out.str();
}

}  // namespace clignet
