// Batch command-line driver: ingest, train, calibrate, evaluate, attribute,
// ablate, plus a generator for planted synthetic corpora.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "clignet/config.hpp"
#include "clignet/errors.hpp"
#include "clignet/pipeline.hpp"
#include "clignet/synth.hpp"

namespace {

std::vector<clignet::Mode> parse_modes(const std::string& list) {
  std::vector<clignet::Mode> modes;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) modes.push_back(clignet::parse_mode(item));
  }
  return modes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-graph clinical document classifier"};
  app.require_subcommand(1);

  std::string config_path, run_dir = "run", mode_text;
  std::uint64_t seed = 0;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (key=value lines)");
    cmd->add_option("--seed", seed, "overrides run.seed");
    cmd->add_option("--mode", mode_text, "B1, B6, B8, A1, A2, A4 or A5");
    cmd->add_option("--run-dir", run_dir, "run directory")->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest", "clean and split the transcription CSV");
  std::string csv_path;
  ingest->add_option("csv", csv_path, "MTSamples-style CSV (defaults to data.csv in the config)");
  add_common(ingest);

  auto* train = app.add_subcommand("train", "build the label graph and train the model");
  add_common(train);
  auto* calibrate = app.add_subcommand("calibrate", "fit Platt scaling and decision thresholds");
  add_common(calibrate);

  auto* evaluate = app.add_subcommand("evaluate", "score the test split");
  std::string compare;
  evaluate->add_option("--compare", compare, "comma-separated modes for pairwise McNemar tests");
  add_common(evaluate);

  auto* attribute = app.add_subcommand("attribute", "integrated-gradients token attributions");
  std::vector<std::size_t> records;
  attribute->add_option("--records", records, "record ids (default: first test documents)")->delimiter(',');
  add_common(attribute);

  auto* ablate = app.add_subcommand("ablate", "train and evaluate the A1, A2, A4, A5 variants");
  add_common(ablate);

  auto* synth = app.add_subcommand("synth", "write a planted synthetic corpus as CSV");
  clignet::SynthOptions so;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output CSV path")->required();
  synth->add_option("--classes", so.classes)->capture_default_str();
  synth->add_option("--docs", so.documents)->capture_default_str();
  synth->add_option("--seed", so.seed)->capture_default_str();
  synth->add_option("--empty", so.empty_transcriptions, "extra rows with blank transcriptions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      std::ofstream out(synth_out, std::ios::binary);
      if (!out) throw clignet::InputError("cannot write " + synth_out);
      out << clignet::synth_csv(so);
      return 0;
    }
    clignet::RunOptions opts;
    opts.run_dir = run_dir;
    if (!config_path.empty()) opts.config_path = config_path;
    if (!mode_text.empty()) opts.mode = clignet::parse_mode(mode_text);
    for (auto* cmd : app.get_subcommands()) {
      if (cmd->count("--seed") > 0) opts.seed = seed;
    }

    if (ingest->parsed()) clignet::cmd_ingest(csv_path, opts);
    else if (train->parsed()) clignet::cmd_train(opts);
    else if (calibrate->parsed()) clignet::cmd_calibrate(opts);
    else if (evaluate->parsed()) {
      const auto report = clignet::cmd_evaluate(opts, parse_modes(compare));
      std::printf("macro_f1 %.6f  micro_f1 %.6f  accuracy %.6f  hamming %.6f  ece %.6f\n", report.macro_f1,
                  report.micro_f1, report.accuracy, report.hamming, report.ece);
    } else if (attribute->parsed()) clignet::cmd_attribute(opts, records);
    else if (ablate->parsed()) clignet::cmd_ablate(opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return clignet::exit_code_for(e);
  }
  return 0;
}
