// tools/kws_main.cpp

// Copyright 2026 the qbe-kws authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// kws — query-by-example keyword spotting toolkit.
//
// Subcommands chain into the full pipeline: gen-synth (or extract-features
// on real WAV data) -> dtw-search -> make-targets -> train-cnn-dtw -> spot
// -> evaluate, with train-sae/encode-sae and import-features providing
// alternative feature representations and train-classifier the supervised
// baseline.  Every subcommand drops a run_info.json with the resolved
// config and input digests next to its outputs.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "kws/archive.hpp"
#include "kws/config.hpp"
#include "kws/dtw.hpp"
#include "kws/eval.hpp"
#include "kws/manifest.hpp"
#include "kws/mfcc.hpp"
#include "kws/sae.hpp"
#include "kws/spotter.hpp"
#include "kws/synthetic.hpp"
#include "kws/wav.hpp"

namespace fs = std::filesystem;

namespace {

struct CliState {
  std::string config_path;
  std::vector<std::string> overrides;
  kws::RunConfig config;
  std::string out_dir;

  // inputs recorded for provenance: label -> path
  std::vector<std::pair<std::string, fs::path>> inputs;

  fs::path out(const std::string& name) const { return fs::path(out_dir) / name; }

  void resolve_config() {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw kws::ConfigError("cannot open config file: " + config_path);
      try {
        is >> j;
      } catch (const nlohmann::json::exception& e) {
        throw kws::ConfigError("cannot parse config JSON: " + std::string(e.what()));
      }
    }
    for (const auto& assignment : overrides) kws::apply_override(j, assignment);
    config = kws::config_from_json(j);
  }

  fs::path track(const std::string& label, const std::string& path) {
    if (path.empty()) throw kws::MissingInput("missing required input: " + label);
    fs::path p(path);
    if (!fs::exists(p)) throw kws::MissingInput(label + " not found: " + path);
    inputs.emplace_back(label, p);
    return p;
  }

  void write_run_info(const std::string& command,
                      const std::vector<std::string>& outputs) const {
    nlohmann::json info;
    info["command"] = command;
    info["config"] = kws::config_to_json(config);
    info["config_digest"] = kws::digest_hex(kws::config_digest(config));
    nlohmann::json ins = nlohmann::json::object();
    for (const auto& [label, path] : inputs) {
      ins[label] = {{"path", path.string()},
                    {"digest", kws::digest_hex(kws::file_digest(path))}};
    }
    info["inputs"] = ins;
    info["outputs"] = outputs;
    std::ofstream os(out("run_info.json"));
    os << info.dump(2) << "\n";
  }

  void prepare_out() const {
    if (out_dir.empty()) throw kws::ConfigError("--out is required");
    fs::create_directories(out_dir);
  }
};

kws::FeatureMap load_features(const fs::path& path) { return kws::read_archive(path); }

// --- subcommands ---

void cmd_gen_synth(CliState& st) {
  st.prepare_out();
  kws::SyntheticSpec spec = st.config.synth;
  spec.seed = st.config.substream_seed("corpus");
  const auto corpus = kws::generate_synthetic(spec);

  kws::save_manifest(corpus.manifest, st.out("manifest.tsv"));
  kws::save_ground_truth(corpus.ground_truth, st.out("ground_truth.tsv"));
  kws::save_keyword_set(corpus.keyword_set, st.out("keywords.tsv"));
  kws::write_archive(corpus.exemplar_features, st.out("exemplars.qbef"));
  std::vector<std::string> outputs = {"manifest.tsv", "ground_truth.tsv",
                                      "keywords.tsv", "exemplars.qbef"};
  for (const auto& [split, feats] : corpus.utterance_features) {
    const std::string name = std::string("features_") + kws::split_name(split) + ".qbef";
    kws::write_archive(feats, st.out(name));
    outputs.push_back(name);
  }
  st.write_run_info("gen-synth", outputs);
  std::cout << "gen-synth: " << corpus.manifest.entries.size() << " utterances, "
            << corpus.keyword_set.keywords.size() << " keywords, "
            << corpus.ground_truth.size() << " occurrences -> " << st.out_dir << "\n";
}

void cmd_extract_features(CliState& st, const std::string& manifest_path,
                          const std::string& split_filter, const std::string& name) {
  st.prepare_out();
  const fs::path mpath = st.track("manifest", manifest_path);
  const kws::Manifest manifest = kws::load_manifest(mpath);
  kws::FeatureMap features;
  for (const auto& entry : manifest.entries) {
    if (!split_filter.empty() && kws::split_name(entry.split) != split_filter) continue;
    const kws::Waveform wav = kws::load_wav(mpath.parent_path() / entry.path);
    features.emplace(entry.id, kws::mfcc(wav, st.config.mfcc));
  }
  kws::write_archive(features, st.out(name));
  st.write_run_info("extract-features", {name});
  std::cout << "extract-features: " << features.size() << " records -> "
            << st.out(name).string() << "\n";
}

void cmd_train_sae(CliState& st, const std::string& features_path) {
  st.prepare_out();
  const auto feats = load_features(st.track("features", features_path));
  kws::SaeConfig cfg = st.config.sae;
  cfg.seed = st.config.substream_seed("sae");
  const kws::SaeModel model = kws::train_sae(feats, cfg);
  kws::save_sae(model, st.out("sae.model"));
  st.write_run_info("train-sae", {"sae.model"});
  std::cout << "train-sae: trained on " << feats.size() << " records -> "
            << st.out("sae.model").string() << "\n";
}

void cmd_encode_sae(CliState& st, const std::string& model_path,
                    const std::string& features_path, const std::string& name) {
  st.prepare_out();
  const kws::SaeModel model = kws::load_sae(st.track("model", model_path));
  const auto feats = load_features(st.track("features", features_path));
  kws::FeatureMap encoded;
  for (const auto& [id, m] : feats) encoded.emplace(id, kws::sae_encode(model, m));
  kws::write_archive(encoded, st.out(name));
  st.write_run_info("encode-sae", {name});
  std::cout << "encode-sae: " << encoded.size() << " records -> "
            << st.out(name).string() << "\n";
}

void cmd_import_features(CliState& st, const std::string& archive_path,
                         int expected_dim, const std::string& name) {
  st.prepare_out();
  const auto imported =
      kws::import_external(st.track("archive", archive_path), expected_dim);
  kws::write_archive(imported, st.out(name));
  st.write_run_info("import-features", {name});
  std::cout << "import-features: " << imported.size() << " records of dim "
            << expected_dim << " -> " << st.out(name).string() << "\n";
}

void cmd_dtw_search(CliState& st, const std::string& keywords_path,
                    const std::string& exemplars_path, const std::string& features_path,
                    const std::string& mode_name, const std::string& name) {
  st.prepare_out();
  const auto keywords = kws::load_keyword_set(st.track("keywords", keywords_path));
  const auto exemplars = load_features(st.track("exemplars", exemplars_path));
  const auto utterances = load_features(st.track("features", features_path));
  if (mode_name != "ks" && mode_name != "qbye")
    throw kws::ConfigError("--mode must be ks or qbye");
  const auto mode = mode_name == "ks" ? kws::ScoreMode::ks : kws::ScoreMode::qbye;
  const auto scores = kws::search_corpus(keywords, exemplars, utterances,
                                         st.config.dtw, mode, st.config.workers);
  kws::save_score_matrix(scores, st.out(name));
  st.write_run_info("dtw-search", {name});
  std::cout << "dtw-search[" << mode_name << "]: " << scores.utterance_ids.size()
            << " x " << scores.keyword_ids.size() << " costs -> "
            << st.out(name).string() << "\n";
}

void cmd_make_targets(CliState& st, const std::string& scores_path,
                      const std::string& name) {
  st.prepare_out();
  const auto costs = kws::load_score_matrix(st.track("scores", scores_path));
  if (!costs.lower_is_match)
    throw kws::ConfigError("make-targets expects a lower-is-match cost table");
  const auto targets = kws::make_targets(costs);
  kws::save_score_matrix(kws::targets_to_table(targets, costs.keyword_ids),
                         st.out(name));
  st.write_run_info("make-targets", {name});
  std::cout << "make-targets: " << targets.size() << " target vectors -> "
            << st.out(name).string() << "\n";
}

void cmd_train_classifier(CliState& st, const std::string& keywords_path,
                          const std::string& exemplars_path,
                          const std::string& train_features_path) {
  st.prepare_out();
  const auto keywords = kws::load_keyword_set(st.track("keywords", keywords_path));
  const auto exemplars = load_features(st.track("exemplars", exemplars_path));
  const auto train = load_features(st.track("train_features", train_features_path));
  kws::ClassifierConfig cfg = st.config.classifier;
  cfg.seed = st.config.substream_seed("classifier");
  auto result = kws::train_classifier<float>(keywords, exemplars, train, cfg);
  result.model.config_digest = kws::config_digest(st.config);
  kws::save_spotter(result.model, st.out("classifier.cnn1"));
  st.write_run_info("train-classifier", {"classifier.cnn1"});
  std::cout << "train-classifier: final epoch loss "
            << result.epoch_losses.back() << " -> "
            << st.out("classifier.cnn1").string() << "\n";
}

void cmd_train_cnn_dtw(CliState& st, const std::string& train_features_path,
                       const std::string& targets_path) {
  st.prepare_out();
  const auto train = load_features(st.track("train_features", train_features_path));
  const auto targets = kws::load_score_matrix(st.track("targets", targets_path));
  kws::DistillConfig cfg = st.config.distill;
  cfg.seed = st.config.substream_seed("distill");
  auto result = kws::train_cnn_dtw<float>(train, targets, cfg);
  result.model.config_digest = kws::config_digest(st.config);
  kws::save_spotter(result.model, st.out("cnn_dtw.cnn1"));
  st.write_run_info("train-cnn-dtw", {"cnn_dtw.cnn1"});
  std::cout << "train-cnn-dtw: epoch losses " << result.epoch_losses.front()
            << " -> " << result.epoch_losses.back() << ", model -> "
            << st.out("cnn_dtw.cnn1").string() << "\n";
}

void cmd_spot(CliState& st, const std::string& model_path,
              const std::string& features_path, const std::string& name) {
  st.prepare_out();
  const auto model = kws::load_spotter<float>(st.track("model", model_path));
  const auto utterances = load_features(st.track("features", features_path));
  const auto scores = kws::score_archive(model, utterances, st.config.workers);
  kws::save_score_matrix(scores, st.out(name));
  st.write_run_info("spot", {name});
  std::cout << "spot: " << scores.utterance_ids.size() << " x "
            << scores.keyword_ids.size() << " scores -> " << st.out(name).string()
            << "\n";
}

void cmd_evaluate(CliState& st, const std::vector<std::string>& score_paths,
                  const std::vector<std::string>& systems,
                  const std::vector<std::string>& features,
                  const std::string& manifest_path, const std::string& split_name) {
  st.prepare_out();
  if (score_paths.empty()) throw kws::ConfigError("evaluate needs at least one --scores");
  if (!systems.empty() && systems.size() != score_paths.size())
    throw kws::ConfigError("--system count must match --scores count");
  if (features.size() > 1 && features.size() != score_paths.size())
    throw kws::ConfigError("--feature count must match --scores count (or be one)");

  const fs::path mpath = st.track("manifest", manifest_path);
  const kws::Manifest manifest = kws::load_manifest(mpath, /*check_paths=*/false);
  const kws::Split split = kws::parse_split(split_name);
  std::map<std::string, std::set<std::string>> truth;
  for (const auto& entry : manifest.entries) {
    if (entry.split != split || !entry.transcript_keywords) continue;
    truth[entry.id] = *entry.transcript_keywords;
  }
  if (truth.empty())
    throw kws::MissingGroundTruth("no transcribed entries for split " + split_name);

  std::vector<kws::EvalReport> reports;
  std::vector<std::string> outputs = {"report.csv"};
  for (size_t i = 0; i < score_paths.size(); ++i) {
    const fs::path spath = st.track("scores_" + std::to_string(i), score_paths[i]);
    const auto table = kws::load_score_matrix(spath);
    const std::string system =
        i < systems.size() ? systems[i] : spath.stem().string();
    const std::string feature =
        features.empty() ? st.config.feature_kind
                         : features[features.size() == 1 ? 0 : i];
    auto report = kws::evaluate_scores(system, feature, table, truth);
    for (const auto& [kw, curve] : report.curves) {
      const std::string fname = "roc_" + system + "_" + kw + ".tsv";
      kws::save_roc_points(curve, st.out(fname));
      outputs.push_back(fname);
    }
    std::cout << "evaluate: " << system << " (" << feature << ") pooled AUC "
              << report.pooled.auc_value << " EER " << report.pooled.eer_value
              << "\n";
    reports.push_back(std::move(report));
  }
  kws::save_report_csv(reports, st.out("report.csv"));
  st.write_run_info("evaluate", outputs);
}

void cmd_bench(CliState& st, const std::string& keywords_path,
               const std::string& exemplars_path, const std::string& features_path,
               const std::string& model_path) {
  st.prepare_out();
  const auto keywords = kws::load_keyword_set(st.track("keywords", keywords_path));
  const auto exemplars = load_features(st.track("exemplars", exemplars_path));
  const auto utterances = load_features(st.track("features", features_path));
  const auto model = kws::load_spotter<float>(st.track("model", model_path));

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto dtw_scores = kws::search_corpus(keywords, exemplars, utterances,
                                             st.config.dtw, kws::ScoreMode::ks,
                                             st.config.workers);
  const auto t1 = clock::now();
  const auto model_scores = kws::score_archive(model, utterances, st.config.workers);
  const auto t2 = clock::now();

  const double dtw_seconds = std::chrono::duration<double>(t1 - t0).count();
  const double spot_seconds = std::chrono::duration<double>(t2 - t1).count();
  const auto n = static_cast<double>(utterances.size());

  std::ofstream os(st.out("timing.csv"));
  os << "system,utterances,seconds,utterances_per_second\n";
  os << "dtw-search," << utterances.size() << "," << dtw_seconds << ","
     << (n / dtw_seconds) << "\n";
  os << "spot," << utterances.size() << "," << spot_seconds << ","
     << (n / spot_seconds) << "\n";
  os.close();

  // scores from both systems, for sanity-checking the comparison offline
  kws::save_score_matrix(dtw_scores, st.out("bench_dtw_scores.tsv"));
  kws::save_score_matrix(model_scores, st.out("bench_spot_scores.tsv"));
  st.write_run_info("bench", {"timing.csv", "bench_dtw_scores.tsv",
                              "bench_spot_scores.tsv"});
  std::cout << "bench: dtw-search " << dtw_seconds << " s, spot " << spot_seconds
            << " s, speedup x" << (dtw_seconds / spot_seconds) << " ("
            << st.config.workers << " workers each)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"query-by-example keyword spotting toolkit"};
  app.require_subcommand(1);

  CliState st;
  app.add_option("--config", st.config_path, "JSON run configuration file");
  app.add_option("--set", st.overrides,
                 "override a config key, e.g. --set seed=7 (repeatable)");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", st.out_dir, "output directory")->required();
  };

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate the seeded synthetic corpus");
  add_common(gen);

  // extract-features
  std::string manifest_path, split_filter, archive_name = "features.qbef";
  auto* extract = app.add_subcommand("extract-features",
                                     "compute MFCC features for a WAV manifest");
  add_common(extract);
  extract->add_option("--manifest", manifest_path, "corpus manifest")->required();
  extract->add_option("--split", split_filter, "only this split (train|dev|test)");
  extract->add_option("--name", archive_name, "output archive file name");

  // train-sae
  std::string features_path;
  auto* tsae = app.add_subcommand("train-sae", "train the stacked denoising autoencoder");
  add_common(tsae);
  tsae->add_option("--features", features_path, "training feature archive")->required();

  // encode-sae
  std::string model_path, encode_name = "features_sae.qbef";
  auto* esae = app.add_subcommand("encode-sae", "re-encode features through the SAE");
  add_common(esae);
  esae->add_option("--model", model_path, "SAE checkpoint")->required();
  esae->add_option("--features", features_path, "input feature archive")->required();
  esae->add_option("--name", encode_name, "output archive file name");

  // import-features
  int expected_dim = 0;
  std::string import_name = "features_imported.qbef";
  auto* imp = app.add_subcommand("import-features",
                                 "ingest externally computed features");
  add_common(imp);
  imp->add_option("--archive", features_path, "external QBEF1 archive")->required();
  imp->add_option("--expected-dim", expected_dim, "required feature dimension")
      ->required();
  imp->add_option("--name", import_name, "output archive file name");

  // dtw-search
  std::string keywords_path, exemplars_path, mode_name = "ks",
              scores_name = "scores.tsv";
  auto* search = app.add_subcommand("dtw-search",
                                    "slide keyword exemplars over an archive");
  add_common(search);
  search->add_option("--keywords", keywords_path, "keyword set file")->required();
  search->add_option("--exemplars", exemplars_path, "exemplar feature archive")
      ->required();
  search->add_option("--features", features_path, "utterance feature archive")
      ->required();
  search->add_option("--mode", mode_name, "ks (min) or qbye (mean)");
  search->add_option("--name", scores_name, "output score table name");

  // make-targets
  std::string input_scores_path, targets_name = "targets.tsv";
  auto* targets = app.add_subcommand("make-targets",
                                     "map DTW costs to soft training targets");
  add_common(targets);
  targets->add_option("--scores", input_scores_path, "DTW cost table")->required();
  targets->add_option("--name", targets_name, "output target table name");

  // train-classifier
  std::string train_features_path;
  auto* tclf = app.add_subcommand("train-classifier",
                                  "train the windowed CNN classifier baseline");
  add_common(tclf);
  tclf->add_option("--keywords", keywords_path, "keyword set file")->required();
  tclf->add_option("--exemplars", exemplars_path, "exemplar feature archive")
      ->required();
  tclf->add_option("--train-features", train_features_path,
                   "archive negatives are drawn from")
      ->required();

  // train-cnn-dtw
  std::string targets_path;
  auto* tdistill = app.add_subcommand("train-cnn-dtw",
                                      "distill DTW targets into the CNN spotter");
  add_common(tdistill);
  tdistill->add_option("--train-features", train_features_path,
                       "training utterance archive")
      ->required();
  tdistill->add_option("--targets", targets_path, "soft target table")->required();

  // spot
  auto* spot_cmd = app.add_subcommand("spot", "score an archive with a trained model");
  add_common(spot_cmd);
  spot_cmd->add_option("--model", model_path, "CNN1 checkpoint")->required();
  spot_cmd->add_option("--features", features_path, "utterance archive")->required();
  spot_cmd->add_option("--name", scores_name, "output score table name");

  // evaluate
  std::vector<std::string> score_paths, system_names, feature_names;
  std::string eval_split = "test";
  auto* eval_cmd = app.add_subcommand("evaluate", "ROC/AUC/EER report for score tables");
  add_common(eval_cmd);
  eval_cmd->add_option("--scores", score_paths, "score tables (repeatable)")
      ->required();
  eval_cmd->add_option("--system", system_names, "system names (parallel to --scores)");
  eval_cmd->add_option("--feature", feature_names,
                       "feature kind per table (one value applies to all)");
  eval_cmd->add_option("--manifest", manifest_path, "manifest with transcripts")
      ->required();
  eval_cmd->add_option("--split", eval_split, "evaluation split (default test)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench",
                                       "time dtw-search against spot on one archive");
  add_common(bench_cmd);
  bench_cmd->add_option("--keywords", keywords_path, "keyword set file")->required();
  bench_cmd->add_option("--exemplars", exemplars_path, "exemplar archive")->required();
  bench_cmd->add_option("--features", features_path, "utterance archive")->required();
  bench_cmd->add_option("--model", model_path, "CNN1 checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    st.resolve_config();
    if (gen->parsed()) cmd_gen_synth(st);
    else if (extract->parsed())
      cmd_extract_features(st, manifest_path, split_filter, archive_name);
    else if (tsae->parsed()) cmd_train_sae(st, features_path);
    else if (esae->parsed()) cmd_encode_sae(st, model_path, features_path, encode_name);
    else if (imp->parsed()) cmd_import_features(st, features_path, expected_dim, import_name);
    else if (search->parsed())
      cmd_dtw_search(st, keywords_path, exemplars_path, features_path, mode_name,
                     scores_name);
    else if (targets->parsed()) cmd_make_targets(st, input_scores_path, targets_name);
    else if (tclf->parsed())
      cmd_train_classifier(st, keywords_path, exemplars_path, train_features_path);
    else if (tdistill->parsed()) cmd_train_cnn_dtw(st, train_features_path, targets_path);
    else if (spot_cmd->parsed()) cmd_spot(st, model_path, features_path, scores_name);
    else if (eval_cmd->parsed())
      cmd_evaluate(st, score_paths, system_names, feature_names, manifest_path,
                   eval_split);
    else if (bench_cmd->parsed())
      cmd_bench(st, keywords_path, exemplars_path, features_path, model_path);
  } catch (const kws::UsageError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const kws::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
