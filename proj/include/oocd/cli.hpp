// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The `oocd` command line: extract-features, train, predict, evaluate,
// cross-validate and report. Exit codes: 0 success, 1 operational error,
// 2 usage error.

#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oocd/audit.hpp"
#include "oocd/cache.hpp"
#include "oocd/classifier/model.hpp"
#include "oocd/config.hpp"
#include "oocd/dataset.hpp"
#include "oocd/error.hpp"
#include "oocd/eval.hpp"
#include "oocd/features_io.hpp"
#include "oocd/gpt_features.hpp"
#include "oocd/provider.hpp"
#include "oocd/similarity.hpp"
#include "oocd/util.hpp"

namespace oocd::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Collects flag values as a JSON merge patch; only flags given on the
/// command line end up in the patch.
class FlagPatch {
 public:
  template <typename T>
  CLI::Option* bind(CLI::App* app, const std::string& name, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<T>();
    auto* opt = app->add_option(name, *value, help);
    appliers_.push_back([opt, value, pointer](json& patch) {
      if (opt->count() > 0) patch[json::json_pointer(pointer)] = *value;
    });
    return opt;
  }

  CLI::Option* bind_flag(CLI::App* app, const std::string& name, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    auto* opt = app->add_flag(name, *value, help);
    appliers_.push_back([opt, value, pointer](json& patch) {
      if (opt->count() > 0) patch[json::json_pointer(pointer)] = *value;
    });
    return opt;
  }

  json patch() const {
    json p = json::object();
    for (const auto& a : appliers_) a(p);
    return p;
  }

 private:
  std::vector<std::function<void(json&)>> appliers_;
};

/// Provider, cache, extractors and audit log for one run.
struct PipelineContext {
  AuditLog audit;
  std::unique_ptr<ChatProvider> provider;
  std::unique_ptr<ResponseCache> cache;
  std::unique_ptr<GptFeatureExtractor> gpt;
  std::unique_ptr<SimilaritySource> similarity;

  explicit PipelineContext(const RunConfig& cfg) {
    if (!cfg.audit_log.empty()) audit.open(cfg.audit_log);
    audit.emit(audit_event::kConfig, "", {{"config", cfg.resolved}});

    if (cfg.provider_kind == "live") {
      provider = std::make_unique<LiveProvider>(cfg.provider);
    } else if (cfg.provider_kind == "stub") {
      provider = std::make_unique<StubProvider>(cfg.seed, StubProvider::Mode::Seeded);
    } else if (cfg.provider_kind == "adversarial") {
      provider = std::make_unique<StubProvider>(cfg.seed, StubProvider::Mode::Adversarial);
    } else if (cfg.provider_kind == "fixture") {
      if (cfg.fixture_path.empty()) throw ConfigError("--provider fixture needs --fixture <path>");
      auto stub = std::make_unique<StubProvider>(cfg.seed, StubProvider::Mode::Fixture);
      stub->load_fixtures(read_file(cfg.fixture_path));
      provider = std::move(stub);
    } else {
      throw ConfigError("unknown provider '" + cfg.provider_kind + "' (expected live|stub|fixture|adversarial)");
    }

    cache = cfg.cache_dir.empty() ? std::make_unique<ResponseCache>() : std::make_unique<ResponseCache>(cfg.cache_dir);
    gpt = std::make_unique<GptFeatureExtractor>(*provider, *cache, audit, cfg.extraction);

    switch (cfg.similarity_source) {
      case SimilaritySourceKind::Sidecar:
        similarity = std::make_unique<SidecarSimilaritySource>(cfg.similarity_endpoint, &audit);
        break;
      case SimilaritySourceKind::Precomputed:
        if (cfg.similarity_file.empty()) throw ConfigError("--similarity-source precomputed needs --similarity-file");
        similarity = PrecomputedSimilaritySource::from_file(
            cfg.similarity_file, &audit,
            cfg.allow_mixed_sources ? std::make_unique<LexicalSimilaritySource>() : nullptr);
        break;
      case SimilaritySourceKind::LexicalFallback:
        similarity = std::make_unique<LexicalSimilaritySource>();
        break;
    }
  }

  FeatureSources sources(const RunConfig& cfg) {
    return {gpt.get(), similarity.get(), &audit, cfg.concurrency, cfg.allow_mixed_sources};
  }
};

inline std::vector<ExtractedRecord> extract_dataset(const RunConfig& cfg, const Dataset& ds, PipelineContext& ctx) {
  auto src = ctx.sources(cfg);
  return extract_features(ds, cfg.gate, src);
}

inline std::string predictions_jsonl(const std::vector<RecordPrediction>& preds) {
  std::string out;
  for (const auto& p : preds) {
    json j = {{"id", p.id},
              {"prediction", static_cast<int>(p.prediction)},
              {"margin", p.margin},
              {"provenance", provenance_name(p.provenance)}};
    j["label"] = p.label ? json(static_cast<int>(*p.label)) : json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

inline fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  auto out = p;
  out += suffix;
  return out;
}

inline std::string describe(const std::exception& e) {
  std::string msg = e.what();
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    msg += ": " + describe(inner);
  } catch (...) {
  }
  return msg;
}

/// Runs the CLI. `env` supplies environment variables (the process
/// environment by default).
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr,
               EnvLookup env = process_env) {
  CLI::App app{"Out-of-context image-caption detection pipeline", "oocd"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path;
  FlagPatch common;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    common.bind<std::uint64_t>(sub, "--seed", "/seed", "Global seed (stub provider, classifiers, split)");
    common.bind<std::string>(sub, "--audit-log", "/audit_log", "Append audit events to this file");
  };
  auto add_extraction = [&](CLI::App* sub, FlagPatch& f) {
    f.bind<std::string>(sub, "--provider", "/provider/kind", "live|stub|fixture|adversarial");
    f.bind<std::string>(sub, "--fixture", "/provider/fixture", "Fixture file for --provider fixture");
    f.bind<std::string>(sub, "--endpoint", "/provider/endpoint", "Chat-completion endpoint URL");
    f.bind<std::string>(sub, "--model-id", "/provider/model", "Provider model id");
    f.bind<double>(sub, "--temperature", "/provider/temperature", "Sampling temperature");
    f.bind<int>(sub, "--requests-per-minute", "/provider/requests_per_minute", "Client-side rate limit");
    f.bind<bool>(sub, "--replication-mode", "/provider/replication_mode", "Enforce temperature 0 and a pinned model");
    f.bind<std::string>(sub, "--cache-dir", "/extraction/cache_dir", "Response cache directory");
    f.bind<std::size_t>(sub, "--concurrency", "/extraction/concurrency", "Requests in flight");
    f.bind<unsigned>(sub, "--retries", "/extraction/retries", "Re-asks after a malformed answer");
    f.bind<std::string>(sub, "--failure-policy", "/extraction/failure_policy", "fail|impute");
    f.bind<std::string>(sub, "--similarity-source", "/similarity/source", "sidecar|precomputed|lexical");
    f.bind<std::string>(sub, "--similarity-endpoint", "/similarity/endpoint", "Sidecar base URL");
    f.bind<std::string>(sub, "--similarity-file", "/similarity/file", "Precomputed similarity file");
    f.bind_flag(sub, "--allow-mixed-sources", "/similarity/allow_mixed_sources", "Allow more than one similarity source");
    f.bind<double>(sub, "--iou-threshold", "/gate/iou_threshold", "Coherence gate threshold");
  };
  auto add_classifier = [&](CLI::App* sub, FlagPatch& f) {
    f.bind<unsigned>(sub, "--rounds", "/classifier/rounds", "AdaBoost rounds");
    f.bind<double>(sub, "--learning-rate", "/classifier/learning_rate", "AdaBoost learning rate");
    f.bind<unsigned>(sub, "--trees", "/classifier/trees", "Random forest size");
    f.bind<unsigned>(sub, "--max-depth", "/classifier/max_depth", "Random forest depth limit");
    f.bind<double>(sub, "--lambda", "/classifier/lambda", "SVM regularisation");
    f.bind<unsigned>(sub, "--epochs", "/classifier/epochs", "SVM epochs");
  };

  // extract-features
  FlagPatch ef;
  std::string ef_dataset, ef_out;
  auto* cmd_extract = app.add_subcommand("extract-features", "Gate records and extract feature rows");
  add_common(cmd_extract);
  add_extraction(cmd_extract, ef);
  cmd_extract->add_option("--dataset", ef_dataset, "Dataset file")->required();
  cmd_extract->add_option("--out", ef_out, "Features output file")->required();

  // train
  FlagPatch tr;
  std::string tr_in, tr_out;
  auto* cmd_train = app.add_subcommand("train", "Train a classifier on a features file");
  add_common(cmd_train);
  add_classifier(cmd_train, tr);
  tr.bind<std::string>(cmd_train, "--classifier", "/classifier/kind", "adaboost|rf|svm");
  cmd_train->add_option("--in", tr_in, "Features file")->required();
  cmd_train->add_option("--out", tr_out, "Model output file")->required();

  // predict
  std::string pr_model, pr_in, pr_out;
  auto* cmd_predict = app.add_subcommand("predict", "Predict OOC/NOOC for a features file");
  add_common(cmd_predict);
  cmd_predict->add_option("--model", pr_model, "Model file")->required();
  cmd_predict->add_option("--in", pr_in, "Features file")->required();
  cmd_predict->add_option("--out", pr_out, "Predictions output file")->required();

  // evaluate
  FlagPatch ev;
  std::string ev_dataset, ev_report, ev_format = "table-text", ev_classifier = "adaboost";
  bool ev_no_refs = false;
  auto* cmd_eval = app.add_subcommand("evaluate", "Train/test evaluation with a comparison report");
  add_common(cmd_eval);
  add_extraction(cmd_eval, ev);
  add_classifier(cmd_eval, ev);
  cmd_eval->add_option("--dataset", ev_dataset, "Dataset file")->required();
  ev.bind<std::uint64_t>(cmd_eval, "--split-seed", "/split/seed", "Seed of the train/test shuffle");
  ev.bind<double>(cmd_eval, "--train-fraction", "/split/train_fraction", "Training share of the split");
  ev.bind_flag(cmd_eval, "--stratify", "/split/stratify", "Split each label class separately");
  cmd_eval->add_option("--classifier", ev_classifier, "adaboost|rf|svm|all");
  cmd_eval->add_option("--report", ev_report, "Report output file")->required();
  cmd_eval->add_option("--format", ev_format, "table-text|csv|markdown");
  cmd_eval->add_flag("--no-reference-rows", ev_no_refs, "Omit previously reported results");

  // cross-validate
  FlagPatch cv;
  std::string cv_dataset, cv_features, cv_report, cv_format = "table-text";
  std::size_t cv_k = 5, cv_synthetic = 0;
  double cv_separation = 1.0;
  auto* cmd_cv = app.add_subcommand("cross-validate", "k-fold cross-validation");
  add_common(cmd_cv);
  add_extraction(cmd_cv, cv);
  add_classifier(cmd_cv, cv);
  cv.bind<std::string>(cmd_cv, "--classifier", "/classifier/kind", "adaboost|rf|svm");
  cmd_cv->add_option("--k", cv_k, "Number of folds")->check(CLI::PositiveNumber);
  auto* cv_src_dataset = cmd_cv->add_option("--dataset", cv_dataset, "Dataset file (features are extracted)");
  auto* cv_src_features = cmd_cv->add_option("--features", cv_features, "Features file");
  auto* cv_src_synth = cmd_cv->add_option("--synthetic", cv_synthetic, "Generate N synthetic rows");
  cmd_cv->add_option("--separation", cv_separation, "Synthetic class separation in [0,1]");
  cv_src_dataset->excludes(cv_src_features)->excludes(cv_src_synth);
  cv_src_features->excludes(cv_src_synth);
  cmd_cv->add_option("--report", cv_report, "Report output file (stdout when absent)");
  cmd_cv->add_option("--format", cv_format, "table-text|csv|markdown");

  // report
  std::string rp_in, rp_out, rp_format = "table-text";
  auto* cmd_report = app.add_subcommand("report", "Re-render a saved evaluation report");
  cmd_report->add_option("--in", rp_in, "Report metadata (<report>.meta.json)")->required();
  cmd_report->add_option("--format", rp_format, "table-text|csv|markdown");
  cmd_report->add_option("--out", rp_out, "Output file (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  auto resolve = [&](const FlagPatch* extra) {
    auto patch = common.patch();
    if (extra) patch.merge_patch(extra->patch());
    return resolve_config(load_config_file(config_path), env, patch);
  };

  try {
    if (cmd_extract->parsed()) {
      const auto cfg = resolve(&ef);
      PipelineContext ctx(cfg);
      const auto ds = load_dataset(ef_dataset);
      const auto records = extract_dataset(cfg, ds, ctx);
      write_file_atomic(ef_out, serialize_features(records));
      std::size_t gated = 0;
      for (const auto& r : records) gated += r.provenance == Provenance::Gate ? 1 : 0;
      out << "extracted " << records.size() - gated << " rows, " << gated << " gated, -> " << ef_out << "\n";
      return 0;
    }
    if (cmd_train->parsed()) {
      const auto cfg = resolve(&tr);
      const auto records = load_features(tr_in);
      std::size_t skipped = 0;
      const auto rows = training_rows(records, &skipped);
      auto model = train_model(rows, cfg.classifier);
      std::visit([&](auto& m) { m.training_meta.seed = cfg.seed; }, model);
      save_model(model, tr_out);
      out << "trained " << classifier_name(cfg.classifier.kind) << " on " << rows.size() << " rows";
      if (skipped) out << " (" << skipped << " imputed rows excluded)";
      out << " -> " << tr_out << "\n";
      return 0;
    }
    if (cmd_predict->parsed()) {
      const auto model = load_model(pr_model);
      const auto preds = predict_records(load_features(pr_in), model);
      write_file_atomic(pr_out, predictions_jsonl(preds));
      out << "predicted " << preds.size() << " records -> " << pr_out << "\n";
      return 0;
    }
    if (cmd_eval->parsed()) {
      const auto cfg = resolve(&ev);
      const auto format = report_format_from(ev_format);
      std::vector<ClassifierConfig> classifiers;
      if (ev_classifier == "all") {
        for (auto k : {ClassifierKind::AdaBoost, ClassifierKind::RandomForest, ClassifierKind::LinearSvm}) {
          auto c = cfg.classifier;
          c.kind = k;
          classifiers.push_back(c);
        }
      } else {
        auto c = cfg.classifier;
        c.kind = classifier_from(ev_classifier);
        classifiers.push_back(c);
      }
      PipelineContext ctx(cfg);
      const auto ds = load_dataset(ev_dataset);
      const auto records = extract_dataset(cfg, ds, ctx);
      auto result = evaluate_split(ds, records, cfg.split, classifiers, !ev_no_refs);

      const fs::path report_path = ev_report;
      const auto dump_path = with_suffix(report_path, ".predictions.jsonl");
      const auto meta_path = with_suffix(report_path, ".meta.json");
      result.report.config = cfg.resolved;
      result.report.prediction_dump = dump_path.filename().string();
      const auto dump = serialize_dump(result.dump);
      verify_report(result.report, dump);

      AtomicWriter writer;
      writer.stage(report_path, render_report(result.report, format));
      writer.stage(dump_path, dump);
      writer.stage(meta_path, result.report.to_json().dump(2) + "\n");
      writer.commit();
      out << render_report(result.report, ReportFormat::TableText);
      return 0;
    }
    if (cmd_cv->parsed()) {
      const auto cfg = resolve(&cv);
      const auto format = report_format_from(cv_format);
      std::vector<ExtractedRecord> records;
      if (!cv_dataset.empty()) {
        PipelineContext ctx(cfg);
        records = extract_dataset(cfg, load_dataset(cv_dataset), ctx);
      } else if (!cv_features.empty()) {
        records = load_features(cv_features);
      } else if (cv_synthetic > 0) {
        records = records_from_rows(generate_synthetic(cv_synthetic, cv_separation, cfg.seed));
      } else {
        throw ConfigError("cross-validate needs one of --dataset, --features, --synthetic");
      }
      const auto res = cross_validate(records, cv_k, cfg.classifier, cfg.seed);
      const auto text = render_cv(res, classifier_display_name(cfg.classifier.kind), format);
      if (cv_report.empty()) {
        out << text;
      } else {
        write_file_atomic(cv_report, text);
        out << render_cv(res, classifier_display_name(cfg.classifier.kind), ReportFormat::TableText);
      }
      return 0;
    }
    if (cmd_report->parsed()) {
      const fs::path meta_path = rp_in;
      const auto report = EvalReport::from_json(json::parse(read_file(meta_path)));
      const auto dump_path = meta_path.parent_path() / report.prediction_dump;
      verify_report(report, read_file(dump_path));
      const auto text = render_report(report, report_format_from(rp_format));
      if (rp_out.empty()) {
        out << text;
      } else {
        write_file_atomic(rp_out, text);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << describe(e) << "\n";
    return 1;
  }
  return 2;
}

}  // namespace oocd::cli
