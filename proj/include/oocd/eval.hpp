// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// End-to-end pipeline, accuracy, k-fold cross-validation, synthetic data and
// comparison reports.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "oocd/audit.hpp"
#include "oocd/classifier/model.hpp"
#include "oocd/dataset.hpp"
#include "oocd/error.hpp"
#include "oocd/features_io.hpp"
#include "oocd/gate.hpp"
#include "oocd/gpt_features.hpp"
#include "oocd/parallel.hpp"
#include "oocd/random.hpp"
#include "oocd/similarity.hpp"
#include "oocd/util.hpp"

namespace oocd {

struct FeatureSources {
  GptFeatureExtractor* gpt = nullptr;
  SimilaritySource* similarity = nullptr;
  AuditLog* audit = nullptr;
  std::size_t concurrency = 1;
  bool allow_mixed_sources = false;
};

/// Gate every record, then extract similarity and provider features for the
/// records that pass. Gated records never reach either extractor. Output is
/// in dataset order.
inline std::vector<ExtractedRecord> extract_features(const Dataset& ds, const GateConfig& gate, FeatureSources& src) {
  if (!src.gpt || !src.similarity) throw ConfigError("feature extraction needs both feature sources");
  gate.validate();
  std::vector<ExtractedRecord> out(ds.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& r = ds.records[i];
    out[i].id = r.id;
    out[i].label = r.label;
    out[i].iou_score = r.iou_score;
    if (r.iou_score && gate_by_iou(*r.iou_score, gate) == GateDecision::EarlyNOOC) {
      out[i].provenance = Provenance::Gate;
      if (src.audit) src.audit->emit(audit_event::kGate, r.id, {{"iou_score", *r.iou_score}, {"threshold", gate.threshold}});
    } else {
      pending.push_back(i);
    }
  }
  parallel_for(pending.size(), src.concurrency, [&](std::size_t p) {
    const auto i = pending[p];
    const auto& r = ds.records[i];
    try {
      const auto sim = src.similarity->get(r);
      const auto gpt = src.gpt->extract(r.id, r.caption1, r.caption2);
      out[i].row = assemble_features(sim, gpt.vector, r.id, r.label);
      out[i].similarity_source = sim.source;
      out[i].imputed = gpt.imputed;
      if (src.audit) {
        src.audit->emit(audit_event::kSimilarity, r.id,
                        {{"source", similarity_source_name(sim.source)}, {"s_base", sim.s_base}, {"s_large", sim.s_large}});
      }
    } catch (const ExtractionFailed&) {
      throw;
    } catch (const Error& e) {
      std::throw_with_nested(RecordError(r.id, e.what()));
    }
  });

  std::vector<SimilarityVector> sims;
  for (const auto& e : out) {
    if (e.row) sims.push_back({0, 0, e.similarity_source});
  }
  validate_similarity_sources(sims, src.allow_mixed_sources);
  return out;
}

struct RecordPrediction {
  std::string id;
  Label prediction = Label::NOOC;
  double margin = 0.0;
  Provenance provenance = Provenance::Classifier;
  std::optional<Label> label;
};

/// Gated records are NOOC with margin 0; the rest go through the model.
inline std::vector<RecordPrediction> predict_records(const std::vector<ExtractedRecord>& records, const Model& model) {
  std::vector<RecordPrediction> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    RecordPrediction p;
    p.id = r.id;
    p.label = r.label;
    p.provenance = r.provenance;
    if (r.provenance == Provenance::Classifier) {
      if (!r.row) throw RecordError(r.id, "missing features");
      const auto pr = predict(model, *r.row);
      p.prediction = pr.label;
      p.margin = pr.margin;
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<RecordPrediction> run_pipeline(const Dataset& ds, const GateConfig& gate, FeatureSources& src,
                                                  const Model& model) {
  return predict_records(extract_features(ds, gate, src), model);
}

/// Fraction of labeled positions where prediction equals label.
inline double evaluate_accuracy(std::span<const std::optional<Label>> predictions,
                                std::span<const std::optional<Label>> labels) {
  if (predictions.size() != labels.size()) throw MissingPredictions("prediction and label counts differ");
  std::size_t labeled = 0, correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    if (!predictions[i]) throw MissingPredictions("labeled position " + std::to_string(i) + " has no prediction");
    ++labeled;
    correct += *predictions[i] == *labels[i] ? 1 : 0;
  }
  if (labeled == 0) throw MissingPredictions("no labeled records to score");
  return static_cast<double>(correct) / static_cast<double>(labeled);
}

/// Accuracy over labeled records, joining predictions to labels by record id.
inline double evaluate_accuracy(const std::unordered_map<std::string, Label>& predictions,
                                const std::vector<std::pair<std::string, std::optional<Label>>>& labels) {
  std::size_t labeled = 0, correct = 0;
  for (const auto& [id, label] : labels) {
    if (!label) continue;
    const auto it = predictions.find(id);
    if (it == predictions.end()) throw MissingPredictions("no prediction for record '" + id + "'");
    ++labeled;
    correct += it->second == *label ? 1 : 0;
  }
  if (labeled == 0) throw MissingPredictions("no labeled records to score");
  return static_cast<double>(correct) / static_cast<double>(labeled);
}

inline double accuracy_of(const std::vector<RecordPrediction>& preds) {
  std::vector<std::optional<Label>> p, l;
  for (const auto& r : preds) {
    p.emplace_back(r.prediction);
    l.push_back(r.label);
  }
  return evaluate_accuracy(p, l);
}

/// Labeled classifier-path rows usable for training; imputed rows are left out.
inline std::vector<FeatureRow> training_rows(const std::vector<ExtractedRecord>& records, std::size_t* imputed_skipped = nullptr) {
  std::vector<FeatureRow> rows;
  std::size_t skipped = 0;
  for (const auto& r : records) {
    if (r.provenance != Provenance::Classifier || !r.label || !r.row) continue;
    if (r.imputed) {
      ++skipped;
      continue;
    }
    rows.push_back(*r.row);
  }
  if (imputed_skipped) *imputed_skipped = skipped;
  return rows;
}

struct CvResult {
  std::vector<double> fold_accuracies;
  std::vector<std::size_t> fold_sizes;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation over folds
};

/// k-fold cross-validation over records: each fold's model is trained on the
/// other folds' classifier-path rows and scored on every labeled record of
/// the held-out fold (gated records count as NOOC predictions).
inline CvResult cross_validate(const std::vector<ExtractedRecord>& records, std::size_t k, const ClassifierConfig& cfg,
                               std::uint64_t seed) {
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].label) labeled.push_back(i);
  }
  if (labeled.size() < k) throw TooFewRecords("cross-validation needs at least k labeled records");
  CvResult res;
  for (const auto& fold : cv_fold_indices(labeled.size(), k, seed)) {
    std::vector<ExtractedRecord> train, val;
    for (auto i : complement_indices(labeled.size(), fold)) train.push_back(records[labeled[i]]);
    for (auto i : fold) val.push_back(records[labeled[i]]);
    const auto rows = training_rows(train);
    const auto model = train_model(rows, cfg);
    res.fold_accuracies.push_back(accuracy_of(predict_records(val, model)));
    res.fold_sizes.push_back(val.size());
  }
  for (auto a : res.fold_accuracies) res.mean += a;
  res.mean /= static_cast<double>(k);
  for (auto a : res.fold_accuracies) res.stddev += (a - res.mean) * (a - res.mean);
  res.stddev = std::sqrt(res.stddev / static_cast<double>(k));
  return res;
}

inline CvResult cross_validate(const std::vector<FeatureRow>& rows, std::size_t k, const ClassifierConfig& cfg,
                               std::uint64_t seed) {
  return cross_validate(records_from_rows(rows), k, cfg, seed);
}

/// Labeled rows with a planted signal. OOC rows have high provider ratings and
/// low similarity, NOOC rows the opposite; `separation` in [0,1] scales the
/// gap between class means (0: identical distributions). Classes are
/// balanced and interleaved in a seeded order.
inline std::vector<FeatureRow> generate_synthetic(std::size_t n, double separation, std::uint64_t seed) {
  if (n < 10) throw ConfigError("synthetic data needs n >= 10");
  if (!(separation >= 0.0 && separation <= 1.0)) throw ConfigError("separation must lie in [0,1]");
  Rng rng(seed);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i < n / 2 ? Label::OOC : Label::NOOC;
  fisher_yates(std::span<Label>(labels), rng);

  std::vector<FeatureRow> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dir = labels[i] == Label::OOC ? 1.0 : -1.0;
    FeatureRow r;
    r.record_id = "syn-" + std::to_string(i);
    r.label = labels[i];
    for (std::size_t s = 0; s < 2; ++s) {
      const double mean = 0.5 - dir * separation * 0.35;
      r.features[s] = std::clamp(mean + 0.08 * standard_normal(rng), 0.0, 1.0);
    }
    for (std::size_t c = 2; c < kFeatureCount; ++c) {
      const double mean = 4.5 + dir * separation * 3.5;
      r.features[c] = std::clamp(std::round(mean + 1.0 * standard_normal(rng)), 0.0, 9.0);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { TableText, Csv, Markdown };

inline ReportFormat report_format_from(std::string_view s) {
  if (s == "table-text" || s == "text") return ReportFormat::TableText;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  throw ConfigError("unknown report format '" + std::string(s) + "' (expected table-text|csv|markdown)");
}

inline constexpr int kAccuracyDigits = 4;

inline std::string format_accuracy(double a) { return format_fixed(a, kAccuracyDigits); }

struct ReportRow {
  std::string method;
  /// Rendered cells; empty when the value does not exist.
  std::string acc_test;
  std::string acc_full;
  /// Reported reference values rather than measured ones.
  bool reference = false;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Previously published results, rendered verbatim beside measured rows.
inline std::vector<ReportRow> reference_rows() {
  return {
      {"COSMOS [reported]", "0.839", "0.821", true},
      {"Tran et al. [reported]", "", "0.891", true},
      {"La et al., captioning + RoBERTa [reported]", "", "0.867", true},
      {"La et al., VSRN + DeBERTa [reported]", "", "0.760", true},
  };
}

struct EvalReport {
  std::vector<ReportRow> rows;
  std::string dataset_hash;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string prediction_dump;  // file name of the per-record dump
  std::string selected_method;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"dataset_hash", dataset_hash},       {"seed", seed},
                        {"prediction_dump", prediction_dump}, {"selected_method", selected_method},
                        {"config", config},                   {"rows", nlohmann::json::array()}};
    for (const auto& r : rows) {
      j["rows"].push_back({{"method", r.method}, {"acc_test", r.acc_test}, {"acc_full", r.acc_full}, {"reference", r.reference}});
    }
    return j;
  }

  static EvalReport from_json(const nlohmann::json& j) {
    EvalReport r;
    r.dataset_hash = j.at("dataset_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.prediction_dump = j.at("prediction_dump").get<std::string>();
    r.selected_method = j.value("selected_method", "");
    r.config = j.at("config");
    for (const auto& row : j.at("rows")) {
      r.rows.push_back({row.at("method").get<std::string>(), row.at("acc_test").get<std::string>(),
                        row.at("acc_full").get<std::string>(), row.at("reference").get<bool>()});
    }
    return r;
  }
};

inline constexpr std::string_view kFullColumnNote = "includes training data";

inline std::string render_report(const EvalReport& report, ReportFormat format) {
  const std::string test_header = "Acc. (test)";
  const std::string full_header = "Acc. (full, " + std::string(kFullColumnNote) + ")";
  std::ostringstream out;
  auto cell = [](const std::string& s) { return s.empty() ? std::string("-") : s; };

  switch (format) {
    case ReportFormat::Csv: {
      out << "method,acc_test,acc_full\n";
      for (const auto& r : report.rows) {
        std::string m = r.method;
        if (m.find_first_of(",\"") != std::string::npos) {
          std::string q = "\"";
          for (char c : m) q += c == '"' ? std::string("\"\"") : std::string(1, c);
          m = q + "\"";
        }
        out << m << ',' << r.acc_test << ',' << r.acc_full << '\n';
      }
      break;
    }
    case ReportFormat::Markdown: {
      auto best = [&](auto member) {
        std::optional<double> b;
        for (const auto& r : report.rows) {
          const auto& s = r.*member;
          if (s.empty()) continue;
          const double v = std::stod(s);
          if (!b || v > *b) b = v;
        }
        return b;
      };
      const auto best_test = best(&ReportRow::acc_test);
      const auto best_full = best(&ReportRow::acc_full);
      auto md_cell = [&](const std::string& s, const std::optional<double>& b) {
        if (s.empty()) return std::string("-");
        return b && std::stod(s) == *b ? "**" + s + "**" : s;
      };
      out << "Dataset sha256: `" << report.dataset_hash << "`  \n";
      out << "Seed: " << report.seed << "  \n";
      out << "Predictions: `" << report.prediction_dump << "`  \n";
      if (!report.selected_method.empty()) out << "Selected by test accuracy: " << report.selected_method << "  \n";
      out << "\n| Method | " << test_header << " | " << full_header << " |\n";
      out << "|---|---|---|\n";
      for (const auto& r : report.rows) {
        out << "| " << r.method << " | " << md_cell(r.acc_test, best_test) << " | " << md_cell(r.acc_full, best_full)
            << " |\n";
      }
      out << "\nBest accuracy per column in bold. The full column " << kFullColumnNote << ".\n";
      break;
    }
    case ReportFormat::TableText: {
      std::size_t w0 = std::string("Method").size(), w1 = test_header.size(), w2 = full_header.size();
      for (const auto& r : report.rows) {
        w0 = std::max(w0, r.method.size());
        w1 = std::max(w1, cell(r.acc_test).size());
        w2 = std::max(w2, cell(r.acc_full).size());
      }
      auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
      out << "dataset sha256: " << report.dataset_hash << "\n";
      out << "seed: " << report.seed << "\n";
      out << "predictions: " << report.prediction_dump << "\n";
      if (!report.selected_method.empty()) out << "selected by test accuracy: " << report.selected_method << "\n";
      out << "\n" << pad("Method", w0) << "  " << pad(test_header, w1) << "  " << full_header << "\n";
      out << std::string(w0, '-') << "  " << std::string(w1, '-') << "  " << std::string(w2, '-') << "\n";
      for (const auto& r : report.rows) {
        out << pad(r.method, w0) << "  " << pad(cell(r.acc_test), w1) << "  " << cell(r.acc_full) << "\n";
      }
      break;
    }
  }
  return out.str();
}

/// One line of the per-record prediction dump.
struct DumpEntry {
  std::string method;
  std::string id;
  std::string split;  // "train" | "test"
  std::optional<Label> label;
  Label prediction = Label::NOOC;
  double margin = 0.0;
  Provenance provenance = Provenance::Classifier;
};

inline std::string serialize_dump(const std::vector<DumpEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    nlohmann::json j = {{"method", e.method},
                        {"id", e.id},
                        {"split", e.split},
                        {"prediction", static_cast<int>(e.prediction)},
                        {"margin", e.margin},
                        {"provenance", provenance_name(e.provenance)}};
    j["label"] = e.label ? nlohmann::json(static_cast<int>(*e.label)) : nlohmann::json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

/// Recomputes (acc_test, acc_full) per method from a dump. Cells are empty
/// when a split has no labeled records.
inline std::map<std::string, std::pair<std::string, std::string>> accuracies_from_dump(std::string_view dump) {
  struct Tally {
    std::size_t test_n = 0, test_ok = 0, all_n = 0, all_ok = 0;
  };
  std::map<std::string, Tally> tallies;
  std::size_t pos = 0;
  while (pos < dump.size()) {
    auto nl = dump.find('\n', pos);
    if (nl == std::string_view::npos) nl = dump.size();
    const auto line = trim(dump.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    auto& t = tallies[j.at("method").get<std::string>()];
    if (j.at("label").is_null()) continue;
    const bool ok = j.at("label").get<int>() == j.at("prediction").get<int>();
    ++t.all_n;
    t.all_ok += ok ? 1 : 0;
    if (j.at("split").get<std::string>() == "test") {
      ++t.test_n;
      t.test_ok += ok ? 1 : 0;
    }
  }
  std::map<std::string, std::pair<std::string, std::string>> out;
  for (const auto& [m, t] : tallies) {
    auto acc = [](std::size_t ok, std::size_t n) {
      return n == 0 ? std::string() : format_accuracy(static_cast<double>(ok) / static_cast<double>(n));
    };
    out[m] = {acc(t.test_ok, t.test_n), acc(t.all_ok, t.all_n)};
  }
  return out;
}

/// Throws unless every measured row matches a recomputation from the dump.
inline void verify_report(const EvalReport& report, std::string_view dump) {
  const auto recomputed = accuracies_from_dump(dump);
  for (const auto& r : report.rows) {
    if (r.reference) continue;
    const auto it = recomputed.find(r.method);
    if (it == recomputed.end()) throw Error("report row '" + r.method + "' has no predictions in the dump");
    if (it->second.first != r.acc_test || it->second.second != r.acc_full) {
      throw Error("report row '" + r.method + "' disagrees with its prediction dump");
    }
  }
}

struct EvaluationOutput {
  EvalReport report;
  std::vector<DumpEntry> dump;
};

/// Train/test protocol: split records by `split`, train each classifier on
/// the training half's classifier-path rows, predict every record, and score
/// the test half and the full set. The method with the best test accuracy is
/// recorded as selected (ties keep the earlier classifier in `kinds`).
inline EvaluationOutput evaluate_split(const Dataset& ds, const std::vector<ExtractedRecord>& records,
                                       const SplitSpec& split, const std::vector<ClassifierConfig>& classifiers,
                                       bool include_references = true) {
  const auto [train_ds, test_ds] = split_train_test(ds, split);
  std::unordered_set<std::string> train_ids;
  for (const auto& r : train_ds.records) train_ids.insert(r.id);

  std::vector<ExtractedRecord> train;
  for (const auto& r : records) {
    if (train_ids.contains(r.id)) train.push_back(r);
  }

  EvaluationOutput out;
  out.report.dataset_hash = dataset_hash(ds);
  out.report.seed = split.seed;
  std::optional<double> best_test;
  for (const auto& cfg : classifiers) {
    const auto method = classifier_display_name(cfg.kind);
    const auto model = train_model(training_rows(train), cfg);
    const auto preds = predict_records(records, model);
    std::vector<std::optional<Label>> p_all, l_all, p_test, l_test;
    for (const auto& pr : preds) {
      const bool in_train = train_ids.contains(pr.id);
      out.dump.push_back({method, pr.id, in_train ? "train" : "test", pr.label, pr.prediction, pr.margin, pr.provenance});
      p_all.emplace_back(pr.prediction);
      l_all.push_back(pr.label);
      if (!in_train) {
        p_test.emplace_back(pr.prediction);
        l_test.push_back(pr.label);
      }
    }
    const double acc_test = evaluate_accuracy(p_test, l_test);
    const double acc_full = evaluate_accuracy(p_all, l_all);
    out.report.rows.push_back({method, format_accuracy(acc_test), format_accuracy(acc_full), false});
    if (!best_test || acc_test > *best_test) {
      best_test = acc_test;
      out.report.selected_method = method;
    }
  }
  if (include_references) {
    for (auto& r : reference_rows()) out.report.rows.push_back(std::move(r));
  }
  return out;
}

inline std::string render_cv(const CvResult& cv, std::string_view method, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::Csv:
      out << "fold,validation_size,accuracy\n";
      for (std::size_t i = 0; i < cv.fold_accuracies.size(); ++i) {
        out << i + 1 << ',' << cv.fold_sizes[i] << ',' << format_accuracy(cv.fold_accuracies[i]) << '\n';
      }
      out << "mean,," << format_accuracy(cv.mean) << "\nstd,," << format_accuracy(cv.stddev) << '\n';
      break;
    case ReportFormat::Markdown:
      out << "| Fold | Validation size | Accuracy (" << method << ") |\n|---|---|---|\n";
      for (std::size_t i = 0; i < cv.fold_accuracies.size(); ++i) {
        out << "| " << i + 1 << " | " << cv.fold_sizes[i] << " | " << format_accuracy(cv.fold_accuracies[i]) << " |\n";
      }
      out << "\nMean accuracy: " << format_accuracy(cv.mean) << " \xC2\xB1 " << format_accuracy(cv.stddev) << "\n";
      break;
    case ReportFormat::TableText:
      out << method << " " << cv.fold_accuracies.size() << "-fold cross-validation\n";
      for (std::size_t i = 0; i < cv.fold_accuracies.size(); ++i) {
        out << "fold " << i + 1 << "  n=" << cv.fold_sizes[i] << "  accuracy=" << format_accuracy(cv.fold_accuracies[i])
            << '\n';
      }
      out << "mean " << format_accuracy(cv.mean) << " +- " << format_accuracy(cv.stddev) << '\n';
      break;
  }
  return out.str();
}

}  // namespace oocd
