// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "oocd/cli.hpp"
#include "oocd/oocd.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace oocd;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> random_weights(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  double s = 0;
  for (auto& v : w) s += (v = 0.05 + uniform_unit(rng));
  for (auto& v : w) v /= s;
  return w;
}

Outcome stump_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(20260101);
  std::size_t ties = 0;
  for (int d = 0; d < 200 && o.ok; ++d) {
    const auto n = 2 + uniform_index(rng, 49);
    auto rows = testkit::random_rows(rng, n, d % 2 == 0);
    rows[0].label = Label::NOOC;
    rows[1].label = Label::OOC;
    const auto m = training_matrix(rows);
    // Every fourth dataset uses uniform weights, which produces many exact ties.
    const auto w = d % 4 == 1 ? std::vector<double>(n, 1.0 / n) : random_weights(rng, n);
    testkit::Rows x;
    for (std::size_t i = 0; i < n; ++i) x.emplace_back(m.row(i).begin(), m.row(i).end());
    const auto want = testkit::brute_force_stump(x, m.y, w);
    const auto got = best_stump(m, w);
    if (d % 2 == 0) ++ties;
    o.require(got.stump.feature_index == want.feature && got.stump.threshold == want.threshold &&
                  got.stump.polarity == want.polarity && std::abs(got.error - want.error) <= 1e-12,
              "dataset " + std::to_string(d) + " differs from oracle");
  }
  const double secs = seconds_since(t0);
  o.require(secs < 60.0, "took " + std::to_string(secs) + " s");
  if (o.ok) o.detail = "200 datasets, " + std::to_string(ties) + " on a tie-heavy grid, " + format_fixed(secs, 2) + " s";
  return o;
}

Outcome boosting_invariants() {
  Outcome o;
  Rng rng(7);
  std::size_t rounds = 0;
  for (int run = 0; run < 200 && o.ok; ++run) {
    const auto n = 4 + uniform_index(rng, 60);
    std::vector<FeatureRow> rows = run % 3 == 0 ? generate_synthetic(std::max<std::size_t>(n, 10), uniform_unit(rng), run)
                                                : testkit::random_rows(rng, n, run % 2 == 0);
    rows[0].label = Label::NOOC;
    rows[1].label = Label::OOC;
    std::vector<BoostRound> trace;
    train_adaboost(rows, {50}, &trace);
    for (const auto& r : trace) {
      if (!r.accepted) continue;
      ++rounds;
      o.require(r.error < 0.5, "accepted stump with error >= 0.5");
      o.require(std::abs(r.weight_sum - 1.0) <= 1e-9, "weights do not sum to 1");
      // A zero-error stump gets the clamped alpha, so its mistakes carry no mass.
      if (r.error > 0.0) o.require(std::abs(r.misclassified_mass - 0.5) <= 1e-9, "misclassified mass != 0.5");
    }
  }
  if (o.ok) o.detail = "200 runs, " + std::to_string(rounds) + " accepted rounds";
  return o;
}

Outcome separable_exactness() {
  Outcome o;
  const auto rows = testkit::one_dim_rows({1, 2, 3, 4}, {-1, -1, 1, 1});
  const auto m = train_adaboost(rows);
  o.require(m.stumps.size() == 1, "expected 1 round, got " + std::to_string(m.stumps.size()));
  o.require(!m.stumps.empty() && m.stumps[0].threshold == 2.5, "threshold is not 2.5");
  for (const auto& r : rows) o.require(m.predict(r).label == *r.label, "training accuracy below 1.0");
  if (o.ok) o.detail = "1 round, threshold 2.5, accuracy 1.0";
  return o;
}

Outcome parser_round_trip() {
  Outcome o;
  Rng rng(10);
  for (int i = 0; i < 10000 && o.ok; ++i) {
    GptFeatureVector v;
    for (auto& c : v.c) c = static_cast<int>(uniform_index(rng, 10));
    o.require(parse_feature_vector(format_feature_vector(v)) == v, "round trip failed");
  }
  const std::vector<std::string> malformed = {
      "", "no list here", "[]", "[1, 2, 3, 4, 5]", "[1, 2, 3, 4, 5, 6, 7]", "[1, 2, 3, 4, 5, 6",
      "1, 2, 3, 4, 5, 6", "(1, 2, 3, 4, 5, 6)", "[1.5, 2, 3, 4, 5, 6]", "[a, b, c, d, e, f]",
      "[1; 2; 3; 4; 5; 6]", "[1 2 3 4 5 6]", "[1,, 2, 3, 4, 5]", "{1, 2, 3, 4, 5, 6}",
      "[1, 2, 3, 4, 5, 6,]", "I'm sorry, I cannot answer.", "[1e1, 2, 3, 4, 5, 6]"};
  const std::vector<std::pair<std::string, std::size_t>> out_of_range = {
      {"[12, 3, 4, 5, 6, 7]", 1}, {"[1, 2, 3, 10, 5, 6]", 4}, {"[1, 2, 3, 4, 5, -1]", 6},
      {"Ratings: [0, 99, 0, 0, 0, 0]", 2}, {"[1, 2, 3, 4, 5, 123456789012345678901234]", 6}};
  for (const auto& c : malformed) {
    try {
      parse_feature_vector(c);
      o.require(false, "accepted '" + c + "'");
    } catch (const MalformedVector&) {
    } catch (const std::exception& e) {
      o.require(false, "wrong error for '" + c + "'");
    }
  }
  for (const auto& [c, comp] : out_of_range) {
    try {
      parse_feature_vector(c);
      o.require(false, "accepted '" + c + "'");
    } catch (const OutOfRange& e) {
      o.require(e.component() == comp, "wrong component for '" + c + "'");
    } catch (const std::exception&) {
      o.require(false, "wrong error for '" + c + "'");
    }
  }
  if (o.ok) o.detail = "10000 vectors, " + std::to_string(malformed.size() + out_of_range.size()) + " bad inputs";
  return o;
}

Outcome prompt_golden() {
  Outcome o;
  const auto golden = read_file(std::string(OOCD_TEST_DIR) + "/golden/prompt_dog_cat.txt");
  o.require(render_prompt("A dog runs.", "A cat sleeps.") == golden, "render differs from golden");
  for (auto q : prompt_text::kQuestions) o.require(golden.find(q) != std::string::npos, "question missing from golden");
  if (o.ok) o.detail = std::to_string(golden.size()) + " bytes, 6 questions";
  return o;
}

Outcome gate_contract() {
  Outcome o;
  const double ious[] = {0.0, 0.1, 0.2499, 0.25, 0.2501, 0.7, 1.0};
  std::string text;
  for (std::size_t i = 0; i < std::size(ious); ++i) {
    text += nlohmann::json{{"id", "g" + std::to_string(i)}, {"caption1", "A dog runs."},
                           {"caption2", "A cat sleeps " + std::to_string(i)}, {"iou_score", ious[i]}, {"label", 1}}
                .dump() +
            "\n";
  }
  const auto ds = parse_dataset(text);
  StubProvider stub(1);
  ResponseCache cache;
  AuditLog audit;
  GptFeatureExtractor gpt(stub, cache, audit, {});
  LexicalSimilaritySource lex;
  FeatureSources src{&gpt, &lex, &audit, 2, false};
  const auto recs = extract_features(ds, {}, src);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const bool early = ious[i] < 0.25;
    o.require((recs[i].provenance == Provenance::Gate) == early, "wrong gate decision for " + recs[i].id);
    const auto calls = audit.count(audit_event::kProviderCall, recs[i].id);
    o.require(early ? calls == 0 : calls == 1, "provider-call count wrong for " + recs[i].id);
  }
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double iou = uniform_unit(rng), t = uniform_unit(rng), d = uniform_unit(rng) * (1.0 - iou);
    const double dt = uniform_unit(rng) * (1.0 - t);
    if (gate_by_iou(iou, {t}) == GateDecision::Proceed) {
      o.require(gate_by_iou(iou + d, {t}) == GateDecision::Proceed, "raising iou flipped to EarlyNOOC");
    }
    if (gate_by_iou(iou, {t}) == GateDecision::EarlyNOOC) {
      o.require(gate_by_iou(iou, {t + dt}) == GateDecision::EarlyNOOC, "raising threshold flipped to Proceed");
    }
  }
  if (o.ok) o.detail = "0.25 boundary, 0 calls for gated records, 1000 monotone pairs";
  return o;
}

std::string write_dataset(const std::filesystem::path& path, std::size_t n) {
  std::string text;
  Rng rng(n);
  const char* subjects[] = {"A dog", "The mayor", "Protesters", "A storm", "The team"};
  const char* verbs[] = {"runs in the park", "speaks in Paris", "gather downtown", "hits the coast", "wins the cup"};
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = uniform_index(rng, 5), v = uniform_index(rng, 5), v2 = uniform_index(rng, 5);
    text += nlohmann::json{{"id", "r" + std::to_string(i)},
                           {"caption1", std::string(subjects[s]) + " " + verbs[v] + "."},
                           {"caption2", std::string(subjects[s]) + " " + verbs[v2] + "."},
                           {"iou_score", std::round(uniform_unit(rng) * 100) / 100},
                           {"label", v == v2 ? 0 : 1}}
                .dump() +
            "\n";
  }
  write_file_atomic(path, text);
  return path.string();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "oocd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err,
                  [](std::string_view) -> std::optional<std::string> { return std::nullopt; });
}

Outcome end_to_end_determinism() {
  Outcome o;
  testkit::TempDir a, b;
  std::string outputs[2];
  int i = 0;
  for (const auto* dir : {&a, &b}) {
    const auto ds = write_dataset(*dir / "data.jsonl", 120);
    const auto report = (*dir / "report.md").string();
    const int code = run_cli({"evaluate", "--dataset", ds, "--report", report, "--format", "markdown", "--provider",
                              "stub", "--seed", "42", "--classifier", "all", "--cache-dir", (*dir / "cache").string()});
    o.require(code == 0, "evaluate exited " + std::to_string(code));
    if (code != 0) return o;
    outputs[i++] = read_file(report) + "\x1f" + read_file(report + ".predictions.jsonl");
  }
  o.require(outputs[0] == outputs[1], "reports or dumps differ between runs");
  if (o.ok) o.detail = "report and dump identical (" + std::to_string(outputs[0].size()) + " bytes)";
  return o;
}

Outcome synthetic_accuracy() {
  Outcome o;
  const auto t0 = Clock::now();
  const ClassifierConfig cfg;
  const auto high = cross_validate(generate_synthetic(200, 1.0, 1), 5, cfg, 1);
  const auto none = cross_validate(generate_synthetic(200, 0.0, 1), 5, cfg, 1);
  const double secs = seconds_since(t0);
  o.require(high.mean >= 0.95, "separation 1.0 mean " + format_fixed(high.mean, 4));
  o.require(none.mean >= 0.35 && none.mean <= 0.65, "separation 0.0 mean " + format_fixed(none.mean, 4));
  o.require(secs < 30.0, "took " + format_fixed(secs, 2) + " s");
  o.detail = (o.ok ? "" : o.detail + "; ") + "means " + format_fixed(high.mean, 4) + " / " + format_fixed(none.mean, 4) +
             ", " + format_fixed(secs, 2) + " s";
  return o;
}

Outcome fold_partition() {
  Outcome o;
  for (std::size_t k : {2u, 5u, 10u}) {
    for (std::size_t n : {11u, 100u, 1000u}) {
      const auto folds = cv_fold_indices(n, k, 1000 * k + n);
      std::vector<int> seen(n, 0);
      std::size_t lo = n, hi = 0;
      for (const auto& f : folds) {
        lo = std::min(lo, f.size());
        hi = std::max(hi, f.size());
        for (auto i : f) ++seen[i];
      }
      o.require(folds.size() == k, "wrong fold count");
      o.require(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }), "not a partition");
      o.require(hi - lo <= 1, "fold sizes differ by more than 1");
    }
  }
  if (o.ok) o.detail = "9 (k, n) combinations";
  return o;
}

Outcome model_serialization() {
  Outcome o;
  testkit::TempDir dir;
  const auto train = generate_synthetic(150, 0.4, 2);
  Rng rng(12);
  const auto probe = testkit::random_rows(rng, 1000, false);
  for (auto kind : {ClassifierKind::AdaBoost, ClassifierKind::RandomForest, ClassifierKind::LinearSvm}) {
    ClassifierConfig cfg;
    cfg.kind = kind;
    const auto model = train_model(train, cfg);
    const auto path = dir / (std::string(classifier_name(kind)) + ".json");
    save_model(model, path);
    const auto loaded = load_model(path);
    for (const auto& r : probe) {
      const auto a = predict(model, r), b = predict(loaded, r);
      if (a.label != b.label || a.margin != b.margin) {
        o.require(false, std::string(classifier_name(kind)) + " prediction changed after reload");
        break;
      }
    }
  }
  if (o.ok) o.detail = "3 kinds x 1000 rows";
  return o;
}

Outcome report_consistency() {
  Outcome o;
  testkit::TempDir dir;
  const auto ds = write_dataset(dir / "data.jsonl", 100);
  for (const char* fmt : {"csv", "markdown", "table-text"}) {
    const auto report = (dir / (std::string("report.") + fmt)).string();
    const int code = run_cli({"evaluate", "--dataset", ds, "--report", report, "--format", fmt, "--seed", "3",
                              "--classifier", "all"});
    o.require(code == 0, "evaluate exited " + std::to_string(code));
    if (code != 0) return o;
    const auto dump = read_file(report + ".predictions.jsonl");
    const auto recomputed = accuracies_from_dump(dump);
    const auto meta = EvalReport::from_json(nlohmann::json::parse(read_file(report + ".meta.json")));
    const auto text = read_file(report);
    for (const auto& r : meta.rows) {
      if (r.reference) continue;
      const auto it = recomputed.find(r.method);
      o.require(it != recomputed.end() && it->second.first == r.acc_test && it->second.second == r.acc_full,
                r.method + " disagrees with its dump");
      o.require(text.find(r.acc_test) != std::string::npos && text.find(r.acc_full) != std::string::npos,
                r.method + " accuracy missing from rendered report");
    }
    if (std::string(fmt) == "csv") {
      for (const char* line : {"COSMOS [reported],0.839,0.821\n", "Tran et al. [reported],,0.891\n",
                               "\"La et al., captioning + RoBERTa [reported]\",,0.867\n",
                               "\"La et al., VSRN + DeBERTa [reported]\",,0.760\n"}) {
        o.require(text.find(line) != std::string::npos, std::string("reference row missing: ") + line);
      }
    } else {
      for (const char* v : {"0.821", "0.891", "0.867", "0.760"}) {
        o.require(text.find(v) != std::string::npos, std::string("reference value missing: ") + v);
      }
    }
  }
  if (o.ok) o.detail = "3 formats, 3 classifiers, 4 reference rows";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"stump oracle equivalence", stump_oracle},
      {"boosting invariants", boosting_invariants},
      {"separable-data exactness", separable_exactness},
      {"parser round-trip", parser_round_trip},
      {"prompt golden file", prompt_golden},
      {"gate contract", gate_contract},
      {"end-to-end determinism", end_to_end_determinism},
      {"synthetic pipeline accuracy", synthetic_accuracy},
      {"fold partition property", fold_partition},
      {"model serialization", model_serialization},
      {"report self-consistency", report_consistency},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.ok ? "PASS " : "FAIL ") << name << " -- " << o.detail << std::endl;
    failed += o.ok ? 0 : 1;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
