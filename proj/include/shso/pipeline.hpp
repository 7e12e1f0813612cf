// End-to-end pipeline: parse, instrument, taint, extract triggers and
// vectors, and score them against a trained model. The CLI subcommands are
// thin wrappers over the cmd_* functions here.

#pragma once

#include "json.hpp"
#include "shso/catalog.hpp"
#include "shso/corpusgen.hpp"
#include "shso/features.hpp"
#include "shso/ocsvm.hpp"
#include "shso/tir.hpp"

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace shso {

struct AnalysisOptions {
    std::size_t depth_limit = kDefaultDepthLimit;
    std::chrono::milliseconds timeout{60'000};
};

struct PhaseTiming {
    double parse_ms = 0.0;
    double taint_ms = 0.0; // instrumentation included
    double features_ms = 0.0;
    double predict_ms = 0.0;
};

struct TriggerRecord {
    std::string method;
    std::string label;
    std::string condition;
    std::string type;
    std::set<std::string> sources;
    std::size_t true_size = 0;
    std::size_t false_size = 0;
    FeatureVector vector;
    std::optional<double> score;
    bool is_outlier = false;
};

enum class AppStatus { Ok, ParseError, Timeout, Error };
std::string_view status_text(AppStatus s);

struct AppAnalysis {
    std::string app; // file name
    std::filesystem::path path;
    AppStatus status = AppStatus::Ok;
    std::string error;
    std::vector<TriggerRecord> triggers;
    PhaseTiming timing;
    std::string instrumented; // emitted instrumented program, if requested
};

/// Analysis of one parsed program. Sets status Timeout (with no triggers)
/// when taint analysis runs out of time.
AppAnalysis analyze_program(const Program& program, const Catalog& catalog, const AnalysisOptions& options,
                            bool keep_instrumented = false);

/// Reads and parses the file first; parse and validation failures become
/// a ParseError status rather than an exception.
AppAnalysis analyze_file(const std::filesystem::path& path, const Catalog& catalog,
                         const AnalysisOptions& options, bool keep_instrumented = false);

void score_app(AppAnalysis& app, const SvmModel& model);

/// Analyzes files on `workers` threads; results keep the input order.
std::vector<AppAnalysis> analyze_files(const std::vector<std::filesystem::path>& paths, const Catalog& catalog,
                                       const AnalysisOptions& options, std::size_t workers,
                                       bool keep_instrumented = false);

/// `*.tir` files directly under dir, sorted by path.
std::vector<std::filesystem::path> list_apps(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Commands

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainOptions {
    SvmParams svm;
    std::uint64_t seed = 1;
    std::optional<std::size_t> sample; // training vectors to draw; all when unset
    std::size_t folds = 10;
    std::size_t workers = 1;
    AnalysisOptions analysis;
};

struct TrainResult {
    SvmModel model;
    CrossValidation cv;
    FitDiagnostics diagnostics;
    std::size_t apps = 0;
    std::size_t vectors_extracted = 0;
    std::size_t vectors_used = 0;
    std::vector<std::string> failed_apps;
    std::vector<LabeledVector> vectors; // all extracted vectors, app order

    nlohmann::json report() const;
};

/// Throws std::runtime_error("no vectors extracted") when the corpus yields
/// nothing to train on.
TrainResult cmd_train(const std::filesystem::path& corpus_dir, const Catalog& catalog, const TrainOptions& options);

struct AnalyzeOptions {
    AnalysisOptions analysis;
    std::size_t workers = 1;
    std::optional<std::filesystem::path> emit_instrumented; // directory
};

struct AnalyzeResult {
    nlohmann::json report; // deterministic, no timing
    nlohmann::json timing; // per-app phase timing
    bool partial = false;  // some app failed or timed out
};

/// Inputs may be files or directories of `.tir` files. Apps are reported
/// sorted by path.
AnalyzeResult cmd_analyze(const std::vector<std::filesystem::path>& inputs, const Catalog& catalog,
                          const SvmModel& model, const AnalyzeOptions& options);

/// Summary block recomputed from the per-trigger records of a report.
nlohmann::json summarize(const nlohmann::json& apps);

struct ScoreResult {
    std::size_t triggers = 0;
    std::size_t shsos = 0;
    std::size_t planted_bombs = 0;
    std::size_t true_positives = 0; // flagged planted bombs
    std::size_t false_positives = 0;
    double precision = 0.0; // 1 when nothing is flagged
    double recall = 0.0;    // 1 when nothing is planted
    double reduction = 0.0; // 1 - shsos / triggers

    nlohmann::json to_json() const;
};

/// Trigger-level comparison of a report against generator truth. Throws
/// std::invalid_argument when the app sets differ.
ScoreResult cmd_score(const nlohmann::json& report, const GroundTruth& truth);

/// Graphviz text of one method's CFG and dominator tree.
std::string dump_cfg(const Program& program, const std::string& signature);

} // namespace shso
