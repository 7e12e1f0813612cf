#include "shso/pipeline.hpp"

#include "shso/callgraph.hpp"
#include "shso/cfg.hpp"
#include "shso/instrument.hpp"
#include "shso/taint.hpp"
#include "shso/triggers.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace shso {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

nlohmann::json record_json(const TriggerRecord& t)
{
    return {{"method", t.method},
            {"label", t.label},
            {"condition", t.condition},
            {"type", t.type},
            {"sources", t.sources},
            {"true_size", t.true_size},
            {"false_size", t.false_size},
            {"vector", vector_to_json(t.vector)},
            {"score", t.score ? nlohmann::json(*t.score) : nlohmann::json(nullptr)},
            {"is_outlier", t.is_outlier}};
}

} // namespace

std::string_view status_text(AppStatus s)
{
    switch (s) {
    case AppStatus::Ok:
        return "ok";
    case AppStatus::ParseError:
        return "parse_error";
    case AppStatus::Timeout:
        return "timeout";
    case AppStatus::Error:
        return "error";
    }
    return "error";
}

AppAnalysis analyze_program(const Program& program, const Catalog& catalog, const AnalysisOptions& options,
                            bool keep_instrumented)
{
    AppAnalysis out;
    auto start = Clock::now();
    const InstrumentedProgram inst = instrument(program, catalog);
    if (keep_instrumented)
        out.instrumented = emit_program(inst.program);
    const TaintResult taint = run_taint(inst, catalog, TaintOptions{options.timeout});
    out.timing.taint_ms = ms_since(start);
    if (taint.timed_out) {
        out.status = AppStatus::Timeout;
        out.error = "taint analysis timed out";
        return out;
    }

    start = Clock::now();
    const ProgramGraphs graphs(program);
    const CallGraph cg = CallGraph::build(program);
    const FeatureContext ctx{program, cg, catalog, graphs, options.depth_limit};
    for (const Trigger& t : extract_triggers(taint.hits, graphs)) {
        TriggerRecord r;
        r.method = t.method;
        r.label = t.label;
        r.condition = t.condition;
        r.type = t.type;
        r.sources = t.provenance;
        r.true_size = t.true_branch.size();
        r.false_size = t.false_branch.size();
        r.vector = extract_vector(t, ctx);
        out.triggers.push_back(std::move(r));
    }
    out.timing.features_ms = ms_since(start);
    return out;
}

AppAnalysis analyze_file(const std::filesystem::path& path, const Catalog& catalog,
                         const AnalysisOptions& options, bool keep_instrumented)
{
    const auto start = Clock::now();
    AppAnalysis fail;
    fail.app = path.filename().string();
    fail.path = path;
    Program program;
    try {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw std::runtime_error("cannot read " + path.string());
        std::ostringstream text;
        text << in.rdbuf();
        program = parse_program(text.str());
    } catch (const std::exception& e) {
        fail.status = AppStatus::ParseError;
        fail.error = e.what();
        return fail;
    }
    const double parse_ms = ms_since(start);
    try {
        AppAnalysis out = analyze_program(program, catalog, options, keep_instrumented);
        out.app = fail.app;
        out.path = path;
        out.timing.parse_ms = parse_ms;
        return out;
    } catch (const std::exception& e) {
        fail.status = AppStatus::Error;
        fail.error = e.what();
        fail.timing.parse_ms = parse_ms;
        return fail;
    }
}

void score_app(AppAnalysis& app, const SvmModel& model)
{
    const auto start = Clock::now();
    for (auto& t : app.triggers) {
        const auto values = t.vector.to_array();
        const Prediction p = predict(model, values);
        t.score = p.score;
        t.is_outlier = p.is_outlier;
    }
    app.timing.predict_ms = ms_since(start);
}

std::vector<AppAnalysis> analyze_files(const std::vector<std::filesystem::path>& paths, const Catalog& catalog,
                                       const AnalysisOptions& options, std::size_t workers,
                                       bool keep_instrumented)
{
    std::vector<AppAnalysis> results(paths.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < paths.size(); i = next++)
            results[i] = analyze_file(paths[i], catalog, options, keep_instrumented);
    };
    const std::size_t n = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(paths.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < n; ++i)
        pool.emplace_back(work);
    work();
    return results;
}

std::vector<std::filesystem::path> list_apps(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
        throw UsageError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".tir")
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------

nlohmann::json TrainResult::report() const
{
    return {{"schema", 1},
            {"apps", apps},
            {"failed_apps", failed_apps},
            {"vectors_extracted", vectors_extracted},
            {"vectors_used", vectors_used},
            {"nu", model.nu},
            {"gamma", model.gamma},
            {"cv", {{"folds", cv.fold_accuracy}, {"mean", cv.mean}}},
            {"fit",
             {{"iterations", diagnostics.iterations},
              {"kkt_violation", diagnostics.kkt_violation},
              {"converged", diagnostics.converged},
              {"free_support_vectors", diagnostics.free_support_vectors},
              {"bounded_support_vectors", diagnostics.bounded_support_vectors}}}};
}

TrainResult cmd_train(const std::filesystem::path& corpus_dir, const Catalog& catalog, const TrainOptions& options)
{
    const auto paths = list_apps(corpus_dir);
    TrainResult out;
    out.apps = paths.size();
    for (auto& a : analyze_files(paths, catalog, options.analysis, options.workers)) {
        if (a.status != AppStatus::Ok) {
            out.failed_apps.push_back(a.app + ": " + a.error);
            continue;
        }
        for (auto& t : a.triggers)
            out.vectors.push_back({a.app, t.method, t.label, t.vector});
    }
    out.vectors_extracted = out.vectors.size();
    if (out.vectors.empty())
        throw std::runtime_error("no vectors extracted");

    std::vector<std::size_t> chosen(out.vectors.size());
    for (std::size_t i = 0; i < chosen.size(); ++i)
        chosen[i] = i;
    if (options.sample && *options.sample < chosen.size()) {
        chosen = seeded_permutation(out.vectors.size(), options.seed);
        chosen.resize(*options.sample);
        std::sort(chosen.begin(), chosen.end());
    }
    std::vector<Sample> samples;
    for (std::size_t i : chosen) {
        const auto v = out.vectors[i].vector.to_array();
        samples.emplace_back(v.begin(), v.end());
    }
    out.vectors_used = samples.size();

    TrainedSvm trained = fit(samples, options.svm);
    out.model = std::move(trained.model);
    out.diagnostics = trained.diagnostics;
    if (options.folds >= 2 && samples.size() >= options.folds)
        out.cv = cross_validate(samples, options.svm, options.folds, options.seed);
    return out;
}

nlohmann::json summarize(const nlohmann::json& apps)
{
    std::size_t ok = 0, failed = 0, timed_out = 0, with_shso = 0, triggers = 0, shsos = 0;
    std::map<std::string, std::size_t> trigger_types, shso_types;
    for (const auto& a : apps) {
        const std::string status = a.at("status").get<std::string>();
        if (status == "ok")
            ++ok;
        else if (status == "timeout")
            ++timed_out;
        else
            ++failed;
        std::size_t app_shsos = 0;
        for (const auto& t : a.at("triggers")) {
            ++triggers;
            ++trigger_types[t.at("type").get<std::string>()];
            if (t.at("is_outlier").get<bool>()) {
                ++app_shsos;
                ++shso_types[t.at("type").get<std::string>()];
            }
        }
        shsos += app_shsos;
        with_shso += app_shsos > 0 ? 1 : 0;
    }
    const double per_app = ok ? static_cast<double>(shsos) / static_cast<double>(ok) : 0.0;
    const double reduction = triggers ? 1.0 - static_cast<double>(shsos) / static_cast<double>(triggers) : 0.0;
    return {{"apps", apps.size()},
            {"apps_ok", ok},
            {"apps_failed", failed},
            {"apps_timed_out", timed_out},
            {"apps_with_shso", with_shso},
            {"triggers", triggers},
            {"shsos", shsos},
            {"shsos_per_app", per_app},
            {"reduction", reduction},
            {"trigger_types", trigger_types},
            {"shso_types", shso_types}};
}

AnalyzeResult cmd_analyze(const std::vector<std::filesystem::path>& inputs, const Catalog& catalog,
                          const SvmModel& model, const AnalyzeOptions& options)
{
    std::vector<std::filesystem::path> paths;
    for (const auto& in : inputs) {
        if (std::filesystem::is_directory(in)) {
            const auto more = list_apps(in);
            paths.insert(paths.end(), more.begin(), more.end());
        } else if (std::filesystem::is_regular_file(in)) {
            paths.push_back(in);
        } else {
            throw UsageError("no such app or directory: " + in.string());
        }
    }
    std::sort(paths.begin(), paths.end());
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());

    auto results = analyze_files(paths, catalog, options.analysis, options.workers,
                                 options.emit_instrumented.has_value());
    AnalyzeResult out;
    nlohmann::json apps = nlohmann::json::array();
    nlohmann::json timing = nlohmann::json::array();
    for (auto& a : results) {
        if (a.status == AppStatus::Ok)
            score_app(a, model);
        else
            out.partial = true;
        if (options.emit_instrumented && a.status == AppStatus::Ok) {
            std::filesystem::create_directories(*options.emit_instrumented);
            std::ofstream(*options.emit_instrumented / a.app, std::ios::binary) << a.instrumented;
        }
        nlohmann::json triggers = nlohmann::json::array();
        for (const auto& t : a.triggers)
            triggers.push_back(record_json(t));
        apps.push_back({{"app", a.app},
                        {"status", status_text(a.status)},
                        {"error", a.error},
                        {"triggers", triggers}});
        timing.push_back({{"app", a.app},
                          {"parse_ms", a.timing.parse_ms},
                          {"taint_ms", a.timing.taint_ms},
                          {"features_ms", a.timing.features_ms},
                          {"predict_ms", a.timing.predict_ms}});
    }
    out.report = {{"schema", 1},
                  {"model", {{"nu", model.nu}, {"gamma", model.gamma}}},
                  {"apps", apps},
                  {"summary", summarize(apps)}};
    out.timing = {{"schema", 1}, {"apps", timing}};
    return out;
}

nlohmann::json ScoreResult::to_json() const
{
    return {{"triggers", triggers},
            {"shsos", shsos},
            {"planted_bombs", planted_bombs},
            {"true_positives", true_positives},
            {"false_positives", false_positives},
            {"precision", precision},
            {"recall", recall},
            {"reduction", reduction}};
}

ScoreResult cmd_score(const nlohmann::json& report, const GroundTruth& truth)
{
    using Key = std::tuple<std::string, std::string, std::string>;
    std::set<std::string> report_apps, truth_apps;
    std::set<Key> bombs;
    for (const auto& a : truth.apps) {
        truth_apps.insert(a.app);
        for (const auto& t : a.triggers)
            if (t.is_bomb)
                bombs.insert({a.app, t.method, t.label});
    }
    ScoreResult s;
    s.planted_bombs = bombs.size();
    for (const auto& a : report.at("apps")) {
        const std::string app = a.at("app").get<std::string>();
        report_apps.insert(app);
        for (const auto& t : a.at("triggers")) {
            ++s.triggers;
            if (!t.at("is_outlier").get<bool>())
                continue;
            ++s.shsos;
            if (bombs.count({app, t.at("method").get<std::string>(), t.at("label").get<std::string>()}))
                ++s.true_positives;
            else
                ++s.false_positives;
        }
    }
    if (report_apps != truth_apps)
        throw std::invalid_argument("report and truth cover different apps");
    s.precision = s.shsos ? static_cast<double>(s.true_positives) / static_cast<double>(s.shsos) : 1.0;
    s.recall = s.planted_bombs ? static_cast<double>(s.true_positives) / static_cast<double>(s.planted_bombs) : 1.0;
    s.reduction = s.triggers ? 1.0 - static_cast<double>(s.shsos) / static_cast<double>(s.triggers) : 0.0;
    return s;
}

std::string dump_cfg(const Program& program, const std::string& signature)
{
    const MethodDef* m = program.find_method(signature);
    if (!m)
        throw UsageError("no method " + signature);
    const Cfg cfg = build_cfg(*m);
    const DomTree dom = compute_dominators(cfg);
    return cfg.to_dot("cfg") + dom.to_dot(cfg, "dom");
}

} // namespace shso
