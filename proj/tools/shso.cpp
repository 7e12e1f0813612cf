// Command-line front end: gen, train, analyze, score, dump-cfg.
//
// Exit codes: 0 completed (whatever was found), 1 usage or fatal error,
// 2 completed with some apps failed or timed out.

#include "CLI11.hpp"
#include "shso/corpusgen.hpp"
#include "shso/pipeline.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace shso;

nlohmann::json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot read " + path.string());
    return nlohmann::json::parse(in);
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw UsageError("cannot write " + path.string());
    out << text;
}

void emit(const std::string& out, const std::string& text)
{
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_text(out, text);
}

struct Common {
    std::string catalog;
    double timeout_secs = 60.0;
    std::size_t depth_limit = kDefaultDepthLimit;
    std::size_t workers = 1;

    Catalog load_catalog() const { return catalog.empty() ? default_catalog() : Catalog::load(catalog); }
    AnalysisOptions analysis() const
    {
        return {depth_limit, std::chrono::milliseconds(static_cast<long long>(timeout_secs * 1000.0))};
    }
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--catalog", c.catalog, "Catalog JSON (default: built-in catalog)")->check(CLI::ExistingFile);
    cmd->add_option("--timeout-secs", c.timeout_secs, "Per-app taint analysis timeout")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--depth-limit", c.depth_limit, "Call-graph depth explored from guarded code")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--workers", c.workers, "Apps analyzed concurrently")->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hidden sensitive operation detector for TIR programs"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic labeled corpus");
    std::string gen_spec, gen_out;
    std::optional<std::uint64_t> gen_seed;
    std::optional<std::size_t> gen_apps;
    std::optional<double> gen_bomb_rate;
    gen->add_option("--spec", gen_spec, "CorpusSpec JSON")->check(CLI::ExistingFile);
    gen->add_option("--seed", gen_seed, "Overrides the seed from --spec");
    gen->add_option("--apps", gen_apps, "Overrides the app count from --spec");
    gen->add_option("--bomb-rate", gen_bomb_rate, "Overrides the bomb rate from --spec");
    gen->add_option("--out", gen_out, "Output directory")->required();

    // train
    auto* train = app.add_subcommand("train", "Fit the anomaly detector on a reference corpus");
    Common train_common;
    add_common(train, train_common);
    std::string train_corpus, train_out, train_report;
    TrainOptions train_opts;
    std::optional<double> train_gamma;
    std::optional<std::size_t> train_sample;
    train->add_option("corpus", train_corpus, "Directory of .tir apps")->required()->check(CLI::ExistingDirectory);
    train->add_option("--out,--model", train_out, "Model JSON to write")->required();
    train->add_option("--report", train_report, "Training report JSON (default: stdout)");
    train->add_option("--nu", train_opts.svm.nu, "Outlier fraction bound")->check(CLI::Range(0.0, 1.0));
    train->add_option("--gamma", train_gamma, "RBF width (default: 1/9)")->check(CLI::PositiveNumber);
    train->add_option("--seed", train_opts.seed, "Seed for sampling and CV folds");
    train->add_option("--sample", train_sample, "Number of training vectors to draw")->check(CLI::PositiveNumber);
    train->add_option("--folds", train_opts.folds, "Cross-validation folds (0 disables)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Report triggers and suspicious hidden sensitive operations");
    Common analyze_common;
    add_common(analyze, analyze_common);
    std::vector<std::string> analyze_inputs;
    std::string analyze_model, analyze_out, analyze_emit;
    analyze->add_option("apps", analyze_inputs, ".tir files or directories")->required();
    analyze->add_option("--model", analyze_model, "Model JSON")->required()->check(CLI::ExistingFile);
    analyze->add_option("--out", analyze_out, "Report JSON (default: stdout); timing goes to <out>.timing.json");
    analyze->add_option("--emit-instrumented", analyze_emit, "Directory for instrumented programs");

    // score
    auto* score = app.add_subcommand("score", "Compare a report with corpus ground truth");
    std::string score_report, score_truth, score_out;
    score->add_option("report", score_report, "Report JSON")->required()->check(CLI::ExistingFile);
    score->add_option("truth", score_truth, "truth.json")->required()->check(CLI::ExistingFile);
    score->add_option("--out", score_out, "Metrics JSON (default: stdout)");

    // dump-cfg
    auto* dump = app.add_subcommand("dump-cfg", "Print a method's CFG and dominator tree as Graphviz");
    std::string dump_app, dump_method, dump_out;
    dump->add_option("app", dump_app, ".tir file")->required()->check(CLI::ExistingFile);
    dump->add_option("--method", dump_method, "Method signature, e.g. Main.onCreate/0")->required();
    dump->add_option("--out", dump_out, "Output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen) {
            CorpusSpec spec = gen_spec.empty() ? CorpusSpec{} : CorpusSpec::from_json(read_json(gen_spec));
            if (gen_seed)
                spec.seed = *gen_seed;
            if (gen_apps)
                spec.apps = *gen_apps;
            if (gen_bomb_rate)
                spec.bomb_rate = *gen_bomb_rate;
            try {
                spec.validate();
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            write_corpus(generate(spec), spec, gen_out);
            return 0;
        }
        if (*train) {
            train_opts.svm.gamma = train_gamma;
            train_opts.sample = train_sample;
            train_opts.workers = train_common.workers;
            train_opts.analysis = train_common.analysis();
            const TrainResult r = cmd_train(train_corpus, train_common.load_catalog(), train_opts);
            write_text(train_out, r.model.to_json().dump(2) + "\n");
            emit(train_report, r.report().dump(2) + "\n");
            return r.failed_apps.empty() ? 0 : 2;
        }
        if (*analyze) {
            AnalyzeOptions opts{analyze_common.analysis(), analyze_common.workers, std::nullopt};
            if (!analyze_emit.empty())
                opts.emit_instrumented = analyze_emit;
            std::vector<std::filesystem::path> inputs(analyze_inputs.begin(), analyze_inputs.end());
            const SvmModel model = SvmModel::from_json(read_json(analyze_model));
            const AnalyzeResult r = cmd_analyze(inputs, analyze_common.load_catalog(), model, opts);
            emit(analyze_out, r.report.dump(2) + "\n");
            if (!analyze_out.empty() && analyze_out != "-")
                write_text(analyze_out + ".timing.json", r.timing.dump(2) + "\n");
            return r.partial ? 2 : 0;
        }
        if (*score) {
            const ScoreResult s =
                cmd_score(read_json(score_report), GroundTruth::from_json(read_json(score_truth)));
            emit(score_out, s.to_json().dump(2) + "\n");
            return 0;
        }
        if (*dump) {
            std::ifstream in(dump_app, std::ios::binary);
            std::ostringstream text;
            text << in.rdbuf();
            emit(dump_out, dump_cfg(parse_program(text.str()), dump_method));
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
