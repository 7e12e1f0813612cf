// Synthetic labeled corpora: apps built from benign trigger templates, some
// carrying one planted logic bomb, plus a concrete interpreter whose value
// tags serve as the ground truth for the static taint analysis.

#pragma once

#include "json.hpp"
#include "shso/catalog.hpp"
#include "shso/features.hpp"
#include "shso/tir.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace shso {

struct TemplateWeights {
    // benign
    double null_check = 1.0;
    double ui_state = 1.0;
    double config = 1.0;
    double retry_loop = 1.0;
    // bombs
    double emulator = 1.0;
    double country_sms = 1.0;
    double screen_ad = 1.0;
    double data_stealer = 1.0;
    double time_bomb = 1.0;
};

struct CorpusSpec {
    std::uint64_t seed = 1;
    std::size_t apps = 10;
    double bomb_rate = 0.1;
    std::size_t min_triggers = 3; // benign triggers per app
    std::size_t max_triggers = 6;
    std::string name_prefix = "app";
    TemplateWeights weights;

    /// Throws std::invalid_argument when weights are negative, no benign
    /// template is enabled, or bombs are requested with none enabled.
    void validate() const;
    nlohmann::json to_json() const;
    static CorpusSpec from_json(const nlohmann::json& doc);
};

using Value = std::variant<std::int64_t, std::string>;

struct PlantedTrigger {
    std::string method; // signature
    std::string label;
    bool is_bomb = false;
    std::string template_name;
    std::string type;
    FeatureVector expected;
};

struct AppTruth {
    std::string app; // file name, e.g. app_0003.tir
    bool has_bomb = false;
    std::vector<PlantedTrigger> triggers;
    /// Finite value domains for external calls and source fields, keyed by
    /// `Class.member`; the interpreter enumerates their product.
    std::map<std::string, std::vector<Value>> inputs;
};

struct GroundTruth {
    std::vector<AppTruth> apps;

    nlohmann::json to_json() const;
    static GroundTruth from_json(const nlohmann::json& doc);
};

struct GeneratedApp {
    std::string name;
    Program program;
};

struct Corpus {
    std::vector<GeneratedApp> apps;
    GroundTruth truth;
};

/// Deterministic in spec.seed. Expected feature vectors come from the
/// templates' own bookkeeping, not from the feature extractor.
Corpus generate(const CorpusSpec& spec);

/// Writes one .tir per app, truth.json, spec.json and catalog.json.
void write_corpus(const Corpus& corpus, const CorpusSpec& spec, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Concrete interpreter

using InputBinding = std::map<std::string, Value>;

struct ExecutionTrace {
    std::vector<std::pair<std::string, std::string>> executed; // (method, label)
    /// If-statements whose operands carried a source tag when evaluated.
    std::set<std::pair<std::string, std::string>> tagged_conditions;
};

class StepLimitExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultStepLimit = 100'000;

/// Runs every entry method in program order against shared static fields.
/// External calls return their bound value (0 if unbound); catalog sources
/// and source fields tag their value with their own name, and other
/// external calls pass their arguments' tags to the result.
ExecutionTrace interpret(const Program& program, const InputBinding& inputs, const Catalog& tag_sources,
                         std::size_t step_limit = kDefaultStepLimit);

/// Cartesian product of the domains, in key order.
std::vector<InputBinding> enumerate_bindings(const std::map<std::string, std::vector<Value>>& domains);

nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

} // namespace shso
