// The nine-dimensional trigger descriptor used by the anomaly detector:
//
//   S   distinct sensitive APIs reachable from the guarded code
//   N   native code reachable from the guarded code
//   D   dynamic code loading reachable from the guarded code
//   R   reflection reachable from the guarded code
//   B   background services started from the guarded code
//   P   a condition variable is read in the guarded code before redefinition
//   M1  app methods called from the guarded code and from nowhere else
//   S1  sensitive APIs reached only through the guarded code
//   J   Jaccard distance between the sensitive APIs of the two branches

#pragma once

#include "json.hpp"
#include "shso/callgraph.hpp"
#include "shso/catalog.hpp"
#include "shso/triggers.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace shso {

inline constexpr std::size_t kFeatureCount = 9;
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {"S", "N", "D", "R", "B",
                                                                         "P", "M1", "S1", "J"};

struct FeatureVector {
    std::size_t S = 0;
    int N = 0;
    int D = 0;
    int R = 0;
    int B = 0;
    int P = 0;
    std::size_t M1 = 0;
    std::size_t S1 = 0;
    double J = 0.0;

    std::array<double, kFeatureCount> to_array() const;
    static FeatureVector from_array(const std::array<double, kFeatureCount>& values);
    bool operator==(const FeatureVector&) const = default;
};

std::ostream& operator<<(std::ostream& os, const FeatureVector& v);

/// `{"S": 1, ..., "J": 0.5}`; counts and flags as integers.
nlohmann::json vector_to_json(const FeatureVector& v);
FeatureVector vector_from_json(const nlohmann::json& j);

struct FeatureContext {
    const Program& program;
    const CallGraph& callgraph;
    const Catalog& catalog;
    const ProgramGraphs& graphs;
    std::size_t depth_limit = kDefaultDepthLimit;
};

struct FeatureFlags {
    int N = 0;
    int D = 0;
    int R = 0;
    int B = 0;
    bool operator==(const FeatureFlags&) const = default;
};

/// 1 - |a n b| / |a u b|, and 0 when both sets are empty.
double jaccard_distance(const std::set<std::string>& a, const std::set<std::string>& b);

/// Sensitive APIs reachable from the given statements of `method`.
std::set<std::string> sensitive_reached(const FeatureContext& ctx, const std::string& method,
                                        const std::vector<std::size_t>& statements);

std::size_t feature_S(const Trigger& t, const FeatureContext& ctx);
FeatureFlags feature_flags(const Trigger& t, const FeatureContext& ctx);
int feature_P(const Trigger& t, const FeatureContext& ctx);
std::pair<std::size_t, std::size_t> feature_M1_S1(const Trigger& t, const FeatureContext& ctx);
double feature_J(const Trigger& t, const FeatureContext& ctx);

FeatureVector extract_vector(const Trigger& t, const FeatureContext& ctx);

/// A vector tagged with where it came from, as written to the training CSV.
struct LabeledVector {
    std::string app;
    std::string method;
    std::string label;
    FeatureVector vector;
};

void write_vectors_csv(std::ostream& out, const std::vector<LabeledVector>& rows);
std::vector<LabeledVector> read_vectors_csv(std::istream& in);

} // namespace shso
