// Categorized method and field signatures: taint sources, sensitive APIs,
// and the API families probed by the boolean trigger features.

#pragma once

#include "json.hpp"

#include <array>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shso {

enum class Category { Source, Sensitive, Native, Dynload, Reflect, Service, SourceField };

inline constexpr std::array<Category, 7> kAllCategories = {
    Category::Source,  Category::Sensitive, Category::Native,     Category::Dynload,
    Category::Reflect, Category::Service,   Category::SourceField};

/// JSON key of a category ("sources", "sensitive", ..., "source_fields").
std::string_view category_key(Category c);

/// Dummy classes owned by the instrumentation pass.
inline constexpr std::string_view kIfClass = "IfClass";
inline constexpr std::string_view kBuildClass = "BuildClass";

class CatalogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Catalog {
public:
    Catalog() = default;

    static Catalog from_json(const nlohmann::json& doc);
    static Catalog load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    /// Adds a signature after validating it. Throws CatalogError.
    void add(Category c, const std::string& signature);

    bool contains(Category c, std::string_view signature) const;
    std::set<Category> classify(std::string_view signature) const;
    const std::set<std::string, std::less<>>& entries(Category c) const;

private:
    std::array<std::set<std::string, std::less<>>, kAllCategories.size()> sets_;
};

/// The catalog shipped with the tool (also written to data/catalog.json).
Catalog default_catalog();

/// API family of a source signature, used to name trigger types
/// ("Telephony", "Build", "Location", ...). Instrumented Build getters map
/// to "Build"; unknown classes fall back to the class name.
std::string signature_family(std::string_view signature);

} // namespace shso
