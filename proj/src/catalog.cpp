#include "shso/catalog.hpp"

#include <cctype>
#include <fstream>
#include <map>

namespace shso {

namespace {

bool is_ident(std::string_view s)
{
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
        return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
            return false;
    return true;
}

std::size_t slot(Category c) { return static_cast<std::size_t>(c); }

} // namespace

std::string_view category_key(Category c)
{
    switch (c) {
    case Category::Source: return "sources";
    case Category::Sensitive: return "sensitive";
    case Category::Native: return "native";
    case Category::Dynload: return "dynload";
    case Category::Reflect: return "reflect";
    case Category::Service: return "service";
    case Category::SourceField: return "source_fields";
    }
    return "";
}

void Catalog::add(Category c, const std::string& signature)
{
    const auto dot = signature.find('.');
    if (dot == std::string::npos || !is_ident(std::string_view(signature).substr(0, dot)) ||
        !is_ident(std::string_view(signature).substr(dot + 1)))
        throw CatalogError(std::string(category_key(c)) + ": malformed signature '" + signature +
                           "' (expected Class.member)");
    const auto cls = std::string_view(signature).substr(0, dot);
    if (cls == kIfClass || cls == kBuildClass)
        throw CatalogError(std::string(category_key(c)) + ": reserved instrumentation name '" +
                           signature + "'");
    sets_[slot(c)].insert(signature);
}

Catalog Catalog::from_json(const nlohmann::json& doc)
{
    if (!doc.is_object())
        throw CatalogError("catalog must be a JSON object");
    Catalog cat;
    for (const auto& [key, value] : doc.items()) {
        const Category* found = nullptr;
        for (const auto& c : kAllCategories)
            if (category_key(c) == key)
                found = &c;
        if (!found)
            throw CatalogError("unknown catalog key '" + key + "'");
        if (!value.is_array())
            throw CatalogError(key + ": expected an array of strings");
        for (const auto& item : value) {
            if (!item.is_string())
                throw CatalogError(key + ": expected an array of strings");
            cat.add(*found, item.get<std::string>());
        }
    }
    return cat;
}

Catalog Catalog::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw CatalogError("cannot open catalog " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw CatalogError("catalog " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

nlohmann::json Catalog::to_json() const
{
    nlohmann::json doc = nlohmann::json::object();
    for (auto c : kAllCategories) {
        auto& arr = doc[std::string(category_key(c))] = nlohmann::json::array();
        for (const auto& s : sets_[slot(c)])
            arr.push_back(s);
    }
    return doc;
}

bool Catalog::contains(Category c, std::string_view signature) const
{
    return sets_[slot(c)].count(signature) > 0;
}

std::set<Category> Catalog::classify(std::string_view signature) const
{
    std::set<Category> out;
    for (auto c : kAllCategories)
        if (contains(c, signature))
            out.insert(c);
    return out;
}

const std::set<std::string, std::less<>>& Catalog::entries(Category c) const { return sets_[slot(c)]; }

Catalog default_catalog()
{
    Catalog cat;
    for (const char* s : {
             "Tel.getDeviceId", "Tel.getNetworkOperatorName", "Tel.getNetworkCountryIso",
             "Tel.getSimSerialNumber", "Tel.getLine1Number", "Gps.getLastKnownLocation",
             "Gps.getLongitude", "Gps.getLatitude", "Net.getResponseCode", "Net.getResponseMessage",
             "Db.getString", "Db.getInt", "Db.getCount", "Wifi.isWifiEnabled", "Wifi.getConnectionInfo",
             "Power.isScreenOn", "Power.isInteractive", "Audio.getStreamVolume", "Audio.isMusicActive",
             "Cam.getCameraIdList", "Conn.getActiveNetworkInfo", "Conn.getNetworkInfo",
             "Clock.currentTimeMillis"})
        cat.add(Category::Source, s);
    for (const char* s : {
             "Tel.getDeviceId", "Tel.getLine1Number", "Tel.getSimSerialNumber",
             "Gps.getLastKnownLocation", "Gps.getLongitude", "Gps.getLatitude", "Sms.send",
             "Sms.readInbox", "Net.send", "Net.openConnection", "Contacts.query", "Cam.open",
             "Audio.record", "Acc.getAccounts", "Wifi.getMacAddress", "Bt.getAddress", "Pkg.getInstalled",
             "File.writeExternal"})
        cat.add(Category::Sensitive, s);
    for (const char* s : {"Sys.loadNative", "Native.exec"})
        cat.add(Category::Native, s);
    for (const char* s : {"DexLoader.load", "ClassLoader.loadClass"})
        cat.add(Category::Dynload, s);
    for (const char* s : {"Refl.forName", "Refl.invoke"})
        cat.add(Category::Reflect, s);
    for (const char* s : {"Svc.start", "Job.schedule", "Alarm.set"})
        cat.add(Category::Service, s);
    for (const char* s : {"Build.MODEL", "Build.MANUFACTURER", "Build.BRAND", "Build.PRODUCT",
                          "Build.HARDWARE", "Build.FINGERPRINT"})
        cat.add(Category::SourceField, s);
    return cat;
}

std::string signature_family(std::string_view signature)
{
    static const std::map<std::string, std::string, std::less<>> families = {
        {"BuildClass", "Build"}, {"Build", "Build"},      {"Tel", "Telephony"},
        {"Sms", "Telephony"},    {"Gps", "Location"},     {"Net", "Internet"},
        {"Http", "Internet"},    {"Db", "Database"},      {"Wifi", "Wi-Fi"},
        {"Power", "Power"},      {"Audio", "Audio"},      {"Cam", "Camera"},
        {"Conn", "Connectivity"}, {"Clock", "Time"},      {"View", "View"},
        {"Activity", "Activity"}};
    const auto cls = signature.substr(0, signature.find('.'));
    if (auto it = families.find(cls); it != families.end())
        return it->second;
    return std::string(cls);
}

} // namespace shso
