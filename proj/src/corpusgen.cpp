#include "shso/corpusgen.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

namespace shso {

namespace {

using Domains = std::map<std::string, std::vector<Value>>;
using Names = std::set<std::string>;

// ---------------------------------------------------------------------------
// Source text assembly. Labels are l<index>, so jump targets are computed
// from statement positions.

struct MethodSrc {
    std::string cls;
    std::string name;
    std::vector<std::string> params;
    bool entry = false;
    std::vector<std::string> instrs;

    std::string signature() const { return make_signature(cls, name, params.size()); }
    std::string call(const std::vector<std::string>& args = {}) const
    {
        std::string out = cls + "." + name + "(";
        for (std::size_t i = 0; i < args.size(); ++i)
            out += (i ? ", " : "") + args[i];
        return out + ")";
    }
    std::string text() const
    {
        std::string out = std::string("  ") + (entry ? "entry " : "") + name + "(";
        for (std::size_t i = 0; i < params.size(); ++i)
            out += (i ? ", " : "") + params[i];
        out += ") {\n";
        for (std::size_t i = 0; i < instrs.size(); ++i)
            out += "    l" + std::to_string(i) + ": " + instrs[i] + "\n";
        return out + "  }\n";
    }
};

std::string label(std::size_t i)
{
    return "l" + std::to_string(i);
}

/// pre; if cond goto T; on_false; goto J; T: on_true; J: return.
/// Returns the index of the if-statement.
std::size_t diamond(MethodSrc& m, const std::vector<std::string>& pre, const std::string& cond,
                    const std::vector<std::string>& on_true, const std::vector<std::string>& on_false)
{
    const std::size_t c = pre.size();
    const std::size_t t = c + on_false.size() + 2;
    const std::size_t join = t + on_true.size();
    m.instrs = pre;
    m.instrs.push_back("if " + cond + " goto " + label(t));
    m.instrs.insert(m.instrs.end(), on_false.begin(), on_false.end());
    m.instrs.push_back("goto " + label(join));
    m.instrs.insert(m.instrs.end(), on_true.begin(), on_true.end());
    m.instrs.push_back("return");
    return c;
}

// A planted trigger as the template describes it.
struct Planted {
    MethodSrc method;
    std::vector<MethodSrc> helpers;
    std::size_t cond_index = 0;
    bool is_bomb = false;
    std::string template_name;
    std::string type;
    Names sens_true;  // sensitive APIs reached from the true branch
    Names sens_false; // ... and from the false branch
    int N = 0, D = 0, R = 0, B = 0, P = 0;
    std::size_t M1 = 0;
    Names unguarded_sensitive; // sensitive calls outside the guarded code
    Domains inputs;
};

class Builder {
public:
    Builder(std::mt19937_64& rng, std::size_t k) : rng_(rng), k_(k) {}

    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    template <class T>
    const T& pick_of(const std::vector<T>& v)
    {
        return v[pick(v.size())];
    }
    std::string id(const std::string& stem) const { return stem + "_" + std::to_string(k_); }
    MethodSrc trigger_method(const std::string& stem) const { return {"Main", id(stem), {}, false, {}}; }
    MethodSrc helper(const std::string& stem, std::vector<std::string> params = {}) const
    {
        return {"Helpers", id(stem), std::move(params), false, {}};
    }

private:
    std::mt19937_64& rng_;
    std::size_t k_;
};

std::vector<Value> ints(std::initializer_list<std::int64_t> xs)
{
    return {xs.begin(), xs.end()};
}

std::vector<Value> strs(std::initializer_list<const char*> xs)
{
    std::vector<Value> out;
    for (const char* x : xs)
        out.emplace_back(std::string(x));
    return out;
}

// --- benign templates -------------------------------------------------------

Planted null_check(Builder& b)
{
    Planted p;
    p.template_name = "null_check";
    p.method = b.trigger_method("loadPrefs");
    std::vector<std::string> pre;
    if (b.coin()) {
        pre = {"key = \"" + b.id("pref") + "\"", "v = Db.getString(key)"};
        p.inputs["Db.getString"] = strs({"", "data"});
        p.type = "Database";
    } else {
        pre = {"v = Net.getResponseMessage()"};
        p.inputs["Net.getResponseMessage"] = strs({"", "OK"});
        p.type = "Internet";
    }
    std::vector<std::string> on_false;
    if (b.coin()) {
        on_false = {"call Ui.show(v)"};
        p.P = 1;
    } else {
        on_false = {"m = \"loaded\"", "call Ui.show(m)"};
    }
    p.cond_index = diamond(p.method, pre, "v == \"\"", {"d = \"n/a\"", "call Ui.show(d)"}, on_false);
    return p;
}

Planted ui_state(Builder& b)
{
    Planted p;
    p.template_name = "ui_state";
    p.method = b.trigger_method("updateIcon");
    struct Src {
        const char* call;
        const char* type;
    };
    static const std::vector<Src> sources = {{"Wifi.isWifiEnabled", "Wi-Fi"},
                                             {"Power.isInteractive", "Power"},
                                             {"Audio.isMusicActive", "Audio"},
                                             {"Conn.getActiveNetworkInfo", "Connectivity"}};
    std::vector<std::string> pre;
    std::string cond;
    if (b.coin(0.15)) {
        pre = {"on = field Build.MANUFACTURER"};
        cond = "on == \"samsung\"";
        p.inputs["Build.MANUFACTURER"] = strs({"samsung", "google"});
        p.type = "Build";
    } else {
        const Src& s = b.pick_of(sources);
        pre = {std::string("on = ") + s.call + "()"};
        cond = "on == 1";
        p.inputs[s.call] = ints({0, 1});
        p.type = s.type;
    }
    std::vector<std::string> on_true = {"icon = \"on\"", "call Ui.setIcon(icon)"};
    if (b.coin()) {
        MethodSrc h = b.helper("refresh");
        h.instrs = {"call Ui.redraw()", "return"};
        on_true.push_back("call " + h.call());
        p.helpers.push_back(h);
        p.M1 = 1;
    }
    p.cond_index = diamond(p.method, pre, cond, on_true, {"icon = \"off\"", "call Ui.setIcon(icon)"});
    return p;
}

Planted config(Builder& b)
{
    Planted p;
    p.template_name = "config";
    p.method = b.trigger_method("applyConfig");
    std::vector<std::string> pre;
    std::string cond;
    if (b.coin()) {
        pre = {"key = \"" + b.id("flag") + "\"", "f = Db.getInt(key)"};
        cond = "f == 1";
        p.inputs["Db.getInt"] = ints({0, 1});
        p.type = "Database";
    } else {
        pre = {"f = Net.getResponseCode()"};
        cond = "f == 200";
        p.inputs["Net.getResponseCode"] = ints({200, 404});
        p.type = "Internet";
    }
    std::vector<std::string> on_true;
    std::vector<std::string> on_false;
    if (b.coin()) {
        on_true.push_back("call Log.d(f)");
        p.P = 1;
    }
    const std::size_t variant = b.pick(10);
    if (variant < 4) {
        on_true.insert(on_true.end(), {"loc = Gps.getLastKnownLocation()", "call Map.show(loc)"});
        on_false = {"call Map.hide()"};
        p.sens_true = {"Gps.getLastKnownLocation"};
    } else if (variant < 7) {
        on_true.insert(on_true.end(), {"lat = Gps.getLatitude()", "call Map.center(lat)"});
        on_false = {"lat = Gps.getLatitude()", "call Map.centerDefault(lat)"};
        p.sens_true = p.sens_false = {"Gps.getLatitude"};
    } else {
        on_true.push_back("call Ui.enable()");
        on_false = {"call Ui.disable()"};
    }
    p.cond_index = diamond(p.method, pre, cond, on_true, on_false);
    return p;
}

Planted retry_loop(Builder& b)
{
    Planted p;
    p.template_name = "retry_loop";
    p.type = "Internet";
    p.method = b.trigger_method("fetch");
    p.inputs["Net.getResponseCode"] = ints({200, 500});
    p.inputs["Net.getResponseMessage"] = strs({"", "OK"});
    std::vector<std::string> success = {"body = Net.getResponseMessage()"};
    if (b.coin()) {
        success.push_back("call Log.d(c)");
        p.P = 1;
    }
    if (b.coin()) {
        MethodSrc h = b.helper("parse", {"s"});
        h.instrs = {"n = Json.parse(s)", "call Ui.show(n)", "return"};
        success.push_back("call " + h.call({"body"}));
        p.helpers.push_back(h);
        p.M1 = 1;
    } else {
        success.push_back("call Ui.show(body)");
    }
    // l0: i = 0; l1: c = ...; l2: if c == 200 goto S; l3: i = i + 1;
    // l4: if i < 3 goto l1; l5: return; S: success...; return
    p.method.instrs = {"i = 0", "c = Net.getResponseCode()", "if c == 200 goto l6", "i = i + 1",
                       "if i < 3 goto l1", "return"};
    p.method.instrs.insert(p.method.instrs.end(), success.begin(), success.end());
    p.method.instrs.push_back("return");
    p.cond_index = 2;
    return p;
}

// --- bombs ------------------------------------------------------------------

Planted emulator(Builder& b)
{
    Planted p;
    p.template_name = "emulator";
    p.type = "Build";
    p.is_bomb = true;
    p.method = b.trigger_method("checkEnv");
    static const std::vector<std::string> fields = {"MODEL", "PRODUCT", "HARDWARE", "FINGERPRINT"};
    const std::string field = "Build." + b.pick_of(fields);

    MethodSrc probe = b.helper("isEmulator");
    probe.instrs = {"model = field " + field, "s = \"sdk\"", "r = Str.contains(model, s)", "return r"};
    p.inputs[field] = strs({"generic_sdk", "Pixel"});
    p.inputs["Str.contains"] = ints({0, 1});

    MethodSrc payload = b.helper("collect");
    payload.instrs = {"id = Tel.getDeviceId()"};
    p.sens_false = {"Tel.getDeviceId", "Net.send"};
    std::string leak = "id";
    if (b.coin()) {
        payload.instrs.push_back("loc = Gps.getLastKnownLocation()");
        p.sens_false.insert("Gps.getLastKnownLocation");
        leak += ", loc";
    }
    if (b.coin()) {
        payload.instrs.push_back("acc = Acc.getAccounts()");
        p.sens_false.insert("Acc.getAccounts");
        leak += ", acc";
    }
    payload.instrs.push_back("call Net.send(" + leak + ")");
    payload.instrs.push_back("call Svc.start(id)");
    payload.instrs.push_back("return");
    p.B = 1;

    p.cond_index = diamond(p.method, {"e = " + probe.call()}, "e == 1", {"call Sys.exit()"},
                           {"call " + payload.call()});
    p.helpers = {probe, payload};
    p.M1 = 1; // the payload; the probe runs before the condition
    return p;
}

Planted country_sms(Builder& b)
{
    Planted p;
    p.template_name = "country_sms";
    p.type = "Telephony";
    p.is_bomb = true;
    p.method = b.trigger_method("checkRegion");
    p.inputs["Tel.getNetworkCountryIso"] = strs({"us", "fr"});
    std::vector<std::string> body = {"num = \"+1900555\"", "msg = \"SUB PREMIUM\""};
    if (b.coin()) {
        body.insert(body.end(), {"k = Refl.forName(msg)", "call Refl.invoke(k, num, msg)"});
        p.R = 1;
    }
    body.insert(body.end(), {"call Sms.send(num, msg)", "me = Tel.getLine1Number()", "call Net.send(me)"});
    p.sens_true = {"Sms.send", "Tel.getLine1Number", "Net.send"};
    std::vector<std::string> on_true;
    if (b.coin()) {
        MethodSrc h = b.helper("subscribe");
        h.instrs = body;
        h.instrs.push_back("return");
        p.helpers.push_back(h);
        on_true = {"call " + h.call()};
        p.M1 = 1;
    } else {
        on_true = body;
    }
    p.cond_index = diamond(p.method, {"cc = Tel.getNetworkCountryIso()"}, "cc == \"us\"", on_true, {});
    return p;
}

Planted screen_ad(Builder& b)
{
    Planted p;
    p.template_name = "screen_ad";
    p.type = "Power";
    p.is_bomb = true;
    p.method = b.trigger_method("onScreen");
    p.inputs["Power.isScreenOn"] = ints({0, 1});
    MethodSrc h = b.helper("showAds");
    h.instrs = {"c = Net.openConnection()", "apps = Pkg.getInstalled()", "call Net.send(apps)",
                "call Ui.showAd(c)", "call Alarm.set()", "return"};
    p.sens_true = {"Net.openConnection", "Pkg.getInstalled", "Net.send"};
    std::vector<std::string> on_true = {"call " + h.call(), "call Job.schedule()"};
    if (b.coin()) {
        on_true.push_back("call Sys.loadNative()");
        p.N = 1;
    }
    p.B = 1;
    p.M1 = 1;
    p.helpers.push_back(h);
    p.cond_index = diamond(p.method, {"on = Power.isScreenOn()"}, "on == 1", on_true, {});
    return p;
}

Planted data_stealer(Builder& b)
{
    Planted p;
    p.template_name = "data_stealer";
    p.type = "Telephony";
    p.is_bomb = true;
    p.method = b.trigger_method("sync");
    p.inputs["Tel.getDeviceId"] = strs({"000000000000000", "358240051111110"});
    p.unguarded_sensitive = {"Tel.getDeviceId"};

    MethodSrc upload = b.helper("upload", {"data"});
    upload.instrs = {"call File.writeExternal(data)", "call Net.send(data)", "return"};
    MethodSrc steal = b.helper("steal", {"id"});
    steal.instrs = {"loc = Gps.getLastKnownLocation()", "num = Tel.getLine1Number()",
                    "mac = Wifi.getMacAddress()"};
    p.sens_true = {"Gps.getLastKnownLocation", "Tel.getLine1Number", "Wifi.getMacAddress",
                   "File.writeExternal", "Net.send"};
    if (b.coin()) {
        steal.instrs.push_back("bt = Bt.getAddress()");
        steal.instrs.push_back("call " + upload.call({"bt"}));
        p.sens_true.insert("Bt.getAddress");
    }
    steal.instrs.push_back("call " + upload.call({"loc"}));
    steal.instrs.push_back("call Svc.start(id)");
    steal.instrs.push_back("return");
    p.B = 1;
    p.P = 1;
    p.M1 = 1;
    p.helpers = {steal, upload};
    p.cond_index = diamond(p.method, {"id = Tel.getDeviceId()", "bad = \"000000000000000\""}, "id != bad",
                           {"call " + steal.call({"id"})}, {});
    return p;
}

Planted time_bomb(Builder& b)
{
    Planted p;
    p.template_name = "time_bomb";
    p.type = "Time";
    p.is_bomb = true;
    p.method = b.trigger_method("checkDate");
    p.inputs["Clock.currentTimeMillis"] = ints({1600000000000, 1800000000000});
    MethodSrc h = b.helper("arm");
    h.instrs = {"dex = \"payload.dex\"", "k = DexLoader.load(dex)"};
    p.D = 1;
    std::string code = "k";
    if (b.coin()) {
        h.instrs.push_back("r = Refl.invoke(k)");
        p.R = 1;
        code = "r";
    }
    if (b.coin()) {
        h.instrs.push_back("call Native.exec(" + code + ")");
        p.N = 1;
    }
    h.instrs.insert(h.instrs.end(), {"c = Contacts.query()", "call Net.send(c)"});
    p.sens_true = {"Contacts.query", "Net.send"};
    if (b.coin()) {
        h.instrs.insert(h.instrs.end(), {"sms = Sms.readInbox()", "call Net.send(sms)"});
        p.sens_true.insert("Sms.readInbox");
    }
    h.instrs.push_back("return");
    p.M1 = 1;
    p.helpers.push_back(h);
    p.cond_index = diamond(p.method, {"now = Clock.currentTimeMillis()", "t = 1700000000000"}, "now > t",
                           {"call " + h.call()}, {});
    return p;
}

using TemplateFn = Planted (*)(Builder&);

struct WeightedTemplates {
    std::vector<TemplateFn> fns;
    std::vector<double> weights;

    bool empty() const
    {
        return std::none_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; });
    }
    TemplateFn draw(std::mt19937_64& rng) const
    {
        std::discrete_distribution<std::size_t> d(weights.begin(), weights.end());
        return fns[d(rng)];
    }
};

WeightedTemplates benign_templates(const TemplateWeights& w)
{
    return {{null_check, ui_state, config, retry_loop}, {w.null_check, w.ui_state, w.config, w.retry_loop}};
}

WeightedTemplates bomb_templates(const TemplateWeights& w)
{
    return {{emulator, country_sms, screen_ad, data_stealer, time_bomb},
            {w.emulator, w.country_sms, w.screen_ad, w.data_stealer, w.time_bomb}};
}

double jaccard(const Names& a, const Names& b)
{
    Names all = a;
    all.insert(b.begin(), b.end());
    if (all.empty())
        return 0.0;
    std::size_t common = 0;
    for (const auto& x : a)
        common += b.count(x);
    return 1.0 - static_cast<double>(common) / static_cast<double>(all.size());
}

struct BuiltApp {
    GeneratedApp app;
    AppTruth truth;
};

BuiltApp build_app(std::mt19937_64& rng, const CorpusSpec& spec, std::size_t index, bool with_bomb)
{
    const auto benign = benign_templates(spec.weights);
    const auto bombs = bomb_templates(spec.weights);
    const std::size_t count =
        std::uniform_int_distribution<std::size_t>(spec.min_triggers, spec.max_triggers)(rng);

    std::vector<Planted> planted;
    for (std::size_t k = 0; k < count; ++k) {
        Builder b(rng, k);
        planted.push_back(benign.draw(rng)(b));
    }
    if (with_bomb) {
        Builder b(rng, count);
        Planted bomb = bombs.draw(rng)(b);
        const std::size_t at = std::uniform_int_distribution<std::size_t>(0, planted.size())(rng);
        planted.insert(planted.begin() + static_cast<std::ptrdiff_t>(at), std::move(bomb));
    }

    MethodSrc main{"Main", "onCreate", {}, true, {}};
    for (const auto& p : planted)
        main.instrs.push_back("call " + p.method.call());
    Names unguarded;
    if (std::bernoulli_distribution(0.3)(rng)) {
        main.instrs.insert(main.instrs.end(), {"here = Gps.getLastKnownLocation()", "call Log.d(here)"});
        unguarded.insert("Gps.getLastKnownLocation");
    }
    main.instrs.push_back("return");

    // Each sensitive API counts toward S1 only for the one trigger whose
    // guarded code is its sole caller.
    std::map<std::string, std::size_t> owners;
    for (const auto& p : planted) {
        unguarded.insert(p.unguarded_sensitive.begin(), p.unguarded_sensitive.end());
        Names mine = p.sens_true;
        mine.insert(p.sens_false.begin(), p.sens_false.end());
        for (const auto& s : mine)
            ++owners[s];
    }

    std::string text = "class Main {\n" + main.text();
    for (const auto& p : planted)
        text += "\n" + p.method.text();
    text += "}\n";
    bool any_helper = false;
    for (const auto& p : planted)
        for (const auto& h : p.helpers) {
            text += (any_helper ? "\n" : "\nclass Helpers {\n") + h.text();
            any_helper = true;
        }
    if (any_helper)
        text += "}\n";

    char name[64];
    std::snprintf(name, sizeof name, "%s_%04zu.tir", spec.name_prefix.c_str(), index);

    BuiltApp out;
    out.app.name = name;
    out.app.program = parse_program(text);
    out.truth.app = name;
    out.truth.has_bomb = with_bomb;
    for (const auto& p : planted) {
        PlantedTrigger t;
        t.method = p.method.signature();
        t.label = label(p.cond_index);
        t.is_bomb = p.is_bomb;
        t.template_name = p.template_name;
        t.type = p.type;
        Names all = p.sens_true;
        all.insert(p.sens_false.begin(), p.sens_false.end());
        t.expected.S = all.size();
        t.expected.N = p.N;
        t.expected.D = p.D;
        t.expected.R = p.R;
        t.expected.B = p.B;
        t.expected.P = p.P;
        t.expected.M1 = p.M1;
        t.expected.S1 = static_cast<std::size_t>(std::count_if(all.begin(), all.end(), [&](const std::string& s) {
            return owners[s] == 1 && !unguarded.count(s);
        }));
        t.expected.J = jaccard(p.sens_true, p.sens_false);
        out.truth.triggers.push_back(std::move(t));
        for (const auto& [key, values] : p.inputs) {
            auto& dom = out.truth.inputs[key];
            for (const auto& v : values)
                if (std::find(dom.begin(), dom.end(), v) == dom.end())
                    dom.push_back(v);
        }
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------

void CorpusSpec::validate() const
{
    const TemplateWeights& w = weights;
    for (double x : {w.null_check, w.ui_state, w.config, w.retry_loop, w.emulator, w.country_sms, w.screen_ad,
                     w.data_stealer, w.time_bomb})
        if (!(x >= 0.0))
            throw std::invalid_argument("template weights must be non-negative");
    if (benign_templates(w).empty())
        throw std::invalid_argument("at least one benign template must be enabled");
    if (!(bomb_rate >= 0.0 && bomb_rate <= 1.0))
        throw std::invalid_argument("bomb rate must lie in [0, 1]");
    if (bomb_rate > 0.0 && bomb_templates(w).empty())
        throw std::invalid_argument("bomb rate is positive but no bomb template is enabled");
    if (min_triggers > max_triggers)
        throw std::invalid_argument("min_triggers exceeds max_triggers");
    if (name_prefix.empty() || name_prefix.find_first_of("/\\") != std::string::npos)
        throw std::invalid_argument("invalid app name prefix");
}

nlohmann::json CorpusSpec::to_json() const
{
    const TemplateWeights& w = weights;
    return {{"seed", seed},
            {"apps", apps},
            {"bomb_rate", bomb_rate},
            {"min_triggers", min_triggers},
            {"max_triggers", max_triggers},
            {"name_prefix", name_prefix},
            {"weights",
             {{"null_check", w.null_check},
              {"ui_state", w.ui_state},
              {"config", w.config},
              {"retry_loop", w.retry_loop},
              {"emulator", w.emulator},
              {"country_sms", w.country_sms},
              {"screen_ad", w.screen_ad},
              {"data_stealer", w.data_stealer},
              {"time_bomb", w.time_bomb}}}};
}

CorpusSpec CorpusSpec::from_json(const nlohmann::json& doc)
{
    CorpusSpec s;
    s.seed = doc.value("seed", s.seed);
    s.apps = doc.value("apps", s.apps);
    s.bomb_rate = doc.value("bomb_rate", s.bomb_rate);
    s.min_triggers = doc.value("min_triggers", s.min_triggers);
    s.max_triggers = doc.value("max_triggers", s.max_triggers);
    s.name_prefix = doc.value("name_prefix", s.name_prefix);
    if (doc.contains("weights")) {
        const auto& w = doc.at("weights");
        TemplateWeights& t = s.weights;
        t.null_check = w.value("null_check", t.null_check);
        t.ui_state = w.value("ui_state", t.ui_state);
        t.config = w.value("config", t.config);
        t.retry_loop = w.value("retry_loop", t.retry_loop);
        t.emulator = w.value("emulator", t.emulator);
        t.country_sms = w.value("country_sms", t.country_sms);
        t.screen_ad = w.value("screen_ad", t.screen_ad);
        t.data_stealer = w.value("data_stealer", t.data_stealer);
        t.time_bomb = w.value("time_bomb", t.time_bomb);
    }
    s.validate();
    return s;
}

nlohmann::json value_to_json(const Value& v)
{
    return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

Value value_from_json(const nlohmann::json& j)
{
    if (j.is_number_integer())
        return j.get<std::int64_t>();
    if (j.is_string())
        return j.get<std::string>();
    throw std::invalid_argument("input values must be integers or strings");
}

nlohmann::json GroundTruth::to_json() const
{
    nlohmann::json list = nlohmann::json::array();
    for (const auto& a : apps) {
        nlohmann::json triggers = nlohmann::json::array();
        for (const auto& t : a.triggers)
            triggers.push_back({{"method", t.method},
                                {"label", t.label},
                                {"is_bomb", t.is_bomb},
                                {"template", t.template_name},
                                {"type", t.type},
                                {"expected", vector_to_json(t.expected)}});
        nlohmann::json inputs = nlohmann::json::object();
        for (const auto& [key, values] : a.inputs) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& v : values)
                arr.push_back(value_to_json(v));
            inputs[key] = arr;
        }
        list.push_back({{"app", a.app}, {"has_bomb", a.has_bomb}, {"triggers", triggers}, {"inputs", inputs}});
    }
    return {{"schema", 1}, {"apps", list}};
}

GroundTruth GroundTruth::from_json(const nlohmann::json& doc)
{
    GroundTruth g;
    for (const auto& a : doc.at("apps")) {
        AppTruth t;
        t.app = a.at("app").get<std::string>();
        t.has_bomb = a.at("has_bomb").get<bool>();
        for (const auto& j : a.at("triggers"))
            t.triggers.push_back({j.at("method").get<std::string>(), j.at("label").get<std::string>(),
                                  j.at("is_bomb").get<bool>(), j.at("template").get<std::string>(),
                                  j.at("type").get<std::string>(), vector_from_json(j.at("expected"))});
        for (const auto& [key, values] : a.at("inputs").items())
            for (const auto& v : values)
                t.inputs[key].push_back(value_from_json(v));
        g.apps.push_back(std::move(t));
    }
    return g;
}

Corpus generate(const CorpusSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    // Bomb apps are chosen up front so the bomb count is exact.
    const auto bomb_count = static_cast<std::size_t>(spec.bomb_rate * static_cast<double>(spec.apps) + 0.5);
    std::vector<bool> has_bomb(spec.apps, false);
    std::fill_n(has_bomb.begin(), std::min(bomb_count, spec.apps), true);
    std::shuffle(has_bomb.begin(), has_bomb.end(), rng);

    Corpus corpus;
    for (std::size_t i = 0; i < spec.apps; ++i) {
        BuiltApp built = build_app(rng, spec, i, has_bomb[i]);
        corpus.apps.push_back(std::move(built.app));
        corpus.truth.apps.push_back(std::move(built.truth));
    }
    return corpus;
}

void write_corpus(const Corpus& corpus, const CorpusSpec& spec, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& file, const std::string& content) {
        std::ofstream out(dir / file, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + (dir / file).string());
        out << content;
    };
    for (const auto& app : corpus.apps)
        write(app.name, emit_program(app.program));
    write("truth.json", corpus.truth.to_json().dump(2) + "\n");
    write("spec.json", spec.to_json().dump(2) + "\n");
    write("catalog.json", default_catalog().to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Interpreter

namespace {

struct Tagged {
    Value value = std::int64_t{0};
    std::set<std::string> tags;
};

struct Frame {
    const MethodDef* method = nullptr;
    std::size_t pc = 0;
    std::map<std::string, Tagged> locals;
    std::optional<std::string> result; // caller variable receiving the return value
};

std::string to_text(const Value& v)
{
    if (const auto* i = std::get_if<std::int64_t>(&v))
        return std::to_string(*i);
    return std::get<std::string>(v);
}

Value arithmetic(const Value& a, BinaryOp op, const Value& b)
{
    const auto* x = std::get_if<std::int64_t>(&a);
    const auto* y = std::get_if<std::int64_t>(&b);
    if (!x || !y) {
        if (op == BinaryOp::Add)
            return to_text(a) + to_text(b);
        return std::int64_t{0};
    }
    // Wrap instead of overflowing.
    const auto ux = static_cast<std::uint64_t>(*x);
    const auto uy = static_cast<std::uint64_t>(*y);
    switch (op) {
    case BinaryOp::Add:
        return static_cast<std::int64_t>(ux + uy);
    case BinaryOp::Sub:
        return static_cast<std::int64_t>(ux - uy);
    case BinaryOp::Mul:
        return static_cast<std::int64_t>(ux * uy);
    case BinaryOp::Div:
    case BinaryOp::Rem:
        if (*y == 0 || (*y == -1 && *x == std::numeric_limits<std::int64_t>::min()))
            return std::int64_t{0};
        return op == BinaryOp::Div ? *x / *y : *x % *y;
    }
    return std::int64_t{0};
}

bool compare(const Value& a, RelOp op, const Value& b)
{
    if (a.index() != b.index())
        return op == RelOp::Ne;
    switch (op) {
    case RelOp::Eq:
        return a == b;
    case RelOp::Ne:
        return a != b;
    case RelOp::Lt:
        return a < b;
    case RelOp::Le:
        return a <= b;
    case RelOp::Gt:
        return a > b;
    case RelOp::Ge:
        return a >= b;
    }
    return false;
}

class Interpreter {
public:
    Interpreter(const Program& program, const InputBinding& inputs, const Catalog& catalog, std::size_t limit)
        : program_(program), inputs_(inputs), catalog_(catalog), limit_(limit)
    {
        // Instrumented programs read source fields through dummy getters.
        for (const auto& f : catalog.entries(Category::SourceField)) {
            const auto dot = f.find('.');
            getters_[std::string(kBuildClass) + ".get" + f.substr(0, dot) + "_" + f.substr(dot + 1)] = f;
        }
    }

    ExecutionTrace run()
    {
        for (const MethodDef* m : program_.methods())
            if (m->is_entry)
                run_entry(*m);
        return std::move(trace_);
    }

private:
    Tagged input(const std::string& name, std::set<std::string> tags) const
    {
        auto it = inputs_.find(name);
        return {it == inputs_.end() ? Value{std::int64_t{0}} : it->second, std::move(tags)};
    }

    Tagged load_field(const std::string& name) const
    {
        if (catalog_.contains(Category::SourceField, name))
            return input(name, {name});
        auto it = globals_.find(name);
        return it == globals_.end() ? Tagged{} : it->second;
    }

    static Tagged local(const Frame& f, const std::string& var)
    {
        auto it = f.locals.find(var);
        return it == f.locals.end() ? Tagged{} : it->second;
    }

    static Tagged operand(const Frame& f, const Operand& o)
    {
        if (const auto* v = std::get_if<Var>(&o))
            return local(f, v->name);
        if (const auto* i = std::get_if<std::int64_t>(&o))
            return {*i, {}};
        return {std::get<std::string>(o), {}};
    }

    // Performs a call. App methods push a frame and return nullopt; external
    // calls produce their value immediately.
    std::optional<Tagged> call(std::vector<Frame>& stack, const CallExpr& c, std::optional<std::string> result)
    {
        const Frame& caller = stack.back();
        if (const MethodDef* callee = program_.find_method(c.signature())) {
            Frame f{callee, 0, {}, std::move(result)};
            for (std::size_t i = 0; i < callee->params.size() && i < c.args.size(); ++i)
                f.locals[callee->params[i]] = local(caller, c.args[i]);
            stack.push_back(std::move(f));
            return std::nullopt;
        }
        const std::string name = c.qualified_name();
        if (auto it = getters_.find(name); it != getters_.end())
            return load_field(it->second);
        if (catalog_.contains(Category::Source, name))
            return input(name, {name});
        std::set<std::string> tags;
        for (const auto& a : c.args) {
            const auto t = local(caller, a).tags;
            tags.insert(t.begin(), t.end());
        }
        return input(name, std::move(tags));
    }

    void run_entry(const MethodDef& entry)
    {
        std::vector<Frame> stack;
        stack.push_back(Frame{&entry, 0, {}, std::nullopt});
        for (const auto& p : entry.params)
            stack.back().locals[p] = Tagged{};
        while (!stack.empty()) {
            if (++steps_ > limit_)
                throw StepLimitExceeded("step limit of " + std::to_string(limit_) + " exceeded");
            Frame& f = stack.back();
            const Statement& s = f.method->body.at(f.pc);
            const std::string sig = f.method->signature();
            trace_.executed.emplace_back(sig, s.label);
            ++f.pc;

            if (const auto* a = std::get_if<Assign>(&s.instr)) {
                std::optional<Tagged> value;
                if (const auto* c = std::get_if<CallExpr>(&a->value)) {
                    value = call(stack, *c, a->target);
                } else if (const auto* v = std::get_if<Var>(&a->value)) {
                    value = local(f, v->name);
                } else if (const auto* i = std::get_if<std::int64_t>(&a->value)) {
                    value = Tagged{*i, {}};
                } else if (const auto* str = std::get_if<std::string>(&a->value)) {
                    value = Tagged{*str, {}};
                } else if (const auto* fr = std::get_if<FieldRef>(&a->value)) {
                    value = load_field(fr->qualified_name());
                } else {
                    const auto& op = std::get<BinOp>(a->value);
                    const Tagged l = local(f, op.lhs);
                    const Tagged r = operand(f, op.rhs);
                    Tagged t{arithmetic(l.value, op.op, r.value), l.tags};
                    t.tags.insert(r.tags.begin(), r.tags.end());
                    value = std::move(t);
                }
                if (value)
                    stack.back().locals[a->target] = std::move(*value);
            } else if (const auto* c = std::get_if<If>(&s.instr)) {
                const Tagged l = local(f, c->lhs);
                const Tagged r = operand(f, c->rhs);
                if (!l.tags.empty() || !r.tags.empty())
                    trace_.tagged_conditions.emplace(sig, s.label);
                if (compare(l.value, c->op, r.value))
                    f.pc = *f.method->index_of(c->target);
            } else if (const auto* g = std::get_if<Goto>(&s.instr)) {
                f.pc = *f.method->index_of(g->target);
            } else if (const auto* r = std::get_if<Return>(&s.instr)) {
                Tagged value = r->var ? local(f, *r->var) : Tagged{};
                const auto target = f.result;
                stack.pop_back();
                if (!stack.empty() && target)
                    stack.back().locals[*target] = std::move(value);
            } else if (const auto* inv = std::get_if<Invoke>(&s.instr)) {
                call(stack, inv->call, std::nullopt);
            } else {
                const auto& sf = std::get<SetField>(s.instr);
                globals_[sf.field.qualified_name()] = local(f, sf.value);
            }
        }
    }

    const Program& program_;
    const InputBinding& inputs_;
    const Catalog& catalog_;
    std::size_t limit_;
    std::size_t steps_ = 0;
    std::map<std::string, std::string> getters_;
    std::map<std::string, Tagged> globals_;
    ExecutionTrace trace_;
};

} // namespace

ExecutionTrace interpret(const Program& program, const InputBinding& inputs, const Catalog& tag_sources,
                         std::size_t step_limit)
{
    return Interpreter(program, inputs, tag_sources, step_limit).run();
}

std::vector<InputBinding> enumerate_bindings(const Domains& domains)
{
    std::vector<InputBinding> out(1);
    for (const auto& [key, values] : domains) {
        if (values.empty())
            continue;
        std::vector<InputBinding> next;
        next.reserve(out.size() * values.size());
        for (const auto& partial : out)
            for (const auto& v : values) {
                InputBinding b = partial;
                b[key] = v;
                next.push_back(std::move(b));
            }
        out = std::move(next);
    }
    return out;
}

} // namespace shso
