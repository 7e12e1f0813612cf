#include "shso/features.hpp"

#include <algorithm>
#include <deque>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace shso {

namespace {

std::vector<StmtRef> roots_of(const std::string& method, const std::vector<std::size_t>& statements)
{
    std::vector<StmtRef> roots;
    roots.reserve(statements.size());
    for (std::size_t i : statements)
        roots.push_back({method, i});
    return roots;
}

bool contains_index(const std::vector<std::size_t>& sorted, std::size_t i)
{
    return std::binary_search(sorted.begin(), sorted.end(), i);
}

std::string format_real(double v)
{
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    return out;
}

} // namespace

std::array<double, kFeatureCount> FeatureVector::to_array() const
{
    return {static_cast<double>(S), static_cast<double>(N), static_cast<double>(D),
            static_cast<double>(R), static_cast<double>(B), static_cast<double>(P),
            static_cast<double>(M1), static_cast<double>(S1), J};
}

FeatureVector FeatureVector::from_array(const std::array<double, kFeatureCount>& v)
{
    FeatureVector f;
    f.S = static_cast<std::size_t>(v[0]);
    f.N = static_cast<int>(v[1]);
    f.D = static_cast<int>(v[2]);
    f.R = static_cast<int>(v[3]);
    f.B = static_cast<int>(v[4]);
    f.P = static_cast<int>(v[5]);
    f.M1 = static_cast<std::size_t>(v[6]);
    f.S1 = static_cast<std::size_t>(v[7]);
    f.J = v[8];
    return f;
}

std::ostream& operator<<(std::ostream& os, const FeatureVector& v)
{
    return os << "<" << v.S << "," << v.N << "," << v.D << "," << v.R << "," << v.B << "," << v.P << ","
              << v.M1 << "," << v.S1 << "," << v.J << ">";
}

nlohmann::json vector_to_json(const FeatureVector& v)
{
    const auto values = v.to_array();
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i + 1 < kFeatureCount; ++i)
        j[kFeatureNames[i]] = static_cast<std::int64_t>(values[i]);
    j[kFeatureNames[kFeatureCount - 1]] = v.J;
    return j;
}

FeatureVector vector_from_json(const nlohmann::json& j)
{
    std::array<double, kFeatureCount> values{};
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        values[i] = j.at(kFeatureNames[i]).get<double>();
    return FeatureVector::from_array(values);
}

double jaccard_distance(const std::set<std::string>& a, const std::set<std::string>& b)
{
    std::size_t common = 0;
    for (const auto& x : a)
        common += b.count(x);
    const std::size_t all = a.size() + b.size() - common;
    if (all == 0)
        return 0.0;
    return 1.0 - static_cast<double>(common) / static_cast<double>(all);
}

std::set<std::string> sensitive_reached(const FeatureContext& ctx, const std::string& method,
                                        const std::vector<std::size_t>& statements)
{
    std::set<std::string> out;
    const auto roots = roots_of(method, statements);
    for (const auto& [site, name] : reachable_external_calls(ctx.callgraph, roots, ctx.depth_limit))
        if (ctx.catalog.contains(Category::Sensitive, name))
            out.insert(name);
    return out;
}

std::size_t feature_S(const Trigger& t, const FeatureContext& ctx)
{
    return sensitive_reached(ctx, t.method, t.guarded()).size();
}

FeatureFlags feature_flags(const Trigger& t, const FeatureContext& ctx)
{
    FeatureFlags f;
    const auto roots = roots_of(t.method, t.guarded());
    for (const auto& [site, name] : reachable_external_calls(ctx.callgraph, roots, ctx.depth_limit)) {
        f.N |= ctx.catalog.contains(Category::Native, name) ? 1 : 0;
        f.D |= ctx.catalog.contains(Category::Dynload, name) ? 1 : 0;
        f.R |= ctx.catalog.contains(Category::Reflect, name) ? 1 : 0;
        f.B |= ctx.catalog.contains(Category::Service, name) ? 1 : 0;
    }
    return f;
}

int feature_P(const Trigger& t, const FeatureContext& ctx)
{
    const MethodGraphs& g = ctx.graphs.at(t.method);
    const auto guarded = t.guarded();
    const auto* cond = std::get_if<If>(&g.method->body[t.index].instr);
    if (!cond)
        return 0;
    const std::size_t c = Cfg::node_of(t.index);
    for (const auto& var : cond->condition_vars()) {
        // Walk the guarded region from the condition; stop a path at the
        // first statement that redefines the variable.
        std::vector<bool> seen(g.cfg.node_count(), false);
        std::deque<std::size_t> work;
        for (std::size_t s : g.cfg.successors(c)) {
            auto stmt = Cfg::stmt_of(s);
            if (stmt && contains_index(guarded, *stmt) && !seen[s]) {
                seen[s] = true;
                work.push_back(s);
            }
        }
        while (!work.empty()) {
            const std::size_t n = work.front();
            work.pop_front();
            const Instr& instr = g.method->body[*Cfg::stmt_of(n)].instr;
            const auto uses = used_vars(instr);
            if (std::find(uses.begin(), uses.end(), var) != uses.end())
                return 1;
            if (defined_var(instr) == var)
                continue;
            for (std::size_t s : g.cfg.successors(n)) {
                auto stmt = Cfg::stmt_of(s);
                if (stmt && contains_index(guarded, *stmt) && !seen[s]) {
                    seen[s] = true;
                    work.push_back(s);
                }
            }
        }
    }
    return 0;
}

std::pair<std::size_t, std::size_t> feature_M1_S1(const Trigger& t, const FeatureContext& ctx)
{
    const auto guarded = t.guarded();
    const CallGraph& cg = ctx.callgraph;

    std::set<std::string> single_site;
    for (const auto& e : cg.calls_in(t.method))
        if (contains_index(guarded, e.site.index) && !e.external && cg.incoming_edges(e.callee) == 1)
            single_site.insert(e.callee);

    // Methods whose bodies the guarded code reaches within the depth limit,
    // pruned to those invoked only from the guarded code or from each other.
    const auto roots = roots_of(t.method, guarded);
    const auto reached = reachable_calls(cg, roots, ctx.depth_limit);
    std::set<std::string> exclusive;
    for (const auto& r : reached) {
        if (r.edge->external || r.depth + 1 > ctx.depth_limit)
            continue;
        const MethodDef* m = ctx.program.find_method(r.edge->callee);
        if (m && !m->is_entry)
            exclusive.insert(r.edge->callee);
    }
    auto site_is_exclusive = [&](const StmtRef& site) {
        return (site.method == t.method && contains_index(guarded, site.index)) || exclusive.count(site.method);
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (auto it = exclusive.begin(); it != exclusive.end();) {
            const auto& sites = cg.callers(*it);
            if (std::all_of(sites.begin(), sites.end(), site_is_exclusive)) {
                ++it;
            } else {
                it = exclusive.erase(it);
                changed = true;
            }
        }
    }

    std::size_t s1 = 0;
    for (const auto& name : sensitive_reached(ctx, t.method, guarded)) {
        const auto& sites = cg.sites_of_name(name);
        if (std::all_of(sites.begin(), sites.end(), site_is_exclusive))
            ++s1;
    }
    return {single_site.size(), s1};
}

double feature_J(const Trigger& t, const FeatureContext& ctx)
{
    return jaccard_distance(sensitive_reached(ctx, t.method, t.true_branch),
                            sensitive_reached(ctx, t.method, t.false_branch));
}

FeatureVector extract_vector(const Trigger& t, const FeatureContext& ctx)
{
    FeatureVector v;
    v.S = feature_S(t, ctx);
    const FeatureFlags flags = feature_flags(t, ctx);
    v.N = flags.N;
    v.D = flags.D;
    v.R = flags.R;
    v.B = flags.B;
    v.P = feature_P(t, ctx);
    std::tie(v.M1, v.S1) = feature_M1_S1(t, ctx);
    v.J = feature_J(t, ctx);
    return v;
}

void write_vectors_csv(std::ostream& out, const std::vector<LabeledVector>& rows)
{
    out << "app,method,label";
    for (const char* name : kFeatureNames)
        out << ',' << name;
    out << '\n';
    for (const auto& r : rows) {
        out << csv_field(r.app) << ',' << csv_field(r.method) << ',' << csv_field(r.label);
        const auto values = r.vector.to_array();
        for (std::size_t i = 0; i < kFeatureCount; ++i)
            out << ',' << format_real(values[i]);
        out << '\n';
    }
}

std::vector<LabeledVector> read_vectors_csv(std::istream& in)
{
    std::vector<LabeledVector> rows;
    std::string line;
    if (!std::getline(in, line))
        return rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3 + kFeatureCount)
            throw std::runtime_error("malformed vector row: " + line);
        LabeledVector r{fields[0], fields[1], fields[2], {}};
        std::array<double, kFeatureCount> values{};
        for (std::size_t i = 0; i < kFeatureCount; ++i)
            values[i] = std::stod(fields[3 + i]);
        r.vector = FeatureVector::from_array(values);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace shso
