#include "shso/instrument.hpp"

#include <set>

namespace shso {

namespace {

void reject_reserved(const Program& program, std::string_view reserved)
{
    for (const auto& cls : program.classes) {
        if (cls.name == reserved)
            throw InstrumentError("program already defines reserved class " + std::string(reserved));
        for (const auto& m : cls.methods)
            for (const auto& s : m.body)
                if (const CallExpr* c = call_of(s.instr); c && c->cls == reserved)
                    throw InstrumentError("program is already instrumented (" + c->qualified_name() +
                                          " in " + m.signature() + ")");
    }
}

std::string fresh_label(const std::set<std::string>& taken, const std::string& base)
{
    std::string label = base;
    while (taken.count(label))
        label += "_";
    return label;
}

} // namespace

std::pair<Program, SinkRegistry> instrument_ifs(const Program& program)
{
    reject_reserved(program, kIfClass);
    Program out = program;
    SinkRegistry registry;
    std::size_t counter = 0;
    for (auto& cls : out.classes) {
        for (auto& m : cls.methods) {
            std::set<std::string> taken;
            for (const auto& s : m.body)
                taken.insert(s.label);
            std::map<std::string, std::string> redirect; // if label -> sink label
            std::vector<Statement> body;
            body.reserve(m.body.size() * 2);
            for (auto& s : m.body) {
                if (const auto* cond = std::get_if<If>(&s.instr)) {
                    const std::string name = "ifMethod_" + std::to_string(counter++);
                    const std::string label = fresh_label(taken, s.label + "_sink");
                    taken.insert(label);
                    redirect[s.label] = label;
                    registry[std::string(kIfClass) + "." + name] = SinkSite{m.signature(), s.label};
                    body.push_back({label, Invoke{CallExpr{std::string(kIfClass), name, cond->condition_vars()}}});
                }
                body.push_back(std::move(s));
            }
            for (auto& s : body) {
                std::string* target = nullptr;
                if (auto* cond = std::get_if<If>(&s.instr))
                    target = &cond->target;
                else if (auto* g = std::get_if<Goto>(&s.instr))
                    target = &g->target;
                if (target)
                    if (auto it = redirect.find(*target); it != redirect.end())
                        *target = it->second;
            }
            m.body = std::move(body);
        }
    }
    return {std::move(out), std::move(registry)};
}

std::pair<Program, SourceRegistry> instrument_field_sources(const Program& program, const Catalog& catalog)
{
    reject_reserved(program, kBuildClass);
    Program out = program;
    SourceRegistry registry;
    for (auto& cls : out.classes) {
        for (auto& m : cls.methods) {
            for (auto& s : m.body) {
                auto* assign = std::get_if<Assign>(&s.instr);
                if (!assign)
                    continue;
                const auto* field = std::get_if<FieldRef>(&assign->value);
                if (!field || !catalog.contains(Category::SourceField, field->qualified_name()))
                    continue;
                CallExpr getter{std::string(kBuildClass), "get" + field->cls + "_" + field->field, {}};
                registry[getter.qualified_name()] = field->qualified_name();
                assign->value = std::move(getter);
            }
        }
    }
    return {std::move(out), std::move(registry)};
}

InstrumentedProgram instrument(const Program& program, const Catalog& catalog)
{
    auto [with_sources, sources] = instrument_field_sources(program, catalog);
    auto [with_sinks, sinks] = instrument_ifs(with_sources);
    return {std::move(with_sinks), std::move(sinks), std::move(sources)};
}

} // namespace shso
