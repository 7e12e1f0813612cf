#include "shso/taint.hpp"

#include <deque>
#include <map>
#include <optional>

namespace shso {

namespace {

using Facts = std::set<Provenance>;
using Env = std::map<std::string, Facts>;

bool merge_into(Facts& dst, const Facts& src)
{
    const std::size_t before = dst.size();
    dst.insert(src.begin(), src.end());
    return dst.size() != before;
}

bool merge_env(Env& dst, const Env& src)
{
    bool changed = false;
    for (const auto& [var, facts] : src)
        changed |= merge_into(dst[var], facts);
    return changed;
}

class TimeoutReached {};

class Analysis {
public:
    Analysis(const InstrumentedProgram& input, const Catalog& catalog, const TaintOptions& options)
        : input_(input),
          catalog_(catalog),
          deadline_(std::chrono::steady_clock::now() + options.timeout)
    {
        for (const MethodDef* m : input.program.methods()) {
            const std::string sig = m->signature();
            methods_[sig] = m;
            order_.push_back(sig);
            params_[sig].resize(m->params.size());
            for (const auto& s : m->body) {
                if (const CallExpr* c = call_of(s.instr))
                    callers_of_[c->signature()].insert(sig);
                if (const auto* a = std::get_if<Assign>(&s.instr))
                    if (const auto* f = std::get_if<FieldRef>(&a->value))
                        field_readers_[f->qualified_name()].insert(sig);
            }
        }
    }

    TaintResult run()
    {
        TaintResult result;
        for (const auto& sig : order_)
            enqueue(sig);
        try {
            while (!queue_.empty()) {
                current_ = queue_.front();
                queue_.pop_front();
                queued_.erase(current_);
                analyze_method(*methods_.at(current_));
            }
        } catch (const TimeoutReached&) {
            result.timed_out = true;
            result.timed_out_methods.push_back(current_);
        }
        for (const auto& [site, facts] : hits_) {
            EntryPointHit hit;
            hit.method = site.first;
            hit.label = site.second;
            hit.provenance = facts;
            for (const auto& p : facts)
                hit.sources.insert(p.source);
            result.hits.push_back(std::move(hit));
        }
        return result;
    }

private:
    void enqueue(const std::string& sig)
    {
        if (methods_.count(sig) && queued_.insert(sig).second)
            queue_.push_back(sig);
    }

    bool is_source(const CallExpr& call) const
    {
        const std::string name = call.qualified_name();
        return catalog_.contains(Category::Source, name) || input_.sources.count(name) > 0;
    }

    Facts args_facts(const Env& env, const std::vector<std::string>& args) const
    {
        Facts out;
        for (const auto& a : args)
            if (auto it = env.find(a); it != env.end())
                out.insert(it->second.begin(), it->second.end());
        return out;
    }

    /// Effects of a call; returns the facts of its result value.
    Facts transfer_call(const MethodDef& m, const Statement& s, const CallExpr& call, const Env& env)
    {
        if (call.cls == kIfClass) {
            auto site = input_.sinks.find(call.qualified_name());
            Facts reaching = args_facts(env, call.args);
            if (site != input_.sinks.end() && !reaching.empty())
                merge_into(hits_[{site->second.method, site->second.label}], reaching);
            return {};
        }
        if (is_source(call))
            return {Provenance{call.qualified_name(), m.signature(), s.label}};
        const std::string callee = call.signature();
        if (methods_.count(callee)) {
            auto& formals = params_[callee];
            bool changed = false;
            for (std::size_t i = 0; i < call.args.size() && i < formals.size(); ++i)
                if (auto it = env.find(call.args[i]); it != env.end())
                    changed |= merge_into(formals[i], it->second);
            if (changed)
                enqueue(callee);
            return returns_[callee];
        }
        // Unmodeled external API: the result may carry any argument.
        return args_facts(env, call.args);
    }

    Env transfer(const MethodDef& m, const Statement& s, Env env)
    {
        struct Visitor {
            Analysis& self;
            const MethodDef& m;
            const Statement& s;
            Env& env;

            void operator()(const Assign& a)
            {
                Facts value = std::visit(
                    [&](const auto& rhs) -> Facts {
                        using T = std::decay_t<decltype(rhs)>;
                        if constexpr (std::is_same_v<T, CallExpr>)
                            return self.transfer_call(m, s, rhs, env);
                        else if constexpr (std::is_same_v<T, Var>)
                            return self.args_facts(env, {rhs.name});
                        else if constexpr (std::is_same_v<T, BinOp>)
                            return self.args_facts(env, used_vars(Instr{a}));
                        else if constexpr (std::is_same_v<T, FieldRef>)
                            return self.fields_[rhs.qualified_name()];
                        else
                            return {};
                    },
                    a.value);
                if (value.empty())
                    env.erase(a.target);
                else
                    env[a.target] = std::move(value);
            }
            void operator()(const Invoke& c) { self.transfer_call(m, s, c.call, env); }
            void operator()(const SetField& sf)
            {
                auto it = env.find(sf.value);
                if (it != env.end() && merge_into(self.fields_[sf.field.qualified_name()], it->second))
                    for (const auto& reader : self.field_readers_[sf.field.qualified_name()])
                        self.enqueue(reader);
            }
            void operator()(const Return& r)
            {
                if (!r.var)
                    return;
                auto it = env.find(*r.var);
                if (it != env.end() && merge_into(self.returns_[m.signature()], it->second))
                    for (const auto& caller : self.callers_of_[m.signature()])
                        self.enqueue(caller);
            }
            void operator()(const If&) {}
            void operator()(const Goto&) {}
        };
        std::visit(Visitor{*this, m, s, env}, s.instr);
        return env;
    }

    void analyze_method(const MethodDef& m)
    {
        const std::size_t n = m.body.size();
        std::vector<std::optional<Env>> in(n);
        Env entry;
        const auto& formals = params_[m.signature()];
        for (std::size_t i = 0; i < m.params.size(); ++i)
            if (!formals[i].empty())
                entry[m.params[i]] = formals[i];
        in[0] = std::move(entry);

        std::deque<std::size_t> work{0};
        std::vector<bool> pending(n, false);
        pending[0] = true;
        auto push = [&](std::size_t i, const Env& env) {
            bool changed = false;
            if (!in[i]) {
                in[i] = env;
                changed = true;
            } else {
                changed = merge_env(*in[i], env);
            }
            if (changed && !pending[i]) {
                pending[i] = true;
                work.push_back(i);
            }
        };

        while (!work.empty()) {
            if ((++steps_ & 0xff) == 0 && std::chrono::steady_clock::now() > deadline_)
                throw TimeoutReached{};
            const std::size_t i = work.front();
            work.pop_front();
            pending[i] = false;
            const Statement& s = m.body[i];
            Env out = transfer(m, s, *in[i]);
            if (const auto* cond = std::get_if<If>(&s.instr)) {
                push(*m.index_of(cond->target), out);
                push(i + 1, out);
            } else if (const auto* g = std::get_if<Goto>(&s.instr)) {
                push(*m.index_of(g->target), out);
            } else if (!std::holds_alternative<Return>(s.instr)) {
                push(i + 1, out);
            }
        }
    }

    const InstrumentedProgram& input_;
    const Catalog& catalog_;
    std::chrono::steady_clock::time_point deadline_;
    std::size_t steps_ = 0;

    std::map<std::string, const MethodDef*> methods_;
    std::vector<std::string> order_;
    std::map<std::string, std::set<std::string>> callers_of_;
    std::map<std::string, std::set<std::string>> field_readers_;

    std::map<std::string, std::vector<Facts>> params_;
    std::map<std::string, Facts> returns_;
    std::map<std::string, Facts> fields_;
    std::map<std::pair<std::string, std::string>, Facts> hits_;

    std::deque<std::string> queue_;
    std::set<std::string> queued_;
    std::string current_;
};

} // namespace

TaintResult run_taint(const InstrumentedProgram& input, const Catalog& catalog, const TaintOptions& options)
{
    return Analysis(input, catalog, options).run();
}

} // namespace shso
