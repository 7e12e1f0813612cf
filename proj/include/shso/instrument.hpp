// Rewrites a program so conditions and Build-style field reads become calls
// a method-level taint analysis can see: every `if` is preceded by a call to
// a dummy `IfClass.ifMethod_<k>` receiving the condition variables (sinks),
// and every catalog source-field load becomes a call to a dummy
// `BuildClass.get<Class>_<Field>` getter (sources).

#pragma once

#include "shso/catalog.hpp"
#include "shso/tir.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace shso {

struct SinkSite {
    std::string method; // signature
    std::string label;  // label of the original if-statement
    bool operator==(const SinkSite&) const = default;
};

/// `IfClass.ifMethod_<k>` -> the if-statement it stands for.
using SinkRegistry = std::map<std::string, SinkSite>;
/// `BuildClass.get<C>_<F>` -> `C.F`.
using SourceRegistry = std::map<std::string, std::string>;

class InstrumentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inserts a sink call before each if-statement. The inserted call gets a
/// fresh label and jumps that targeted the if are redirected to it, so
/// every path into the condition passes the sink. Original labels are kept.
/// Throws InstrumentError on an already-instrumented program.
std::pair<Program, SinkRegistry> instrument_ifs(const Program& program);

/// Replaces `x = field C.F` by `x = BuildClass.getC_F()` for catalog source fields.
std::pair<Program, SourceRegistry> instrument_field_sources(const Program& program, const Catalog& catalog);

struct InstrumentedProgram {
    Program program;
    SinkRegistry sinks;
    SourceRegistry sources;
};

/// Both rewrites: field sources first, then condition sinks.
InstrumentedProgram instrument(const Program& program, const Catalog& catalog);

} // namespace shso
