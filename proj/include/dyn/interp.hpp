#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dyn/ast.hpp"

namespace dyn {

struct Object;
using Value = Object*;  // nullptr is the null value

struct Object {
    const ClassDecl* cls = nullptr;  // the @c field
    int alloc = 0;
    std::vector<Value> fields;       // indexed like cls->fields

    Value get(const std::string& field) const;
};

struct Heap {
    std::vector<std::unique_ptr<Object>> objects;  // allocation order
};

struct PendingOperand {
    int node;
    int index;
    Value value;
};

// Locals are indexed by the interpreter's per-unit variable table.
struct Frame {
    int unit = -1;
    Value self = nullptr;
    std::vector<Value> locals;
    std::vector<PendingOperand> pending;
};

class Monitor {
public:
    virtual ~Monitor() = default;
    virtual void at_pre(const Node&, const Frame&) {}
    virtual void at_post(const Node&, const Frame&, Value) {}
};

struct Outcome {
    enum class Kind { Proper, Fail, TypeError, BudgetExhausted };
    Kind kind = Kind::Proper;
    Value result = nullptr;
    int node = -1;
    std::string reason;  // "method-not-understood" or "non-boolean-condition" for type errors
    std::string method;
    int arity = 0;
    long long steps = 0;

    std::string str() const;
};

const char* outcome_name(Outcome::Kind k);

struct RunOptions {
    long long budget = 1000000;
    int max_depth = 20000;  // nested evaluation frames
    std::ostream* trace = nullptr;
    Monitor* monitor = nullptr;
};

struct RunResult {
    Outcome outcome;
    std::shared_ptr<Heap> heap;
};

// Per-unit local variable table used for frames: parameters first, then other locals sorted.
std::vector<std::string> unit_locals(const Program& p, int unit);

RunResult run(const Program& p, const RunOptions& opts = {});

std::optional<uint64_t> decode_num(Value v);
std::optional<bool> decode_bool(Value v);
std::optional<std::vector<Value>> decode_list(Value v);

std::string value_summary(Value v);

}  // namespace dyn
