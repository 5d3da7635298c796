#include "dyn/interp.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <unordered_set>

namespace dyn {

Value Object::get(const std::string& field) const {
    auto& fs = cls->fields;
    auto it = std::lower_bound(fs.begin(), fs.end(), field);
    if (it == fs.end() || *it != field) return nullptr;
    return fields[it - fs.begin()];
}

const char* outcome_name(Outcome::Kind k) {
    switch (k) {
        case Outcome::Kind::Proper: return "Proper";
        case Outcome::Kind::Fail: return "Fail";
        case Outcome::Kind::TypeError: return "TypeError";
        case Outcome::Kind::BudgetExhausted: return "BudgetExhausted";
    }
    return "?";
}

std::string value_summary(Value v) {
    if (!v) return "null";
    return v->cls->name + "#" + std::to_string(v->alloc);
}

std::string Outcome::str() const {
    std::string s = outcome_name(kind);
    if (kind == Kind::Proper) s += " " + value_summary(result);
    if (kind == Kind::TypeError) {
        s += " at #" + std::to_string(node) + " " + reason;
        if (reason == "method-not-understood") s += " " + method + "/" + std::to_string(arity);
    }
    if (kind == Kind::Fail) s += " at #" + std::to_string(node);
    return s;
}

namespace {

void collect_locals(const Node& n, std::set<std::string>& out) {
    if (n.kind == Kind::Var || n.kind == Kind::AssignLocal) out.insert(n.name);
    for (auto& k : n.kids) collect_locals(*k, out);
}

}  // namespace

std::vector<std::string> unit_locals(const Program& p, int unit) {
    std::vector<std::string> out;
    const Method* m = p.unit_method(unit);
    if (m) out = m->params;
    std::set<std::string> rest;
    collect_locals(*p.units[unit].body, rest);
    for (auto& n : rest)
        if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    return out;
}

namespace {

struct Stop {
    Outcome outcome;
};

class Machine {
public:
    Machine(const Program& p, const RunOptions& o) : p_(p), o_(o), heap_(std::make_shared<Heap>()) {
        local_slot_.assign(p.node_count, -1);
        field_slot_.assign(p.node_count, -1);
        for (size_t u = 0; u < p.units.size(); ++u) {
            auto names = unit_locals(p, static_cast<int>(u));
            unit_nlocals_.push_back(static_cast<int>(names.size()));
            if (p.units[u].cls >= 0) method_unit_[{p.units[u].cls, p.units[u].method}] = static_cast<int>(u);
            unit_names_.push_back(names);
            const ClassDecl* cls = p.units[u].cls >= 0 ? &p.classes[p.units[u].cls] : nullptr;
            index_unit(*p.units[u].body, names, cls);
        }
        bool_cls_ = p.find_class("bool");
        if (!bool_cls_) throw std::logic_error("program without the builtin bool class");
        bool_v_ = slot_of(*bool_cls_, "v");
    }

    RunResult go() {
        RunResult res;
        try {
            Frame f;
            f.unit = p_.main_unit();
            f.locals.assign(unit_nlocals_[f.unit], nullptr);
            Value v = eval(*p_.main, f);
            res.outcome.kind = Outcome::Kind::Proper;
            res.outcome.result = v;
        } catch (Stop& s) {
            res.outcome = s.outcome;
        }
        res.outcome.steps = steps_;
        res.heap = heap_;
        return res;
    }

private:
    const Program& p_;
    RunOptions o_;
    std::shared_ptr<Heap> heap_;
    std::vector<int> local_slot_, field_slot_, unit_nlocals_;
    std::vector<std::vector<std::string>> unit_names_;
    std::map<std::pair<int, int>, int> method_unit_;
    const ClassDecl* bool_cls_ = nullptr;
    int bool_v_ = -1;
    long long steps_ = 0;
    int depth_ = 0;

    static int slot_of(const ClassDecl& c, const std::string& f) {
        auto it = std::lower_bound(c.fields.begin(), c.fields.end(), f);
        if (it == c.fields.end() || *it != f) return -1;
        return static_cast<int>(it - c.fields.begin());
    }

    void index_unit(const Node& n, const std::vector<std::string>& names, const ClassDecl* cls) {
        if (n.kind == Kind::Var || n.kind == Kind::AssignLocal)
            local_slot_[n.id] =
                static_cast<int>(std::find(names.begin(), names.end(), n.name) - names.begin());
        if ((n.kind == Kind::IVar || n.kind == Kind::AssignField) && cls) field_slot_[n.id] = slot_of(*cls, n.name);
        for (auto& k : n.kids) index_unit(*k, names, cls);
    }

    [[noreturn]] void stop(Outcome::Kind k, const Node& n, std::string reason = {}, std::string m = {},
                           int arity = 0) {
        Outcome o;
        o.kind = k;
        o.node = n.id;
        o.reason = std::move(reason);
        o.method = std::move(m);
        o.arity = arity;
        throw Stop{o};
    }

    Value alloc(const ClassDecl& c) {
        auto obj = std::make_unique<Object>();
        obj->cls = &c;
        obj->alloc = static_cast<int>(heap_->objects.size());
        obj->fields.assign(c.fields.size(), nullptr);
        heap_->objects.push_back(std::move(obj));
        return heap_->objects.back().get();
    }

    Value make_bool(bool b) {
        Value v = alloc(*bool_cls_);
        if (bool_v_ >= 0 && b) v->fields[bool_v_] = v;
        return v;
    }

    bool truth(const Node& at, Value v) {
        if (!v) stop(Outcome::Kind::Fail, at);
        if (v->cls != bool_cls_) stop(Outcome::Kind::TypeError, at, "non-boolean-condition");
        return bool_v_ >= 0 && v->fields[bool_v_] != nullptr;
    }

    bool guard_holds(const Node& n, const Frame& f) {
        for (auto& [subj, classes] : n.guard) {
            Value v = nullptr;
            if (subj.size() > 1 && subj[0] == '@') {
                v = f.self ? f.self->get(subj.substr(1)) : nullptr;
            } else {
                auto& names = unit_names_[f.unit];
                auto it = std::find(names.begin(), names.end(), subj);
                if (it != names.end()) v = f.locals[it - names.begin()];
            }
            std::string cls = v ? v->cls->name : "Null";
            if (std::find(classes.begin(), classes.end(), cls) == classes.end()) return false;
        }
        return true;
    }

    Value invoke(const Node& at, Value recv, const std::string& m, std::vector<Value>& args) {
        const ClassDecl& c = *recv->cls;
        const Method* meth = c.find(m, static_cast<int>(args.size()));
        if (!meth) stop(Outcome::Kind::TypeError, at, "method-not-understood", m, static_cast<int>(args.size()));
        int cls_idx = p_.class_index.at(c.name);
        int mi = static_cast<int>(meth - c.methods.data());
        int unit = method_unit_.at({cls_idx, mi});
        Frame callee;
        callee.unit = unit;
        callee.self = recv;
        callee.locals.assign(unit_nlocals_[unit], nullptr);
        for (size_t i = 0; i < args.size(); ++i) callee.locals[i] = args[i];
        return eval(*meth->body, callee);
    }

    Value eval(const Node& n, Frame& f) {
        if (++steps_ > o_.budget) stop(Outcome::Kind::BudgetExhausted, n);
        if (++depth_ > o_.max_depth) stop(Outcome::Kind::BudgetExhausted, n, "depth");
        if (o_.monitor) o_.monitor->at_pre(n, f);
        Value r = step(n, f);
        --depth_;
        if (o_.monitor) o_.monitor->at_post(n, f, r);
        if (o_.trace) *o_.trace << "#" << n.id << " " << kind_name(n.kind) << " r=" << value_summary(r) << "\n";
        return r;
    }

    // Evaluates operands left to right, keeping earlier ones visible as pending.
    std::vector<Value> operands(const Node& n, Frame& f, size_t from) {
        std::vector<Value> vals;
        size_t base = f.pending.size();
        for (size_t i = from; i < n.kids.size(); ++i) {
            Value v = eval(*n.kids[i], f);
            vals.push_back(v);
            f.pending.push_back({n.id, static_cast<int>(i - from), v});
        }
        f.pending.resize(base);
        return vals;
    }

    Value step(const Node& n, Frame& f) {
        switch (n.kind) {
            case Kind::Null: return nullptr;
            case Kind::This: return f.self;
            case Kind::Var: return f.locals[local_slot_[n.id]];
            case Kind::IVar: {
                int s = field_slot_[n.id];
                return (f.self && s >= 0) ? f.self->fields[s] : nullptr;
            }
            case Kind::Identity: {
                auto v = operands(n, f, 0);
                return make_bool(v[0] == v[1]);
            }
            case Kind::IsA: {
                Value v = eval(*n.kids[0], f);
                return make_bool(v && v->cls->name == n.name);
            }
            case Kind::Call: {
                auto v = operands(n, f, 0);
                if (!v[0]) stop(Outcome::Kind::Fail, n);
                std::vector<Value> args(v.begin() + 1, v.end());
                return invoke(n, v[0], n.name, args);
            }
            case Kind::New: {
                auto args = operands(n, f, 0);
                const ClassDecl* c = p_.find_class(n.name);
                if (!c) stop(Outcome::Kind::TypeError, n, "method-not-understood", "init", static_cast<int>(args.size()));
                Value obj = alloc(*c);
                if (c->find("init", static_cast<int>(args.size()))) return invoke(n, obj, "init", args);
                if (!args.empty())
                    stop(Outcome::Kind::TypeError, n, "method-not-understood", "init", static_cast<int>(args.size()));
                return obj;
            }
            case Kind::AssignLocal: {
                Value v = eval(*n.kids[0], f);
                f.locals[local_slot_[n.id]] = v;
                return v;
            }
            case Kind::AssignField: {
                Value v = eval(*n.kids[0], f);
                int s = field_slot_[n.id];
                if (f.self && s >= 0) f.self->fields[s] = v;
                return v;
            }
            case Kind::If: {
                bool b;
                if (n.marked)
                    b = guard_holds(n, f);
                else
                    b = truth(n, eval(*n.kids[0], f));
                return eval(*n.kids[b ? 1 : 2], f);
            }
            case Kind::While: {
                while (truth(n, eval(*n.kids[0], f))) eval(*n.kids[1], f);
                return nullptr;
            }
            case Kind::Seq: {
                Value v = nullptr;
                for (auto& k : n.kids) v = eval(*k, f);
                return v;
            }
            case Kind::Block:
                return n.kids.empty() ? nullptr : eval(*n.kids[0], f);
            case Kind::TypeFilter:
                return eval(*n.kids[0], f);
            case Kind::Phi:
            case Kind::NumLit:
            case Kind::BoolLit:
            case Kind::BinOp:
            case Kind::Index:
                throw std::logic_error(std::string("cannot evaluate ") + kind_name(n.kind));
        }
        return nullptr;
    }
};

}  // namespace

RunResult run(const Program& p, const RunOptions& opts) {
    if (!p.expanded) throw std::logic_error("run expects a desugared, expanded program");
    Machine m(p, opts);
    return m.go();
}

std::optional<uint64_t> decode_num(Value v) {
    uint64_t n = 0;
    std::unordered_set<const Object*> seen;
    while (true) {
        if (!v || v->cls->name != "num") return std::nullopt;
        if (!seen.insert(v).second) return std::nullopt;
        Value pred = v->get("pred");
        if (!pred) return n;
        ++n;
        v = pred;
    }
}

std::optional<bool> decode_bool(Value v) {
    if (!v || v->cls->name != "bool") return std::nullopt;
    return v->get("v") != nullptr;
}

std::optional<std::vector<Value>> decode_list(Value v) {
    std::vector<Value> out;
    std::unordered_set<const Object*> seen;
    while (true) {
        if (!v) return std::nullopt;
        if (!seen.insert(v).second) return std::nullopt;
        if (v->cls->name == "nil") return out;
        if (v->cls->name != "cons") return std::nullopt;
        out.push_back(v->get("head"));
        v = v->get("tail");
    }
}

}  // namespace dyn
