#include "dyn/fuzz.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dyn/infer.hpp"
#include "dyn/lang.hpp"
#include "dyn/proof.hpp"
#include "dyn/ssa.hpp"

namespace dyn {

namespace {

const std::vector<std::string> kMainVars = {"x", "y", "z"};

struct Sig {
    std::string name;
    int arity;
};

struct GenClass {
    std::string name;
    std::string parent;
    std::vector<std::string> fields;
    std::vector<Sig> own;                                  // methods defined in the body
    std::vector<std::pair<std::string, std::string>> renames;
    std::vector<Sig> table;                                // after inheritance and renaming
    int init_arity = -1;                                   // -1 when no init
};

class Generator {
public:
    Generator(std::mt19937_64& rng, const FuzzOptions& o) : rng_(rng), o_(o) {}

    std::string program() {
        plan_classes();
        std::string out;
        for (auto& c : classes_) out += class_text(c);
        Scope main;
        main.locals = kMainVars;
        int n = pick(2, 4);
        for (int i = 0; i < n; ++i) out += stmt(main, o_.max_depth) + ";\n";
        out += expr(main, o_.max_depth) + "\n";
        return out;
    }

private:
    struct Scope {
        const GenClass* cls = nullptr;
        std::vector<std::string> locals;
        bool in_loop = false;
    };

    std::mt19937_64& rng_;
    FuzzOptions o_;
    std::vector<GenClass> classes_;

    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
    template <class T>
    const T& one(const std::vector<T>& v) {
        return v[static_cast<size_t>(pick(0, static_cast<int>(v.size()) - 1))];
    }

    void plan_classes() {
        static const std::vector<Sig> pool = {{"get", 0}, {"put", 1}, {"run", 2}};
        static const std::vector<std::string> names = {"A", "B", "C"};
        static const std::vector<std::string> field_pool = {"f", "g"};
        int n = pick(1, std::max(1, o_.max_classes));
        for (int i = 0; i < n; ++i) {
            GenClass c;
            c.name = names[static_cast<size_t>(i)];
            const GenClass* parent = nullptr;
            if (i > 0 && chance(0.4)) parent = &classes_[static_cast<size_t>(pick(0, i - 1))];
            c.parent = parent ? parent->name : "object";
            if (parent) c.table = parent->table;
            int nf = pick(0, std::min<int>(o_.max_fields, static_cast<int>(field_pool.size())));
            for (int f = 0; f < nf; ++f) c.fields.push_back(field_pool[static_cast<size_t>(f)]);
            if (parent)
                for (auto& f : parent->fields)
                    if (std::find(c.fields.begin(), c.fields.end(), f) == c.fields.end()) c.fields.push_back(f);
            if (parent && !c.table.empty() && chance(0.3)) {
                auto& victim = one(c.table);
                if (victim.name != "init") {
                    std::string to = victim.name + "2";
                    c.renames.emplace_back(victim.name, to);
                    for (auto& s : c.table)
                        if (s.name == victim.name) s.name = to;
                }
            }
            int nm = pick(0, std::max(0, o_.max_methods));
            std::vector<Sig> candidates = pool;
            candidates.push_back({"init", pick(0, 2)});
            std::shuffle(candidates.begin(), candidates.end(), rng_);
            for (int m = 0; m < nm && m < static_cast<int>(candidates.size()); ++m) {
                c.own.push_back(candidates[static_cast<size_t>(m)]);
                auto& s = c.own.back();
                auto it = std::find_if(c.table.begin(), c.table.end(),
                                       [&](const Sig& t) { return t.name == s.name && t.arity == s.arity; });
                if (it == c.table.end()) c.table.push_back(s);
            }
            for (auto& s : c.table)
                if (s.name == "init") c.init_arity = std::max(c.init_arity, s.arity);
            // constructors dispatch on the largest init; keep a single one
            c.table.erase(std::remove_if(c.table.begin(), c.table.end(),
                                         [&](const Sig& s) { return s.name == "init" && s.arity != c.init_arity; }),
                          c.table.end());
            classes_.push_back(std::move(c));
        }
    }

    std::string class_text(const GenClass& c) {
        std::string out = "class " + c.name + " < " + c.parent + " {\n";
        for (auto& [a, b] : c.renames) out += "  rename " + a + " " + b + "\n";
        for (auto& s : c.own) {
            if (s.name == "init" && s.arity != c.init_arity) continue;
            Scope sc;
            sc.cls = &c;
            static const std::vector<std::string> params = {"p", "q"};
            std::string head = "  method " + s.name + "(";
            for (int i = 0; i < s.arity; ++i) {
                head += (i ? ", " : "") + params[static_cast<size_t>(i)];
                sc.locals.push_back(params[static_cast<size_t>(i)]);
            }
            sc.locals.push_back("t");
            out += head + ") {\n";
            int n = pick(0, 2);
            for (int i = 0; i < n; ++i) out += "    " + stmt(sc, o_.max_depth - 1) + ";\n";
            out += "    " + (s.name == "init" ? std::string("this") : expr(sc, o_.max_depth - 1)) + "\n  }\n";
        }
        return out + "}\n";
    }

    const GenClass* random_class() { return classes_.empty() ? nullptr : &one(classes_); }

    std::string list(const Scope& sc, int d) {
        if (d > 1 && chance(0.6)) return "new cons(" + expr(sc, d - 1) + ", " + list(sc, d - 1) + ")";
        return "new nil()";
    }

    std::string construct(const Scope& sc, int d) {
        int kind = pick(0, 3);
        if (kind == 0 || classes_.empty()) {
            if (chance(0.5)) return "new cons(" + expr(sc, d - 1) + ", new nil())";
            return "new nil()";
        }
        auto* c = random_class();
        std::string out = "new " + c->name + "(";
        for (int i = 0; i < std::max(0, c->init_arity); ++i) out += (i ? ", " : "") + expr(sc, d - 1);
        return out + ")";
    }

    std::string leaf(const Scope& sc) {
        switch (pick(0, 7)) {
            case 0: return "null";
            case 1: return std::to_string(pick(0, 3));
            case 2: return chance(0.5) ? "true" : "false";
            case 3:
                if (sc.cls) return "this";
                [[fallthrough]];
            case 4:
                if (sc.cls && !sc.cls->fields.empty()) return "@" + one(sc.cls->fields);
                [[fallthrough]];
            default:
                return one(sc.locals);
        }
    }

    std::string num(const Scope& sc, int d) {
        if (d <= 1) return std::to_string(pick(0, 3));
        switch (pick(0, 6)) {
            case 0: return "(" + num(sc, d - 1) + ").succ()";
            case 1: return "(" + num(sc, d - 1) + " + " + num(sc, d - 1) + ")";
            case 2: return "if " + boolean(sc, d - 1) + " then " + num(sc, d - 1) + " else " + num(sc, d - 1) + " fi";
            case 3: return "(" + list(sc, d - 1) + ").size()";
            case 4: return "(" + num(sc, d - 1) + ").pred()";
            default: return std::to_string(pick(0, 3));
        }
    }

    std::string boolean(const Scope& sc, int d) {
        if (d <= 1) return chance(0.5) ? "true" : "false";
        switch (pick(0, 6)) {
            case 0: return "(" + expr(sc, d - 1) + " == " + expr(sc, d - 1) + ")";
            case 1: {
                std::string cls = classes_.empty() || chance(0.4) ? one(std::vector<std::string>{"num", "bool", "cons"})
                                                                 : random_class()->name;
                return "(" + expr(sc, d - 1) + " is_a? " + cls + ")";
            }
            case 2: return "(" + num(sc, d - 1) + ").is_zero()";
            case 3: return "(" + boolean(sc, d - 1) + ").not()";
            case 4: return "(" + boolean(sc, d - 1) + (chance(0.5) ? " & " : " | ") + boolean(sc, d - 1) + ")";
            case 5: return "(" + num(sc, d - 1) + " = " + num(sc, d - 1) + ")";
            default: return chance(0.5) ? "true" : "false";
        }
    }

    // a condition; occasionally an arbitrary expression
    std::string condition(const Scope& sc, int d) {
        if (chance(0.05)) return expr(sc, d - 1);
        return boolean(sc, d);
    }

    // a receiver that answers the chosen method, or occasionally anything
    std::string call(const Scope& sc, int d) {
        if (!classes_.empty() && chance(0.7)) {
            auto* c = random_class();
            std::vector<Sig> callable;
            for (auto& s : c->table)
                if (s.name != "init") callable.push_back(s);
            if (!callable.empty()) {
                auto sig = one(callable);
                std::string recv;
                if (sc.cls == c && chance(0.5)) {
                    recv = "this";
                } else if (chance(0.05)) {
                    recv = expr(sc, d - 1);
                } else {
                    recv = "(new " + c->name + "(";
                    for (int i = 0; i < std::max(0, c->init_arity); ++i) recv += (i ? ", " : "") + expr(sc, d - 1);
                    recv += "))";
                }
                std::string out = recv + "." + sig.name + "(";
                for (int i = 0; i < sig.arity; ++i) out += (i ? ", " : "") + expr(sc, d - 1);
                return "(" + out + "))";
            }
        }
        switch (pick(0, 2)) {
            case 0: return num(sc, d);
            case 1: return boolean(sc, d);
            default: return "((" + list(sc, d - 1) + ")[" + std::to_string(pick(0, 1)) + "])";
        }
    }

    std::string expr(const Scope& sc, int d) {
        if (d <= 1) return leaf(sc);
        switch (pick(0, 9)) {
            case 0:
            case 1:
            case 2: return leaf(sc);
            case 3:
            case 4: return call(sc, d);
            case 5: return construct(sc, d);
            case 6: return boolean(sc, d);
            case 7: return "if " + condition(sc, d) + " then " + expr(sc, d - 1) + " else " + expr(sc, d - 1) + " fi";
            case 8: return num(sc, d);
            default: return leaf(sc);
        }
    }

    std::string stmt(Scope& sc, int d) {
        int kind = pick(0, 9);
        if (kind <= 3 || d <= 2) return one(sc.locals) + " := " + expr(sc, d - 1);
        if (kind <= 5 && sc.cls && !sc.cls->fields.empty()) return "@" + one(sc.cls->fields) + " := " + expr(sc, d - 1);
        if (kind <= 7)
            return "if " + condition(sc, d) + " then " + stmt(sc, d - 1) + " else " + stmt(sc, d - 1) + " fi";
        if (kind == 8 && !sc.in_loop) {
            // bounded loop over a dedicated counter
            Scope inner = sc;
            inner.in_loop = true;
            std::string k = "k";
            inner.locals.erase(std::remove(inner.locals.begin(), inner.locals.end(), k), inner.locals.end());
            if (std::find(sc.locals.begin(), sc.locals.end(), k) == sc.locals.end()) sc.locals.push_back(k);
            return k + " := " + std::to_string(pick(0, 3)) + "; while k.is_zero().not() do " +
                   stmt(inner, d - 1) + "; k := k.pred() od";
        }
        return expr(sc, d);
    }
};

std::string value_text(std::mt19937_64& rng, const Program& p) {
    std::vector<const ClassDecl*> user;
    for (auto& c : p.classes)
        if (!c.prelude) user.push_back(&c);
    switch (std::uniform_int_distribution<int>(0, 5)(rng)) {
        case 0: return "null";
        case 1: return std::to_string(std::uniform_int_distribution<int>(0, 5)(rng));
        case 2: return std::bernoulli_distribution(0.5)(rng) ? "true" : "false";
        case 3: return "new cons(" + std::to_string(std::uniform_int_distribution<int>(0, 3)(rng)) + ", new nil())";
        case 4: return "new object()";
        default: {
            if (user.empty()) return "new nil()";
            auto* c = user[std::uniform_int_distribution<size_t>(0, user.size() - 1)(rng)];
            int arity = -1;
            for (auto& m : c->methods)
                if (m.name == "init") arity = std::max(arity, m.arity());
            std::string out = "new " + c->name + "(";
            for (int i = 0; i < std::max(0, arity); ++i) out += std::string(i ? ", " : "") + "null";
            return out + ")";
        }
    }
}

}  // namespace

std::string random_program(std::mt19937_64& rng, const FuzzOptions& opts) {
    return Generator(rng, opts).program();
}

std::string heap_variant(std::mt19937_64& rng, const std::string& source) {
    Program p = parse_program(source);
    Program full = load_program(source);
    // main starts after the last closing brace of a class body
    size_t cut = 0;
    if (!p.classes.empty()) {
        auto pos = source.rfind("}\n");
        if (pos != std::string::npos) cut = pos + 2;
    }
    std::string prefix;
    for (auto& v : kMainVars)
        if (std::bernoulli_distribution(0.8)(rng)) prefix += v + " := " + value_text(rng, full) + ";\n";
    return source.substr(0, cut) + prefix + source.substr(cut);
}

std::optional<std::string> random_annotation(std::mt19937_64& rng, const Program& p) {
    auto ctx = statement_context(p);
    std::vector<int> sites;
    for (int id = 0; id < p.node_count; ++id) {
        if (!ctx[id]) continue;
        int u = p.unit_of[id];
        if (p.units[u].cls >= 0 && p.classes[p.units[u].cls].prelude) continue;
        sites.push_back(id);
    }
    if (sites.empty()) return std::nullopt;
    int at = sites[std::uniform_int_distribution<size_t>(0, sites.size() - 1)(rng)];
    int unit = p.unit_of[at];
    std::vector<std::string> subjects = unit_locals(p, unit);
    if (p.units[unit].cls >= 0) {
        std::set<std::string> fields;
        std::function<void(const Node&)> walk = [&](const Node& n) {
            if (n.kind == Kind::IVar || n.kind == Kind::AssignField) fields.insert(n.name);
            for (auto& k : n.kids) walk(*k);
        };
        walk(*p.units[unit].body);
        for (auto& f : fields) subjects.push_back("@" + f);
    }
    if (subjects.empty()) return std::nullopt;
    auto& u = *p.universe;
    std::vector<std::string> names = {"Null"};
    for (auto& c : u.classes())
        if (c != "Null") names.push_back(c);
    auto type = [&] {
        std::vector<std::string> picked;
        for (auto& n : names)
            if (std::bernoulli_distribution(0.35)(rng)) picked.push_back(n);
        if (picked.empty()) picked.push_back(names[std::uniform_int_distribution<size_t>(0, names.size() - 1)(rng)]);
        std::string out = "{";
        for (size_t i = 0; i < picked.size(); ++i) out += (i ? "," : "") + picked[i];
        return out + "}";
    };
    auto conj = [&] {
        std::vector<std::string> chosen = subjects;
        std::shuffle(chosen.begin(), chosen.end(), rng);
        size_t k = std::uniform_int_distribution<size_t>(1, std::min<size_t>(2, chosen.size()))(rng);
        std::string out;
        for (size_t i = 0; i < k; ++i) out += (i ? " and " : "") + ("[" + chosen[i] + "] in " + type());
        return out;
    };
    std::string formula = conj();
    if (std::bernoulli_distribution(0.25)(rng)) formula += " or " + conj();
    return "at " + p.unit_name(unit) + "#" + std::to_string(at) + " assume " + formula;
}

std::string FuzzStats::str() const {
    std::ostringstream o;
    o << programs << " programs, " << rejected << " rejected, " << obligation_free << " obligation-free, " << runs
      << " runs, " << type_errors << " type errors, " << violations << " instrumented violations, " << budget_exhausted
      << " exhausted";
    if (proofs) o << ", " << proofs << " proofs, " << proof_failures << " proof failures";
    if (refinements) o << ", " << refinements << " refinements, " << monotone_violations << " monotonicity violations";
    return o.str();
}

FuzzStats fuzz_soundness(uint64_t seed, int count, long long budget, int variants, bool proofs) {
    FuzzStats st;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < count; ++i) {
        std::string src = random_program(rng);
        ++st.programs;
        std::vector<std::string> sources;
        for (int v = 0; v < variants; ++v) sources.push_back(heap_variant(rng, src));
        Analysis base;
        try {
            base = analyze(load_program(src));
        } catch (std::exception& e) {
            ++st.rejected;
            st.failures.push_back("program " + std::to_string(i) + " rejected: " + e.what());
            continue;
        }
        if (!base.obligations.empty()) continue;
        ++st.obligation_free;
        if (proofs) {
            ++st.proofs;
            auto rep = check_proof(base.prog, build_typing_proof(base));
            if (!rep.ok()) {
                ++st.proof_failures;
                st.failures.push_back("program " + std::to_string(i) + " proof: " + rep.str());
            }
        }
        for (int v = 0; v < variants; ++v) {
            Analysis a;
            try {
                a = analyze(load_program(sources[static_cast<size_t>(v)]));
            } catch (std::exception& e) {
                ++st.rejected;
                st.failures.push_back("program " + std::to_string(i) + " variant rejected: " + e.what());
                continue;
            }
            RunOptions ro;
            ro.budget = budget;
            auto run = run_instrumented(a, ro, 4);
            ++st.runs;
            if (run.outcome.kind == Outcome::Kind::BudgetExhausted) ++st.budget_exhausted;
            // the prefixed program must stay obligation-free for the guarantee to apply
            if (!a.obligations.empty()) continue;
            if (run.outcome.kind == Outcome::Kind::TypeError) {
                ++st.type_errors;
                st.failures.push_back("program " + std::to_string(i) + " variant " + std::to_string(v) + ": " +
                                      run.outcome.str() + "\n" + sources[static_cast<size_t>(v)]);
            }
            if (!run.violations.empty()) {
                st.violations += static_cast<int>(run.violations.size());
                st.failures.push_back("program " + std::to_string(i) + " variant " + std::to_string(v) + ": " +
                                      run.violations.front().str(a.prog) + "\n" + sources[static_cast<size_t>(v)]);
            }
        }
    }
    return st;
}

FuzzStats fuzz_refinement(uint64_t seed, int count) {
    FuzzStats st;
    std::mt19937_64 rng(seed);
    while (st.refinements < count) {
        std::string src = random_program(rng);
        ++st.programs;
        Analysis base;
        try {
            base = analyze(load_program(src));
        } catch (std::exception& e) {
            ++st.rejected;
            continue;
        }
        auto line = random_annotation(rng, base.prog);
        if (!line) continue;
        std::vector<Annotation> anns;
        try {
            anns = parse_annotations(base.prog, *line);
        } catch (AnnotationError&) {
            continue;
        }
        ++st.refinements;
        auto after = refine(base.prog, anns);
        auto bad = check_monotone(base, after);
        if (!bad.empty()) {
            st.monotone_violations += static_cast<int>(bad.size());
            st.failures.push_back(*line + ": " + bad.front() + "\n" + src);
        }
    }
    return st;
}

}  // namespace dyn
