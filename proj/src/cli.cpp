#include "dyn/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dyn/fuzz.hpp"
#include "dyn/infer.hpp"
#include "dyn/lang.hpp"
#include "dyn/proof.hpp"
#include "dyn/purity.hpp"
#include "dyn/ssa.hpp"
#include "dyn/stack.hpp"

namespace dyn {

namespace {

using ojson = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Loaded {
    Analysis original;
    Analysis analysis;  // refined when annotations were given
    std::vector<Annotation> annotations;
};

Loaded load(const std::string& file, const std::string& annotations, int path_cap) {
    std::string src = read_file(file);
    Program p;
    try {
        p = load_program(src);
    } catch (LangError& e) {
        throw UsageError(file + ":" + e.what());
    }
    InferOptions opts;
    opts.path_cap = path_cap;
    Loaded l;
    l.original = analyze(p, opts);
    if (annotations.empty()) {
        l.analysis = l.original;
        return l;
    }
    try {
        l.annotations = parse_annotations(l.original.prog, read_file(annotations));
    } catch (AnnotationError& e) {
        throw UsageError(annotations + ": " + e.what());
    }
    l.analysis = refine(l.original.prog, l.annotations, opts);
    return l;
}

ojson obligations_json(const Analysis& a) {
    ojson out = ojson::array();
    for (auto& o : a.obligations) {
        ojson j;
        j["node"] = o.node;
        j["unit"] = a.prog.unit_name(a.prog.unit_of[o.node]);
        j["path"] = o.path;
        j["kind"] = o.kind;
        if (o.kind == "receiver-missing-method") j["method"] = o.method + "/" + std::to_string(o.arity);
        j["offending"] = o.offending.str();
        j["required"] = o.required.str();
        out.push_back(j);
    }
    return out;
}

// The refined location past the inserted filter statements.
int refined_node(const Analysis& a, int origin) {
    for (int id = 0; id < a.prog.node_count; ++id) {
        const Node* n = a.prog.nodes[id];
        if (n->origin != origin) continue;
        while (n->kind == Kind::Seq) {
            auto it = std::find_if(n->kids.begin(), n->kids.end(), [](const NodePtr& k) { return k->origin >= 0; });
            if (it == n->kids.end() || it == n->kids.begin()) break;
            n = it->get();
        }
        return n->id;
    }
    return -1;
}

std::string type_at(const Analysis& a, int node, const Subject& s) {
    if (node < 0) return "?";
    auto ctx = purity_context(a, node);
    auto it = ctx.types.find(s);
    return it == ctx.types.end() ? UnionType::bottom(a.ty.universe).str() : it->second.str();
}

ojson proof_verdict(const Analysis& a) {
    ojson v;
    if (!a.obligations.empty()) {
        v["status"] = "skipped";
        v["reason"] = std::to_string(a.obligations.size()) + " obligations";
        return v;
    }
    Proof pf = build_typing_proof(a);
    auto rep = check_proof(a.prog, pf);
    Proof back = proof_from_json(a.prog, ojson::parse(dump_proof(pf)));
    bool round = dump_proof(back) == dump_proof(pf) && check_proof(a.prog, back).ok();
    auto diffs = compare_typing(a, extract_typing(a.prog, pf));
    v["status"] = rep.ok() && round && diffs.empty() ? "valid" : "invalid";
    v["nodes"] = rep.nodes;
    v["check_failures"] = rep.failures.size();
    v["round_trip"] = round;
    v["typing_mismatches"] = diffs.size();
    return v;
}

int cmd_run(const std::string& file, long long budget, bool trace, bool json) {
    Program p;
    try {
        p = load_program(read_file(file));
    } catch (LangError& e) {
        throw UsageError(file + ":" + e.what());
    }
    RunOptions ro;
    ro.budget = budget;
    if (trace) ro.trace = &std::cerr;
    auto r = run(p, ro);
    const auto& o = r.outcome;
    if (json) {
        ojson j;
        j["outcome"] = outcome_name(o.kind);
        if (o.kind == Outcome::Kind::Proper) j["value"] = render_value(o.result);
        if (o.kind != Outcome::Kind::Proper) j["node"] = o.node;
        if (o.kind == Outcome::Kind::TypeError) j["reason"] = o.reason;
        j["steps"] = o.steps;
        std::cout << j.dump(1) << "\n";
    } else if (o.kind == Outcome::Kind::Proper) {
        std::cout << render_value(o.result) << "\n";
    } else {
        std::cout << o.str() << "\n";
    }
    return o.kind == Outcome::Kind::Proper ? 0 : 1;
}

int cmd_check(const Loaded& l, bool json) {
    const Analysis& a = l.analysis;
    if (json) {
        ojson j;
        j["obligations"] = obligations_json(a);
        std::cout << j.dump(1) << "\n";
    } else {
        for (auto& o : a.obligations) std::cout << o.str(a.prog) << "\n";
        std::cout << a.obligations.size() << " obligations\n";
    }
    return a.obligations.empty() ? 0 : 1;
}

int cmd_refine(const Loaded& l, bool json) {
    auto bad = check_monotone(l.original, l.analysis);
    if (json) {
        ojson j;
        j["typing"] = ojson::parse(dump_typing(l.analysis));
        j["monotone"] = bad.empty();
        j["monotonicity_violations"] = bad;
        std::cout << j.dump(1) << "\n";
    } else {
        std::cout << dump_typing(l.analysis);
        for (auto& b : bad) std::cerr << "not monotone: " << b << "\n";
        std::cerr << (bad.empty() ? "refinement is monotone" : "refinement is NOT monotone") << "\n";
    }
    return bad.empty() ? 0 : 1;
}

int cmd_check_proof(const Loaded& l, const std::string& proof_file, const std::string& typing_file, bool json) {
    const Analysis& a = l.analysis;
    Proof pf;
    try {
        pf = proof_from_json(a.prog, ojson::parse(read_file(proof_file)));
    } catch (UsageError&) {
        throw;
    } catch (std::exception& e) {
        throw UsageError(proof_file + ": " + e.what());
    }
    auto rep = check_proof(a.prog, pf);
    Analysis reference = a;
    if (!typing_file.empty()) {
        try {
            reference.ty = load_typing(a, read_file(typing_file));
        } catch (UsageError&) {
            throw;
        } catch (std::exception& e) {
            throw UsageError(typing_file + ": " + e.what());
        }
    }
    auto ex = extract_typing(a.prog, pf);
    auto diffs = compare_typing(reference, ex);
    if (json) {
        ojson j;
        j["valid"] = rep.ok();
        j["nodes"] = rep.nodes;
        ojson fs = ojson::array();
        for (auto& f : rep.failures) fs.push_back({{"where", f.where}, {"reason", f.reason}});
        j["failures"] = fs;
        j["typing_mismatches"] = diffs;
        std::cout << j.dump(1) << "\n";
    } else {
        std::cout << rep.str();
        for (auto& d : diffs) std::cout << "typing mismatch " << d << "\n";
        std::cout << "extracted typing " << (diffs.empty() ? "matches" : "differs from") << " the solver typing\n";
    }
    return rep.ok() && diffs.empty() ? 0 : 1;
}

int cmd_purity(const Loaded& l, bool json) {
    auto lines = purity_listing(l.analysis);
    if (json) {
        ojson out = ojson::array();
        for (auto& pl : lines) {
            ojson j;
            j["node"] = pl.node;
            j["unit"] = pl.unit;
            j["expr"] = pl.expr;
            j["pure"] = pl.type.has_value();
            if (pl.type) j["type"] = pl.type->str();
            if (!pl.psi.empty()) j["psi"] = pl.psi;
            out.push_back(j);
        }
        std::cout << out.dump(1) << "\n";
        return 0;
    }
    for (auto& pl : lines) {
        std::cout << pl.unit << "#" << pl.node << "  " << pl.expr << "  ";
        if (!pl.type)
            std::cout << "impure";
        else
            std::cout << "pure " << pl.type->str() << (pl.psi.empty() ? "" : "  Ψ = " + pl.psi);
        std::cout << "\n";
    }
    return 0;
}

int cmd_fuzz(uint64_t seed, int count, long long budget, bool json) {
    auto st = fuzz_soundness(seed, count, budget);
    int unsound = st.type_errors + st.violations;
    if (json) {
        ojson j;
        j["seed"] = seed;
        j["programs"] = st.programs;
        j["rejected"] = st.rejected;
        j["obligation_free"] = st.obligation_free;
        j["runs"] = st.runs;
        j["budget_exhausted"] = st.budget_exhausted;
        j["type_errors"] = st.type_errors;
        j["violations"] = st.violations;
        j["soundness_violations"] = unsound;
        j["failures"] = st.failures;
        std::cout << j.dump(1) << "\n";
    } else {
        std::cout << st.str() << "\n";
        for (auto& f : st.failures) std::cout << f << "\n";
        std::cout << unsound << " soundness violations\n";
    }
    return unsound == 0 && st.rejected == 0 ? 0 : 1;
}

std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<std::string> out;
    for (auto& in : inputs) {
        if (std::filesystem::is_directory(in)) {
            std::vector<std::string> found;
            for (auto& e : std::filesystem::directory_iterator(in))
                if (e.path().extension() == ".dyn") found.push_back(e.path().string());
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(in);
        }
    }
    return out;
}

int cmd_report(const std::vector<std::string>& inputs, int path_cap, bool json) {
    ojson all = ojson::array();
    bool failed = false;
    for (auto& f : expand_inputs(inputs)) {
        std::optional<std::string> ann;
        auto sidecar = std::filesystem::path(f).replace_extension(".ann");
        if (std::filesystem::exists(sidecar)) ann = read_file(sidecar.string());
        ojson r;
        try {
            r = program_report(std::filesystem::path(f).filename().string(), read_file(f), ann, path_cap);
        } catch (UsageError&) {
            throw;
        } catch (std::exception& e) {
            throw UsageError(f + ": " + e.what());
        }
        if (r["proof"]["status"] == "invalid" || !r["monotone"].get<bool>()) failed = true;
        all.push_back(r);
    }
    if (json) {
        std::cout << all.dump(1) << "\n";
    } else {
        for (auto& r : all) std::cout << render_report(r);
    }
    return failed ? 1 : 0;
}

}  // namespace

std::string render_value(Value v) {
    if (!v) return "null";
    if (auto n = decode_num(v)) return std::to_string(*n);
    if (auto b = decode_bool(v)) return *b ? "true" : "false";
    if (auto l = decode_list(v)) {
        std::string out = "[";
        for (size_t i = 0; i < l->size(); ++i) out += (i ? ", " : "") + render_value((*l)[i]);
        return out + "]";
    }
    return value_summary(v);
}

std::string digest(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ojson program_report(const std::string& name, const std::string& source, const std::optional<std::string>& annotations,
                     int path_cap) {
    InferOptions opts;
    opts.path_cap = path_cap;
    Analysis original = analyze(load_program(source), opts);
    Analysis a = original;
    std::vector<Annotation> anns;
    if (annotations) {
        anns = parse_annotations(original.prog, *annotations);
        a = refine(original.prog, anns, opts);
    }
    ojson r;
    r["program"] = name;
    r["digest"] = digest(source + (annotations ? "\n" + *annotations : ""));
    r["obligations_before"] = original.obligations.size();
    r["obligations"] = obligations_json(a);
    auto ctx = statement_context(a.prog);
    ojson locs = ojson::object();
    for (int id = 0; id < a.prog.node_count; ++id) {
        int u = a.prog.unit_of[id];
        if (!ctx[id] || (a.prog.units[u].cls >= 0 && a.prog.classes[a.prog.units[u].cls].prelude)) continue;
        locs[a.prog.unit_name(u) + "#" + std::to_string(id)] = node_summary(a, id).str();
    }
    r["types"] = locs;
    ojson log = ojson::array();
    for (auto& ann : anns) {
        ojson e;
        e["at"] = ann.unit_name + "#" + std::to_string(ann.node);
        e["assume"] = ann.text;
        int after = refined_node(a, ann.node);
        ojson subjects = ojson::object();
        for (auto& s : ann.assertion.subjects())
            subjects[s] = {{"before", type_at(original, ann.node, s)}, {"after", type_at(a, after, s)}};
        e["subjects"] = subjects;
        log.push_back(e);
    }
    r["refinements"] = log;
    r["monotone"] = anns.empty() || check_monotone(original, a).empty();
    r["proof"] = proof_verdict(a);
    return r;
}

std::string render_report(const ojson& r) {
    std::ostringstream o;
    o << "== " << r["program"].get<std::string>() << " [" << r["digest"].get<std::string>() << "]\n";
    o << "obligations: " << r["obligations"].size();
    if (!r["refinements"].empty()) o << " (" << r["obligations_before"].get<size_t>() << " before refinement)";
    o << "\n";
    for (auto& ob : r["obligations"]) {
        o << "  #" << ob["node"].get<int>() << " " << ob["unit"].get<std::string>() << " " << ob["kind"].get<std::string>();
        if (ob.contains("method")) o << " " << ob["method"].get<std::string>();
        o << ": " << ob["offending"].get<std::string>() << " not within " << ob["required"].get<std::string>() << "\n";
    }
    for (auto& e : r["refinements"]) {
        o << "refine at " << e["at"].get<std::string>() << ": " << e["assume"].get<std::string>() << "\n";
        for (auto& [s, v] : e["subjects"].items())
            o << "  " << s << ": " << v["before"].get<std::string>() << " -> " << v["after"].get<std::string>() << "\n";
    }
    if (!r["refinements"].empty()) o << "monotone: " << (r["monotone"].get<bool>() ? "yes" : "NO") << "\n";
    o << "types:\n";
    for (auto& [k, v] : r["types"].items()) o << "  " << k << ": " << v.get<std::string>() << "\n";
    auto& p = r["proof"];
    o << "proof: " << p["status"].get<std::string>();
    if (p.contains("reason")) o << " (" << p["reason"].get<std::string>() << ")";
    if (p.contains("nodes"))
        o << " (" << p["nodes"].get<int>() << " nodes, " << p["check_failures"].get<size_t>() << " failures, round trip "
          << (p["round_trip"].get<bool>() ? "ok" : "FAILED") << ", " << p["typing_mismatches"].get<size_t>()
          << " typing mismatches)";
    o << "\n";
    return o.str();
}

int cli_main(int argc, char** argv) {
    CLI::App app{"dyn: type inference, refinement and typing proofs for a small dynamic object language"};
    app.require_subcommand(1);

    std::string file, annotations, proof_file, typing_file;
    std::vector<std::string> inputs;
    long long budget = 1000000;
    int path_cap = 16, count = 500;
    uint64_t seed = 7;
    bool json = false, dump_ssa_flag = false, trace = false;

    auto add_common = [&](CLI::App* s, bool with_annotations) {
        s->add_option("file", file, "program file")->required();
        s->add_option("--paths-cap", path_cap, "maximum path slots per location")->check(CLI::Range(1, 1 << 16));
        if (with_annotations) s->add_option("--annotations", annotations, "annotation sidecar file");
        s->add_flag("--json", json, "machine-readable output");
    };

    auto* run_cmd = app.add_subcommand("run", "interpret a program");
    run_cmd->add_option("file", file, "program file")->required();
    run_cmd->add_option("--budget", budget, "evaluation step budget")->check(CLI::PositiveNumber);
    run_cmd->add_flag("--trace", trace, "trace evaluation steps to stderr");
    run_cmd->add_flag("--json", json, "machine-readable output");

    auto* infer_cmd = app.add_subcommand("infer", "print the inferred typing");
    add_common(infer_cmd, true);
    infer_cmd->add_flag("--dump-ssa", dump_ssa_flag, "print the SSA form before the typing");

    auto* check_cmd = app.add_subcommand("check", "list type-safety obligations");
    add_common(check_cmd, true);
    check_cmd->add_flag("--dump-ssa", dump_ssa_flag, "print the SSA form first");

    auto* refine_cmd = app.add_subcommand("refine", "apply annotations and verify monotonicity");
    add_common(refine_cmd, false);
    refine_cmd->add_option("--annotations", annotations, "annotation sidecar file")->required();

    auto* emit_cmd = app.add_subcommand("emit-proof", "print the typing proof");
    add_common(emit_cmd, true);

    auto* cp_cmd = app.add_subcommand("check-proof", "check a proof dump against a program");
    add_common(cp_cmd, true);
    cp_cmd->add_option("proof", proof_file, "proof dump")->required();
    cp_cmd->add_option("--typing", typing_file, "typing dump to compare the extracted typing against");

    auto* purity_cmd = app.add_subcommand("purity", "classify expressions and translate pure ones");
    add_common(purity_cmd, true);

    auto* fuzz_cmd = app.add_subcommand("fuzz", "soundness differential on random programs");
    fuzz_cmd->add_option("--seed", seed, "generator seed");
    fuzz_cmd->add_option("--count", count, "number of programs")->check(CLI::NonNegativeNumber);
    fuzz_cmd->add_option("--budget", budget, "evaluation step budget per run")->check(CLI::PositiveNumber);
    fuzz_cmd->add_flag("--json", json, "machine-readable output");

    auto* report_cmd = app.add_subcommand("report", "aggregate report over programs or directories");
    report_cmd->add_option("inputs", inputs, "program files or directories")->required();
    report_cmd->add_option("--paths-cap", path_cap, "maximum path slots per location")->check(CLI::Range(1, 1 << 16));
    report_cmd->add_flag("--json", json, "machine-readable output");

    fuzz_cmd->callback([&] {
        if (!fuzz_cmd->count("--budget")) budget = 100000;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    int status = 0;
    auto body = [&] {
        try {
            if (run_cmd->parsed()) {
                status = cmd_run(file, budget, trace, json);
            } else if (fuzz_cmd->parsed()) {
                status = cmd_fuzz(seed, count, budget, json);
            } else if (report_cmd->parsed()) {
                status = cmd_report(inputs, path_cap, json);
            } else {
                Loaded l = load(file, annotations, path_cap);
                if (dump_ssa_flag) std::cout << dump_ssa(l.analysis.prog, l.analysis.ssa);
                if (infer_cmd->parsed()) {
                    std::cout << dump_typing(l.analysis);
                } else if (check_cmd->parsed()) {
                    status = cmd_check(l, json);
                } else if (refine_cmd->parsed()) {
                    status = cmd_refine(l, json);
                } else if (emit_cmd->parsed()) {
                    std::cout << dump_proof(build_typing_proof(l.analysis));
                } else if (cp_cmd->parsed()) {
                    status = cmd_check_proof(l, proof_file, typing_file, json);
                } else if (purity_cmd->parsed()) {
                    status = cmd_purity(l, json);
                }
            }
        } catch (UsageError& e) {
            std::cerr << "error: " << e.what() << "\n";
            status = 2;
        } catch (std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            status = 2;
        }
    };
    with_stack(body);
    return status;
}

}  // namespace dyn
