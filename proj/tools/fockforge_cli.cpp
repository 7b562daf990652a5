#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "fockforge/anomalysym.hpp"
#include "fockforge/frobenius.hpp"
#include "fockforge/json_io.hpp"
#include "fockforge/psiclass.hpp"
#include "fockforge/quantize.hpp"
#include "fockforge/stablegraphs.hpp"
#include "fockforge/suites.hpp"

using namespace fockforge;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kParse = 2, kMissingFile = 3, kOverflow = 4, kOther = 5 };

constexpr std::uint64_t kDefaultSeed = 20240601;

struct Common {
    std::uint64_t seed = kDefaultSeed;
    std::string out;
    std::string format;
};

struct Target {
    std::string frobenius;  // path to a Frobenius point
    std::string name;       // p1 | p2 | points
    std::vector<std::string> u;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_format, const std::vector<std::string>& formats) {
    c.format = default_format;
    cmd->add_option("--seed", c.seed, "Seed for randomized suites")->capture_default_str();
    cmd->add_option("--out", c.out, "Output file (default stdout)");
    cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember(formats))->capture_default_str();
}

void add_target(CLI::App* cmd, Target& t) {
    auto* f = cmd->add_option("--frobenius", t.frobenius, "Frobenius point JSON");
    auto* n = cmd->add_option("--target", t.name, "Built-in point: p1, p2 or points")->check(CLI::IsMember({"p1", "p2", "points"}));
    f->excludes(n);
    cmd->add_option("--u", t.u, "Canonical coordinates for --target points (rational strings)");
}

FrobeniusPoint load_target(const Target& t) {
    if (!t.frobenius.empty()) return FrobeniusPoint::load(t.frobenius);
    if (t.name == "p1") return p1_point();
    if (t.name == "p2") return p2_point();
    if (t.name == "points") {
        require(!t.u.empty(), ErrorKind::Parse, "--target points needs --u");
        std::vector<FieldElem> u;
        for (const auto& s : t.u) u.push_back(FieldElem::parse(s));
        return points_target(u);
    }
    fail(ErrorKind::Parse, "give --frobenius or --target");
}

void emit(const Common& c, const std::string& text) {
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::MissingFile, "cannot write " + c.out);
    f << text;
    require(static_cast<bool>(f), ErrorKind::MissingFile, "write failed for " + c.out);
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string table_text(const CorrelatorTable& t, const std::string& format) {
    return format == "csv" ? t.to_csv() : dump(t.to_json());
}

// Config values come first so explicit flags win under take-last.
std::vector<std::string> config_tokens(const std::string& path, std::string& command) {
    nlohmann::json j = read_json_file(path);
    require(j.is_object(), ErrorKind::Parse, path + ": config must be a JSON object");
    std::vector<std::string> out;
    for (const auto& [key, v] : j.items()) {
        if (key == "command") {
            require(v.is_string(), ErrorKind::Parse, path + ": command must be a string");
            command = v.get<std::string>();
            continue;
        }
        if (v.is_boolean()) {
            if (v.get<bool>()) out.push_back("--" + key);
            continue;
        }
        auto scalar = [&](const nlohmann::json& x) {
            require(x.is_string() || x.is_number(), ErrorKind::Parse, path + ": value of " + key + " must be a string or number");
            return x.is_string() ? x.get<std::string>() : x.dump();
        };
        if (v.is_array()) {
            for (const auto& x : v) {
                out.push_back("--" + key);
                out.push_back(scalar(x));
            }
        } else {
            out.push_back("--" + key);
            out.push_back(scalar(v));
        }
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Exact Fock-space pipelines over Frobenius data"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    std::string config;
    app.add_option("--config", config, "JSON run config: {\"command\": ..., \"<flag>\": value}");

    Common c_graphs, c_psi, c_rmatrix, c_prop, c_transform, c_ancestor, c_verify, c_anomaly;

    int g = 0, n = 0, max_edges = -1;
    auto* graphs = app.add_subcommand("graphs", "Stable graphs of type (g, n) with automorphism orders");
    graphs->add_option("--genus,-g", g)->required()->check(CLI::NonNegativeNumber);
    graphs->add_option("--points,-n", n)->required()->check(CLI::NonNegativeNumber);
    graphs->add_option("--max-edges", max_edges, "Edge cap; negative means none");
    add_common(graphs, c_graphs, "json", {"json"});

    int bound = 9;
    auto* psi = app.add_subcommand("psi", "Psi-class intersection numbers with level sum up to a bound");
    psi->add_option("--bound", bound)->check(CLI::NonNegativeNumber)->capture_default_str();
    add_common(psi, c_psi, "csv", {"csv", "json"});

    Target t_rmatrix;
    int r_order = 6;
    auto* rmatrix = app.add_subcommand("rmatrix", "Canonical frame and R-matrix of a semisimple point");
    add_target(rmatrix, t_rmatrix);
    rmatrix->add_option("--order", r_order)->check(CLI::PositiveNumber)->capture_default_str();
    add_common(rmatrix, c_rmatrix, "json", {"json"});

    Target t_prop;
    int cutoff = 3;
    bool crosscheck = false;
    auto* prop = app.add_subcommand("propagator", "Propagator of the R-matrix of a semisimple point");
    add_target(prop, t_prop);
    prop->add_option("--cutoff", cutoff)->check(CLI::NonNegativeNumber)->capture_default_str();
    prop->add_flag("--crosscheck", crosscheck, "Compare with the second formula; exit 1 on mismatch");
    add_common(prop, c_prop, "json", {"json"});

    std::string table_path, prop_path;
    auto* transform = app.add_subcommand("transform", "Feynman transform of a correlator table");
    transform->add_option("--table", table_path)->required();
    transform->add_option("--propagator", prop_path)->required();
    add_common(transform, c_transform, "json", {"json", "csv"});

    Target t_ancestor;
    int g_max = 1, legs = 0, extra = 1;
    auto* ancestor = app.add_subcommand("ancestor", "Abstract ancestor jets of a semisimple point");
    add_target(ancestor, t_ancestor);
    ancestor->add_option("--genus,-g", g_max, "Highest genus")->check(CLI::NonNegativeNumber)->capture_default_str();
    ancestor->add_option("--legs", legs, "Level-0 legs kept beyond the jet budget")->check(CLI::NonNegativeNumber)->capture_default_str();
    ancestor->add_option("--extra", extra, "Extra flag levels in the jet table")->check(CLI::NonNegativeNumber)->capture_default_str();
    add_common(ancestor, c_ancestor, "json", {"json", "csv"});

    std::vector<std::string> suites{"all"};
    auto* verify = app.add_subcommand("verify", "Run seeded property suites; exit 1 on any failure");
    std::vector<std::string> choices = suite_names();
    choices.push_back("all");
    verify->add_option("--suite", suites, "Suite names or all")->check(CLI::IsMember(choices));
    add_common(verify, c_verify, "json", {"json", "text"});

    int ag = 1, an = 2;
    bool curvature = false, hae = false, lambda_zero = false;
    auto* anomaly = app.add_subcommand("anomaly", "Certificate for the anomaly equation at (g, n)");
    anomaly->add_option("--genus,-g", ag)->check(CLI::NonNegativeNumber)->capture_default_str();
    anomaly->add_option("--points,-n", an)->check(CLI::NonNegativeNumber)->capture_default_str();
    anomaly->add_flag("--curvature", curvature, "Check the genus-one curvature condition instead");
    anomaly->add_flag("--hae", hae, "Check the holomorphic form instead");
    anomaly->add_flag("--lambda-zero", lambda_zero, "Set the torsion to zero");
    add_common(anomaly, c_anomaly, "text", {"text", "json"});

    // Splice config values in before the explicit flags.
    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        std::size_t span = 0;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            span = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            span = 1;
        }
        if (span == 0) continue;
        args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i + span));
        config = path;
        std::string command;
        std::vector<std::string> extra_args = config_tokens(path, command);
        auto sub = std::find_if(args.begin(), args.end(), [&](const std::string& a) { return app.get_subcommand_no_throw(a) != nullptr; });
        if (sub == args.end()) {
            require(!command.empty(), ErrorKind::Parse, path + ": no command given");
            args.insert(args.begin(), command);
            sub = args.begin();
        }
        args.insert(sub + 1, extra_args.begin(), extra_args.end());
        break;
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kParse;
    }

    if (graphs->parsed()) {
        emit(c_graphs, graphs_to_json(enumerate_stable_graphs(g, n, max_edges)) + "\n");
    } else if (psi->parsed()) {
        if (c_psi.format == "csv") {
            emit(c_psi, intersection_table_csv(bound));
        } else {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& w : intersection_table(bound)) rows.push_back({{"genus", w.genus}, {"levels", w.exps}, {"value", w.value.get_str()}});
            emit(c_psi, dump(rows));
        }
    } else if (rmatrix->parsed()) {
        FrobeniusPoint p = load_target(t_rmatrix);
        SemisimpleData s = canonical_data(p);
        MatSeries r = solve_R(s.u, MatSeries::constant(normalized_v(p, s), 0), r_order);
        nlohmann::json u = nlohmann::json::array(), delta = nlohmann::json::array();
        for (const auto& x : s.u) u.push_back(to_json(x));
        for (const auto& x : s.delta) delta.push_back(to_json(x));
        emit(c_rmatrix, dump({{"u", u}, {"delta", delta}, {"psi", to_json(s.psi)}, {"R", to_json(r)},
                              {"unitary", is_unitary(r)}, {"ode", check_r_ode(s.u, MatSeries::constant(normalized_v(p, s), 0), r)}}));
    } else if (prop->parsed()) {
        FrobeniusPoint p = load_target(t_prop);
        SemisimpleData s = canonical_data(p);
        MatSeries r = solve_R(s.u, MatSeries::constant(normalized_v(p, s), 0), 2 * cutoff + 1);
        // Propagator in the canonical frame, where the metric is the identity.
        Propagator d = givental_propagator(r, Matrix::identity(p.dim), cutoff);
        nlohmann::json out = d.to_json();
        if (crosscheck) {
            bool same = d == propagator_crosscheck(r, Matrix::identity(p.dim), cutoff);
            out["crosscheck"] = same;
            emit(c_prop, dump(out));
            return same ? kOk : kVerifyFailed;
        }
        emit(c_prop, dump(out));
    } else if (transform->parsed()) {
        CorrelatorTable t = CorrelatorTable::from_json(read_json_file(table_path));
        Propagator d = Propagator::from_json(read_json_file(prop_path));
        emit(c_transform, table_text(feynman_transform(t, d), c_transform.format));
    } else if (ancestor->parsed()) {
        FrobeniusPoint p = load_target(t_ancestor);
        emit(c_ancestor, table_text(jets_of(abstract_ancestor(p, g_max, legs), extra), c_ancestor.format));
    } else if (verify->parsed()) {
        std::vector<std::string> names;
        for (const auto& s : suites)
            if (s == "all") names.insert(names.end(), suite_names().begin(), suite_names().end());
            else names.push_back(s);
        bool ok = true;
        nlohmann::json reports = nlohmann::json::array();
        std::ostringstream text;
        for (const auto& name : names) {
            SuiteReport r = run_suite(name, c_verify.seed);
            ok = ok && r.passed();
            reports.push_back(r.to_json());
            text << (r.passed() ? "PASS " : "FAIL ") << r.name << " (" << r.cases << " cases, seed " << r.seed << ")\n";
            for (const auto& f : r.failures) text << "  " << f << "\n";
        }
        emit(c_verify, c_verify.format == "json" ? dump({{"passed", ok}, {"suites", reports}}) : text.str());
        return ok ? kOk : kVerifyFailed;
    } else if (anomaly->parsed()) {
        AnomalyOptions o;
        o.lambda_zero = lambda_zero;
        Certificate cert = curvature ? verify_curvature_condition(o) : hae ? verify_hae(ag, an, o) : verify_anomaly(ag, an, o);
        if (c_anomaly.format == "json")
            emit(c_anomaly, dump({{"identity", cert.identity}, {"holds", cert.holds}, {"lhs", cert.lhs.str()},
                                  {"rhs", cert.rhs.str()}, {"residual", cert.residual.str()}}));
        else
            emit(c_anomaly, cert.text());
        return cert.holds ? kOk : kVerifyFailed;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "fockforge: " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::Parse: return kParse;
            case ErrorKind::MissingFile: return kMissingFile;
            case ErrorKind::Overflow: return kOverflow;
            default: return kOther;
        }
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "fockforge: " << e.what() << "\n";
        return kParse;
    } catch (const std::exception& e) {
        std::cerr << "fockforge: " << e.what() << "\n";
        return kOther;
    }
}
