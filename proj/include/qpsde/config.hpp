#pragma once

// Experiment configuration: a YAML document with a `coefficients` block, a `run` block,
// optional per-task blocks, the task selector and the output directory. See docs/config.md.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "qpsde/coefficients.hpp"
#include "qpsde/errors.hpp"
#include "qpsde/pullback.hpp"

namespace qpsde {

inline const std::vector<std::string>& task_names() {
    static const std::vector<std::string> names{"validate", "simulate",      "pullback", "measure",
                                                "lift",     "fokker-planck", "oracle",   "acceptance"};
    return names;
}

struct RunConfig {
    double dt = 1e-3;
    std::uint64_t seed = 1;
    std::size_t n_samples = 1000;
    unsigned threads = 0;
    double pullback_tol = 1e-6;
    int max_levels = 40;
    std::size_t audit_samples = 100000;
    double audit_box = 10.0;
    std::uint64_t audit_seed = 0;
};

struct ExperimentConfig {
    QPCoefficients::Spec coefficients;
    RunConfig run;
    std::string task = "validate";
    std::string output_dir = "out";
    YAML::Node document;  // effective document after overrides
    std::string source;

    PullbackConfig pullback() const {
        PullbackConfig p;
        p.tol = run.pullback_tol;
        p.max_levels = run.max_levels;
        p.dt = run.dt;
        p.threads = run.threads;
        p.audit_samples = run.audit_samples;
        p.audit_box = run.audit_box;
        p.audit_seed = run.audit_seed;
        return p;
    }

    /// Task block `name`, or an empty map.
    YAML::Node task_block(const std::string& name) const {
        const YAML::Node n = document[name];
        return n ? n : YAML::Node(YAML::NodeType::Map);
    }
};

namespace config_detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

template <class T>
T as(const YAML::Node& n, const std::string& path) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(path, line_of(n), "value has the wrong type");
    }
}

template <class T>
T get_or(const YAML::Node& parent, const std::string& key, const std::string& path, T fallback) {
    if (!parent || !parent.IsMap()) return fallback;
    const YAML::Node n = parent[key];
    if (!n) return fallback;
    return as<T>(n, path + "." + key);
}

inline std::vector<double> square_matrix(const YAML::Node& n, const std::string& path, std::size_t d) {
    if (!n.IsSequence() || n.size() != d) throw ConfigError(path, line_of(n), "expected " + std::to_string(d) + " rows");
    std::vector<double> out;
    for (std::size_t i = 0; i < d; ++i) {
        const YAML::Node row = n[i];
        const std::string rp = path + "[" + std::to_string(i) + "]";
        if (!row.IsSequence() || row.size() != d)
            throw ConfigError(rp, line_of(row), "expected " + std::to_string(d) + " columns");
        for (std::size_t j = 0; j < d; ++j) out.push_back(as<double>(row[j], rp + "[" + std::to_string(j) + "]"));
    }
    return out;
}

inline std::vector<TrigTerm> trig_list(const YAML::Node& n, const std::string& path) {
    std::vector<TrigTerm> out;
    if (!n) return out;
    if (!n.IsSequence()) throw ConfigError(path, line_of(n), "expected a list of trig terms");
    for (std::size_t i = 0; i < n.size(); ++i) {
        const YAML::Node t = n[i];
        const std::string tp = path + "[" + std::to_string(i) + "]";
        if (!t.IsMap()) throw ConfigError(tp, line_of(t), "trig term must be a map");
        for (const auto& kv : t) {
            const auto key = kv.first.as<std::string>();
            if (key != "amplitude" && key != "n1" && key != "n2" && key != "phase" && key != "component")
                throw ConfigError(tp + "." + key, line_of(kv.first), "unknown trig term field");
        }
        if (!t["amplitude"]) throw ConfigError(tp, line_of(t), "trig term needs an amplitude");
        TrigTerm term;
        term.amplitude = as<double>(t["amplitude"], tp + ".amplitude");
        term.n1 = get_or<int>(t, "n1", tp, 0);
        term.n2 = get_or<int>(t, "n2", tp, 0);
        term.phase = get_or<double>(t, "phase", tp, 0.0);
        term.component = get_or<std::size_t>(t, "component", tp, 0);
        out.push_back(term);
    }
    return out;
}

inline QPCoefficients::Spec parse_coefficients(const YAML::Node& n) {
    if (!n || !n.IsMap()) throw ConfigError("coefficients", line_of(n), "missing coefficients block");
    QPCoefficients::Spec s;
    s.dim = get_or<std::size_t>(n, "dim", "coefficients", 1);
    if (s.dim == 0) throw ConfigError("coefficients.dim", line_of(n["dim"]), "must be positive");
    s.tau1 = get_or<double>(n, "tau1", "coefficients", 1.0);
    s.tau2 = get_or<double>(n, "tau2", "coefficients", std::numbers::sqrt2);
    if (!(s.tau1 > 0.0)) throw ConfigError("coefficients.tau1", line_of(n["tau1"]), "must be positive");
    if (!(s.tau2 > 0.0)) throw ConfigError("coefficients.tau2", line_of(n["tau2"]), "must be positive");
    if (!n["A"]) throw ConfigError("coefficients.A", line_of(n), "missing drift matrix");
    s.A = square_matrix(n["A"], "coefficients.A", s.dim);
    if (!n["Sigma0"]) throw ConfigError("coefficients.Sigma0", line_of(n), "missing diffusion matrix");
    s.Sigma0 = square_matrix(n["Sigma0"], "coefficients.Sigma0", s.dim);
    if (n["Sigma1"]) s.Sigma1 = square_matrix(n["Sigma1"], "coefficients.Sigma1", s.dim);
    s.F0 = trig_list(n["F0"], "coefficients.F0");
    s.F1 = trig_list(n["F1"], "coefficients.F1");
    s.G = trig_list(n["G"], "coefficients.G");
    for (std::size_t i = 0; i < s.F0.size(); ++i)
        if (s.F0[i].component >= s.dim)
            throw ConfigError("coefficients.F0[" + std::to_string(i) + "].component", line_of(n["F0"][i]),
                              "component out of range");
    const auto h = get_or<std::string>(n, "nonlinearity", "coefficients", "none");
    if (h == "tanh") {
        s.nonlinearity = Nonlinearity::tanh;
    } else if (h == "none") {
        s.nonlinearity = Nonlinearity::none;
    } else {
        throw ConfigError("coefficients.nonlinearity", line_of(n["nonlinearity"]), "must be 'tanh' or 'none'");
    }
    const YAML::Node dc = n["declared"];
    const std::string dp = "coefficients.declared";
    s.declared.alpha = get_or<double>(dc, "alpha", dp, 0.0);
    s.declared.beta = get_or<double>(dc, "beta", dp, 0.0);
    s.declared.M = get_or<double>(dc, "M", dp, 0.0);
    s.declared.gamma = get_or<double>(dc, "gamma", dp, 1.0);
    s.declared.kappa = get_or<double>(dc, "kappa", dp, 1.0);
    s.declared.ell = get_or<double>(dc, "ell", dp, 0.0);
    s.rationally_independent = get_or<bool>(n, "rationally_independent", "coefficients", true);
    return s;
}

inline RunConfig parse_run(const YAML::Node& n) {
    RunConfig r;
    if (!n) return r;
    if (!n.IsMap()) throw ConfigError("run", line_of(n), "run must be a map");
    r.dt = get_or<double>(n, "dt", "run", r.dt);
    if (!(r.dt > 0.0)) throw ConfigError("run.dt", line_of(n["dt"]), "must be positive");
    r.seed = get_or<std::uint64_t>(n, "seed", "run", r.seed);
    r.n_samples = get_or<std::size_t>(n, "n_samples", "run", r.n_samples);
    if (r.n_samples == 0) throw ConfigError("run.n_samples", line_of(n["n_samples"]), "must be positive");
    r.threads = get_or<unsigned>(n, "threads", "run", r.threads);
    const YAML::Node tol = n["tolerances"];
    r.pullback_tol = get_or<double>(tol, "pullback", "run.tolerances", r.pullback_tol);
    if (!(r.pullback_tol > 0.0)) throw ConfigError("run.tolerances.pullback", line_of(tol["pullback"]), "must be positive");
    r.max_levels = get_or<int>(n, "max_levels", "run", r.max_levels);
    if (r.max_levels < 2) throw ConfigError("run.max_levels", line_of(n["max_levels"]), "must be at least 2");
    const YAML::Node audit = n["audit"];
    r.audit_samples = get_or<std::size_t>(audit, "samples", "run.audit", r.audit_samples);
    r.audit_box = get_or<double>(audit, "box_radius", "run.audit", r.audit_box);
    r.audit_seed = get_or<std::uint64_t>(audit, "seed", "run.audit", r.audit_seed);
    return r;
}

inline void check_referenced_files(const YAML::Node& n, const std::string& path, const std::filesystem::path& base) {
    if (n.IsMap()) {
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            const std::string p = path.empty() ? key : path + "." + key;
            if (key.size() > 5 && key.ends_with("_file") && kv.second.IsScalar()) {
                std::filesystem::path f = kv.second.as<std::string>();
                if (f.is_relative()) f = base / f;
                if (!std::filesystem::exists(f)) throw ConfigError(p, line_of(kv.second), "file not found: " + f.string());
            }
            check_referenced_files(kv.second, p, base);
        }
    } else if (n.IsSequence()) {
        for (std::size_t i = 0; i < n.size(); ++i) check_referenced_files(n[i], path + "[" + std::to_string(i) + "]", base);
    }
}

inline void set_path(YAML::Node node, const std::vector<std::string>& keys, std::size_t i, const YAML::Node& value) {
    if (i + 1 == keys.size()) {
        node[keys[i]] = value;
        return;
    }
    if (!node[keys[i]] || !node[keys[i]].IsMap()) node[keys[i]] = YAML::Node(YAML::NodeType::Map);
    set_path(node[keys[i]], keys, i + 1, value);
}

}  // namespace config_detail

/// Applies `key.sub=value`; the value is read as YAML so lists and maps are allowed.
inline void apply_override(YAML::Node& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, 0, "override must look like key.path=value");
    const std::string path = assignment.substr(0, eq);
    YAML::Node value;
    try {
        value = YAML::Load(assignment.substr(eq + 1));
    } catch (const YAML::Exception& e) {
        throw ConfigError(path, 0, std::string("override value is not valid YAML: ") + e.what());
    }
    std::vector<std::string> keys;
    std::stringstream ss(path);
    for (std::string k; std::getline(ss, k, '.');) {
        if (k.empty()) throw ConfigError(path, 0, "empty key in override path");
        keys.push_back(k);
    }
    config_detail::set_path(doc, keys, 0, value);
}

inline ExperimentConfig parse_config(YAML::Node doc, const std::string& source = "<memory>",
                                     const std::filesystem::path& base = ".") {
    if (!doc.IsMap()) throw ConfigError("<root>", config_detail::line_of(doc), "document must be a map");
    ExperimentConfig cfg;
    cfg.source = source;
    cfg.coefficients = config_detail::parse_coefficients(doc["coefficients"]);
    cfg.run = config_detail::parse_run(doc["run"]);
    cfg.task = config_detail::get_or<std::string>(doc, "task", "", cfg.task);
    bool known = false;
    for (const auto& t : task_names()) known = known || t == cfg.task;
    if (!known) throw ConfigError("task", config_detail::line_of(doc["task"]), "unknown task '" + cfg.task + "'");
    cfg.output_dir = config_detail::get_or<std::string>(doc, "output_dir", "", cfg.output_dir);
    config_detail::check_referenced_files(doc, "", base);
    try {
        QPCoefficients check(cfg.coefficients);
    } catch (const DomainError& e) {
        throw ConfigError("coefficients", config_detail::line_of(doc["coefficients"]), e.what());
    }
    cfg.document = doc;
    return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {}) {
    YAML::Node doc;
    try {
        doc = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("<document>", e.mark.line + 1, e.msg);
    }
    for (const auto& o : overrides) apply_override(doc, o);
    return parse_config(doc);
}

inline ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    if (!std::filesystem::exists(path)) throw ConfigError(path, 0, "config file not found");
    YAML::Node doc;
    try {
        doc = YAML::LoadFile(path);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(path, e.mark.line + 1, e.msg);
    }
    for (const auto& o : overrides) apply_override(doc, o);
    return parse_config(doc, path, std::filesystem::path(path).parent_path());
}

inline std::string emit_yaml(const YAML::Node& doc) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << doc;
    return out.c_str();
}

/// Default experiment: d = 1, tau = (1, sqrt 2), A = 1, S = sin(2 pi t) + 0.7 sin(2 pi t / sqrt 2), sigma0 = 0.5.
inline QPCoefficients::Spec default_ou_spec() {
    QPCoefficients::Spec s;
    s.dim = 1;
    s.tau1 = 1.0;
    s.tau2 = std::numbers::sqrt2;
    s.A = {1.0};
    s.F0 = {{1.0, 1, 0, 0.0, 0}, {0.7, 0, 1, 0.0, 0}};
    s.Sigma0 = {0.5};
    s.nonlinearity = Nonlinearity::none;
    s.declared = {1.0, 0.0, 2.2, 1.0, 1.0, 1.0};
    return s;
}

}  // namespace qpsde
