// Runs the nine acceptance criteria, prints one line per criterion and writes a verdict JSON.
// Usage: qpsde_acceptance [config.yaml] [verdict.json]

#include <cstdio>
#include <iostream>

#include "qpsde/acceptance.hpp"
#include "qpsde/config.hpp"

int main(int argc, char** argv) {
    using namespace qpsde;
    try {
        QPCoefficients::Spec spec = default_ou_spec();
        AcceptanceOptions opt{QPCoefficients(spec)};
        if (argc > 1) {
            const auto cfg = load_config(argv[1]);
            opt.coefficients = QPCoefficients(cfg.coefficients);
            opt.dt = cfg.run.dt;
            opt.seed = cfg.run.seed;
            opt.threads = cfg.run.threads;
            opt.audit_samples = cfg.run.audit_samples;
            opt.audit_box = cfg.run.audit_box;
        }
        std::vector<CriterionResult> results;
        for (const auto& criterion : acceptance_criteria()) {
            results.push_back(criterion(opt));
            std::cout << summary_line(results.back()) << std::endl;
        }
        const auto checks = flatten(results);
        const std::string path = argc > 2 ? argv[2] : "acceptance_verdict.json";
        write_json(path, verdict_json("acceptance", checks));
        const bool ok = all_passed(checks);
        std::cout << (ok ? "acceptance PASS" : "acceptance FAIL") << "  verdict: " << path << std::endl;
        return ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "acceptance: " << e.what() << '\n';
        return 2;
    }
}
