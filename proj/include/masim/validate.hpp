#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace masim::harness {

struct CheckResult {
    std::string name;
    bool ok = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    double seconds = 0.0;

    bool all_ok() const {
        for (const auto& c : checks)
            if (!c.ok) return false;
        return true;
    }
};

// Cross-check oracle suite: Kronecker/brute-force recovery equivalence,
// codec flip injection, quadrature normalizations, moment identities,
// sampling checks of the analysis approximations. `fast` trims trial counts
// for interactive runs; acceptance uses the full suite.
ValidationReport validate(bool fast = false, std::ostream* live = nullptr,
                          uint64_t seed = 20240811);

}  // namespace masim::harness
