#pragma once

#include <string>
#include <vector>

#include "topoflock/nonlocal.hpp"

namespace topoflock {

struct CheckResult {
    std::string name;
    bool pass = false;
    double metric = 0.0;    // measured value
    double threshold = 0.0; // pass iff metric <= threshold (or detail explains)
    std::string detail;
};

// Deterministic operator-identity suite: commutator decomposition, geometry
// divergence theorem, t_direct vs t_decomposed (plus a sign-flip mutation),
// coercivity envelope, maximum-principle signs, metric symbol oracle,
// symmetry and pairing identities.
std::vector<CheckResult> run_verification();

// stable fingerprint of the suite (FNV-1a over the check names), embedded in
// run summaries so a result can be tied to the suite that vetted the build
std::string verification_suite_version();

} // namespace topoflock
