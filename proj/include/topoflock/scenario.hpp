#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "topoflock/diagnostics.hpp"

namespace topoflock {

// Tiny deterministic generator (splitmix64) so seeded runs reproduce across
// platforms and standard library versions.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}
    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() { return double(next() >> 11) * 0x1.0p-53; } // [0,1)
    double symmetric() { return 2.0 * uniform() - 1.0; }          // [-1,1)

private:
    uint64_t state_;
};

// zero-mean random trigonometric polynomial with |k_axis| <= max_mode
ScalarField random_band_limited(const TorusGrid& g, int max_mode, SplitMix64& rng);

struct ScenarioConfig {
    int dim = 1;
    int n = 256;
    KernelParams kernel;
    std::string scenario = "general_1d"; // general_1d | shear_2d | nearly_aligned | metric_check
    // preset parameters
    double amp_rho = 0.5;
    double amp_u = 0.5;
    double u_mean = 0.3;
    double epsilon = 1e-3; // nearly_aligned velocity scale
    int max_mode = 2;
    uint64_t seed = 42;
    // solver + diagnostics
    SolverConfig solver;
    MonitorOptions monitor;
    int vol_refine = 16;
    int bdry_refine = 16;
    std::string output = "run";

    void validate() const;
};

ScenarioConfig parse_config_file(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text, const std::string& origin = "<text>");

// initial data for the configured scenario; every preset keeps rho >= 0.1
State build_initial_state(const ScenarioConfig& cfg);

// the nearly-aligned preset on its own (r_scale = density variation)
State preset_nearly_aligned(const TorusGrid& g, double r_scale, double epsilon, int max_mode,
                            uint64_t seed);

std::string preset_listing();

// deterministic key = value report; never includes wall-clock data
void summary_emit(const std::map<std::string, std::string>& kv, const std::string& path);

} // namespace topoflock
