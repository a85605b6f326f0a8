#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace topoflock {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Density touched zero (or the configured threshold) somewhere: the model is
// non-vacuous, so every diagnostic downstream would be meaningless.
class VacuumError : public std::runtime_error {
public:
    explicit VacuumError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown: NaN/Inf in a field, dt underflow, quadrature blow-up.
class InstabilityError : public std::runtime_error {
public:
    explicit InstabilityError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace topoflock
