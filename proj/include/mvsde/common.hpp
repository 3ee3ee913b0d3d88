#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace mvsde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Usage / schema problems. The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values, overflow, failed linear solves. Exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Diffusion (or its Gram matrix) fell below the configured eigenvalue floor.
struct DegeneracyError : NumericError {
    explicit DegeneracyError(const std::string& msg) : NumericError(msg) {}
};

// Experiment-level invariant failed. Exit code 4.
struct AssertionFailure : std::runtime_error {
    explicit AssertionFailure(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

} // namespace mvsde
