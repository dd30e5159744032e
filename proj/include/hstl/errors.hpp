#pragma once

#include <stdexcept>
#include <string>

namespace hstl {

// Error taxonomy. The CLI maps these onto process exit codes:
//   config/validation/split/label -> 2, divergence/numeric -> 3,
//   io/format -> 4, surgery -> 5, dimension -> 6.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& m) : std::runtime_error(m) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& m) : std::runtime_error(m) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& m) : std::runtime_error(m) {}
};

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& m) : std::runtime_error(m) {}
};

struct LabelError : std::runtime_error {
    explicit LabelError(const std::string& m) : std::runtime_error(m) {}
};

struct SplitError : std::runtime_error {
    explicit SplitError(const std::string& m) : std::runtime_error(m) {}
};

struct BatchError : std::runtime_error {
    explicit BatchError(const std::string& m) : std::runtime_error(m) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& m) : std::runtime_error(m) {}
};

struct SurgeryError : std::runtime_error {
    explicit SurgeryError(const std::string& m) : std::runtime_error(m) {}
};

struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& m) : std::runtime_error(m) {}
};

struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace hstl
