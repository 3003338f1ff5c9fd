#pragma once

#include <stdexcept>
#include <string>

namespace cfx {

// Error taxonomy maps onto CLI exit codes: config=2, dependency=3, runtime=4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DependencyError : std::runtime_error {
    explicit DependencyError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PersistenceError : std::runtime_error {
    explicit PersistenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cfx
