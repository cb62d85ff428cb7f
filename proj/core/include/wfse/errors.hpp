#ifndef WFSE_ERRORS_HPP
#define WFSE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wfse {

// Error categories map 1:1 onto CLI exit codes (see tools/wfse.cpp):
//   ConfigError -> 2, DataError -> 3, NumericalError -> 4.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace wfse

#endif
