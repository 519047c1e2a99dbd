#ifndef REPLAB_CORE_ERRORS_HPP
#define REPLAB_CORE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace replab {

// Error taxonomy shared by the library, the C API and the CLI exit codes:
// 2 = invalid input, 3 = degenerate input, 4 = numerical failure.
class Error : public std::runtime_error {
public:
    Error(int code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

class InvalidInputError : public Error {
public:
    explicit InvalidInputError(const std::string& msg) : Error(2, msg) {}
};

class DegenerateInputError : public Error {
public:
    explicit DegenerateInputError(const std::string& msg) : Error(3, msg) {}
};

class NumericalFailureError : public Error {
public:
    explicit NumericalFailureError(const std::string& msg, std::size_t iterations = 0)
        : Error(4, msg), iterations_(iterations) {}
    std::size_t iterations() const { return iterations_; }

private:
    std::size_t iterations_;
};

}  // namespace replab

#endif
