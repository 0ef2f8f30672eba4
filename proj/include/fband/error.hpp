#pragma once

#include <stdexcept>
#include <string>

namespace fband {

// Inputs whose shapes (component count, grid lengths) disagree.
class StructuralError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Values outside an operation's documented domain.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A caller broke a precondition that the types cannot express
// (e.g. asking for a prediction without enough lags).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::string path, long line, const std::string& what)
        : std::runtime_error(format(path, line, what)), path_(std::move(path)), line_(line), message_(what) {}

    const std::string& path() const noexcept { return path_; }
    long line() const noexcept { return line_; }   // 0 when unknown
    const std::string& message() const noexcept { return message_; }

private:
    static std::string format(const std::string& path, long line, const std::string& what) {
        std::string out = what;
        if (!path.empty()) out += " at " + path;
        if (line > 0) out += " (line " + std::to_string(line) + ")";
        return out;
    }

    std::string path_;
    long line_;
    std::string message_;
};

}  // namespace fband
