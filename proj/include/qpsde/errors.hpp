#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpsde {

/// Non-finite or out-of-range arguments.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A trajectory left the finite doubles. Carries the first offending grid index.
class ExplosionError : public std::runtime_error {
public:
    ExplosionError(std::int64_t index, const std::string& what)
        : std::runtime_error(what + " (first non-finite state at grid index " + std::to_string(index) + ")"),
          index_(index) {}

    std::int64_t index() const noexcept { return index_; }

private:
    std::int64_t index_;
};

/// Quadrature, linear solve or conservation failure.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Monte-Carlo estimate where some pull-backs failed to converge.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(std::vector<std::uint64_t> seeds, const std::string& what)
        : std::runtime_error(what), failed_seeds_(std::move(seeds)) {}

    const std::vector<std::uint64_t>& failed_seeds() const noexcept { return failed_seeds_; }

private:
    std::vector<std::uint64_t> failed_seeds_;
};

/// Configuration document problem; `path` is the dotted key, `line` is 1-based (0 if unknown).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, int line, const std::string& what)
        : std::runtime_error(format(path, line, what)), path_(std::move(path)), line_(line) {}

    const std::string& path() const noexcept { return path_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& path, int line, const std::string& what) {
        std::string out = "config error at '" + path + "'";
        if (line > 0) out += " (line " + std::to_string(line) + ")";
        return out + ": " + what;
    }

    std::string path_;
    int line_;
};

}  // namespace qpsde
