#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace compactode {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- expression language ---

/// Malformed input text; carries the byte offset of the offending token.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
    [[nodiscard]] std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class UnknownFunction : public SyntaxError {
public:
    UnknownFunction(const std::string& name, std::size_t offset)
        : SyntaxError("unknown function '" + name + "'", offset) {}
};

class ArityError : public SyntaxError {
public:
    ArityError(const std::string& name, std::size_t offset)
        : SyntaxError("function '" + name + "' takes exactly one argument", offset) {}
};

/// Evaluation outside a function's domain, or a non-finite intermediate.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what) {}
};

class UnboundVariable : public Error {
public:
    explicit UnboundVariable(const std::string& name)
        : Error("unbound variable '" + name + "'") {}
};

// --- problem definition ---

class NoLimit : public Error {
public:
    explicit NoLimit(const std::string& what) : Error(what) {}
};

/// Declared forcing limits disagree with the sampled estimate.
class Disagreement : public Error {
public:
    explicit Disagreement(const std::string& what) : Error(what) {}
};

// --- transforms ---

class NonPositiveRate : public Error {
public:
    explicit NonPositiveRate(const std::string& what) : Error(what) {}
};

class NotMonotone : public Error {
public:
    explicit NotMonotone(const std::string& what) : Error(what) {}
};

class DegenerateLimits : public Error {
public:
    explicit DegenerateLimits(const std::string& what) : Error(what) {}
};

/// Query at a point with no finite preimage (e.g. h at a compact end).
class OutOfDomain : public Error {
public:
    explicit OutOfDomain(const std::string& what) : Error(what) {}
};

// --- conditions / recommendation ---

class InsufficientDecayWindow : public Error {
public:
    explicit InsufficientDecayWindow(const std::string& what) : Error(what) {}
};

class Unrecommendable : public Error {
public:
    explicit Unrecommendable(const std::string& what) : Error(what) {}
};

// --- extended system ---

class ConditionsViolated : public Error {
public:
    explicit ConditionsViolated(const std::string& what) : Error(what) {}
};

// --- integration ---

class NonFiniteState : public Error {
public:
    explicit NonFiniteState(const std::string& what) : Error(what) {}
};

// --- invariant sets ---

/// The extra exponent collides with a base eigenvalue; the eigenvector
/// solve is singular and is reported rather than regularised.
class Resonance : public Error {
public:
    explicit Resonance(const std::string& what) : Error(what) {}
};

class SeedEscape : public Error {
public:
    explicit SeedEscape(const std::string& what) : Error(what) {}
};

class Ambiguous : public Error {
public:
    explicit Ambiguous(const std::string& what) : Error(what) {}
};

// --- rate problems ---

class NoSignChange : public Error {
public:
    explicit NoSignChange(const std::string& what) : Error(what) {}
};

class UndecidedProbe : public Error {
public:
    UndecidedProbe(const std::string& what, double rate)
        : Error(what + " (r = " + std::to_string(rate) + ")"), rate_(rate) {}
    [[nodiscard]] double rate() const { return rate_; }

private:
    double rate_;
};

// --- cli ---

class UnknownScenario : public Error {
public:
    explicit UnknownScenario(const std::string& name)
        : Error("unknown scenario '" + name + "'") {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

} // namespace compactode
