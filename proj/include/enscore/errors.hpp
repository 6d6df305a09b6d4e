#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace enscore {

// Base of every error the toolkit raises. `kind()` is a stable machine-readable
// tag used in the CLI's error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("IoError", what) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error("FormatError", what) {}
};

class MissingArray : public Error {
public:
    explicit MissingArray(const std::string& name)
        : Error("MissingArray", "missing array \"" + name + "\""), name_(name) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class ShapeMismatch : public Error {
public:
    explicit ShapeMismatch(const std::string& what) : Error("ShapeMismatch", what) {}
};

class InvalidValue : public Error {
public:
    explicit InvalidValue(const std::string& what) : Error("InvalidValue", what) {}
};

class GeometryMismatch : public Error {
public:
    explicit GeometryMismatch(const std::string& what) : Error("GeometryMismatch", what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

class MissingPrediction : public Error {
public:
    explicit MissingPrediction(const std::string& cube_id)
        : Error("MissingPrediction", "no prediction archive for cube " + cube_id),
          cube_id_(cube_id) {}

    const std::string& cube_id() const noexcept { return cube_id_; }

private:
    std::string cube_id_;
};

class InfeasibleQuotas : public Error {
public:
    explicit InfeasibleQuotas(std::vector<std::string> unfilled)
        : Error("InfeasibleQuotas", describe(unfilled)), unfilled_(std::move(unfilled)) {}

    // Stratum labels ("<month>/<band>") whose quota could not be met.
    const std::vector<std::string>& unfilled() const noexcept { return unfilled_; }

private:
    static std::string describe(const std::vector<std::string>& unfilled) {
        std::string s = "quotas infeasible for strata:";
        for (const auto& u : unfilled) s += " " + u;
        return s;
    }

    std::vector<std::string> unfilled_;
};

}  // namespace enscore
