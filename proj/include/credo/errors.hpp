#pragma once

#include <stdexcept>
#include <string>

namespace credo {

// Error taxonomy shared by the C++ core and the C API (each subclass maps
// onto one CREDO_E_* code in credo.h).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input data: unreadable file, ragged row, unparseable field.
class IngestError : public Error {
public:
    using Error::Error;
};

// Structural mismatch: duplicate/missing columns, wrong matrix shape.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Invalid configuration values or infeasible option combinations.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Label values outside the allowed domain.
class LabelError : public Error {
public:
    using Error::Error;
};

// Operation applied to a LabelVector with the wrong scheme.
class SchemeError : public Error {
public:
    using Error::Error;
};

// Degenerate statistical input (too few rows, undefined statistic).
class StatsError : public Error {
public:
    using Error::Error;
};

// Oversampling cannot proceed (single class, too few minority rows).
class ResampleError : public Error {
public:
    using Error::Error;
};

// Model training failed (empty input, inconsistent shapes).
class FitError : public Error {
public:
    using Error::Error;
};

// Bad arguments to an evaluation routine.
class InputError : public Error {
public:
    using Error::Error;
};

// A pipeline stage aborted; message names the stage.
class PipelineError : public Error {
public:
    using Error::Error;
};

// Filesystem failure while writing artifacts.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace credo
