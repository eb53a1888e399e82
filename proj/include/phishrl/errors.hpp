#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phishrl {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedUrl : public Error {
public:
    using Error::Error;
};

class EmptyCorpus : public Error {
public:
    using Error::Error;
};

class SchemaMismatch : public Error {
public:
    using Error::Error;
};

// A data row that cannot be converted (bad label, unparseable number).
class MalformedRow : public Error {
public:
    MalformedRow(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class DegenerateSplit : public Error {
public:
    using Error::Error;
};

class DegenerateFold : public Error {
public:
    using Error::Error;
};

class NothingToObfuscate : public Error {
public:
    using Error::Error;
};

class InvalidAction : public Error {
public:
    using Error::Error;
};

class StepBeforeReset : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(std::size_t batch_index, std::size_t step)
        : Error("non-finite loss at step " + std::to_string(step) + " (batch index " +
                std::to_string(batch_index) + ")"),
          batch_index_(batch_index),
          step_(step) {}
    std::size_t batch_index() const noexcept { return batch_index_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t batch_index_;
    std::size_t step_;
};

}  // namespace phishrl
