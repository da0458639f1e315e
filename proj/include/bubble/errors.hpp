#pragma once

#include <stdexcept>
#include <string>

namespace bubble {

// Error taxonomy maps onto CLI exit codes: UsageError -> 2, DataError -> 3,
// LookupError -> 4. Everything else is a plain runtime_error (exit 1).

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct LookupError : std::runtime_error {
    explicit LookupError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : UsageError {
    explicit ConfigError(const std::string& msg) : UsageError(msg) {}
};

struct AllRowsEmpty : DataError {
    AllRowsEmpty() : DataError("no row survived ingestion (all texts empty after normalization)") {}
};

struct DuplicatePosition : DataError {
    explicit DuplicatePosition(const std::string& where)
        : DataError("duplicate (source_doc, section_label, row_number): " + where) {}
};

struct EmptyCorpus : DataError {
    EmptyCorpus() : DataError("corpus contains no chunks") {}
};

struct FractionSumExceedsOne : ConfigError {
    explicit FractionSumExceedsOne(double sum)
        : ConfigError("section_fractions sum to " + std::to_string(sum) + ", must be <= 1") {}
};

struct SinkClosed : std::logic_error {
    SinkClosed() : std::logic_error("trace sink is closed") {}
};

struct UnknownVariant : UsageError {
    explicit UnknownVariant(const std::string& name) : UsageError("unknown variant: " + name) {}
};

struct EmptyQuerySet : DataError {
    explicit EmptyQuerySet(const std::string& path) : DataError("query set is empty: " + path) {}
};

}  // namespace bubble
