#pragma once

#include <stdexcept>
#include <string>

namespace factcurve {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input outside the documented domain of an operation (bad index, bad fraction).
struct DomainError : Error {
    using Error::Error;
};

/// Aggregation requested over a corpus that carries no usable data.
struct EmptyCorpusError : Error {
    using Error::Error;
};

/// Score requested over an empty claim set.
struct EmptySetError : Error {
    using Error::Error;
};

/// A file or response could not be parsed. Carries a line number when known.
struct ParseError : Error {
    ParseError(const std::string& msg, long line_no = -1)
        : Error(line_no >= 0 ? msg + " (line " + std::to_string(line_no) + ")" : msg),
          line(line_no) {}
    long line = -1;
};

/// A claim references a generation or sentence that does not exist.
struct ReferentialIntegrityError : Error {
    using Error::Error;
};

/// Bad or missing configuration (flags, config file, environment).
struct ConfigError : Error {
    using Error::Error;
};

// -- gateway ----------------------------------------------------------------

struct GatewayError : Error {
    using Error::Error;
};

/// Replay-mode lookup found no cache entry. Message names the cache key.
struct CacheMissError : GatewayError {
    CacheMissError(const std::string& cache_key)
        : GatewayError("cache miss for key " + cache_key), key(cache_key) {}
    std::string key;
};

struct ProviderUnreachableError : GatewayError {
    using GatewayError::GatewayError;
};

struct RateLimitedError : GatewayError {
    using GatewayError::GatewayError;
};

struct MalformedPayloadError : GatewayError {
    using GatewayError::GatewayError;
};

// -- claim pipeline ----------------------------------------------------------

/// Model response did not contain a recognizable claim list.
struct UnparseableResponseError : Error {
    UnparseableResponseError(const std::string& msg, std::string raw_response)
        : Error(msg), raw(std::move(raw_response)) {}
    std::string raw;
};

/// Question-answer response lacked the '#' separator.
struct MissingSeparatorError : UnparseableResponseError {
    using UnparseableResponseError::UnparseableResponseError;
};

// -- judgment ----------------------------------------------------------------

/// Two judgment tables do not cover the same claim ids.
struct MismatchedClaimSetError : Error {
    using Error::Error;
};

// -- estimator ---------------------------------------------------------------

/// Self-Known + Self-Unknown too close to 2; the estimate is undefined.
struct DegenerateDenominatorError : Error {
    using Error::Error;
};

struct NonConvergenceError : Error {
    using Error::Error;
};

// -- rag ----------------------------------------------------------------------

struct EmptyIndexError : Error {
    using Error::Error;
};

} // namespace factcurve
