#pragma once

#include <stdexcept>
#include <string>

namespace rag {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input data: bad UTF-8, bad JSON, bad config syntax.
struct ParseError : Error {
    using Error::Error;
};

// Inputs that parse but violate a documented invariant or precondition.
struct ValidationError : Error {
    using Error::Error;
};

// HTTP transport failure. `status` is 0 when no response was received.
struct TransportError : Error {
    TransportError(const std::string& what, int status_code, bool can_retry)
        : Error(what), status(status_code), retryable(can_retry) {}
    int status = 0;
    bool retryable = false;
};

// A remote endpoint answered, but not in the expected shape.
struct ProtocolError : Error {
    using Error::Error;
};

// Chunking failed, typically because an embedding call failed mid-document.
struct ChunkingError : Error {
    using Error::Error;
};

// A persisted file failed its integrity checks.
struct CorruptionError : Error {
    using Error::Error;
};

// Stored artifacts disagree with each other, e.g. a chunk span that falls
// outside its document.
struct IntegrityError : Error {
    using Error::Error;
};

// No retrievable context for a query; the caller decides the fallback.
struct UngroundableError : Error {
    using Error::Error;
};

}  // namespace rag
