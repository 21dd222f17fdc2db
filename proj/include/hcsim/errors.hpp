#pragma once

#include <stdexcept>
#include <string>

namespace hcsim {

// Bad input to a numeric routine (NaN/Inf state, invalid plant parameters).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unknown computing-element address.
struct AddressError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation not valid in the current machine mode / clock mode.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed frame, wrong arity, unexpected response.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Transport-level failure (connect, read, EOF).
struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Brain file problems: version mismatch, truncation, corruption.
struct BrainIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace hcsim
