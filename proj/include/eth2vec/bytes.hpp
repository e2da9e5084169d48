// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eth2vec
{
using bytes = std::vector<uint8_t>;
using bytes_view = std::span<const uint8_t>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Raised for malformed hex input (odd digit count or non-hex character).
class HexError : public Error
{
public:
    using Error::Error;
};

/// Parses a hex string. An optional "0x"/"0X" prefix is accepted and all
/// ASCII whitespace is ignored.
bytes from_hex(std::string_view hex);

/// Lowercase hex without prefix.
std::string to_hex(bytes_view data);

/// Lowercase hex with "0x" prefix.
inline std::string to_hex_prefixed(bytes_view data)
{
    return "0x" + to_hex(data);
}
}  // namespace eth2vec
