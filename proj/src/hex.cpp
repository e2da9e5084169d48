// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/bytes.hpp>

#include <cctype>

namespace eth2vec
{
namespace
{
int hex_digit(char c) noexcept
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}
}  // namespace

bytes from_hex(std::string_view hex)
{
    std::string digits;
    digits.reserve(hex.size());
    for (const char c : hex)
    {
        if (!std::isspace(static_cast<unsigned char>(c)))
            digits.push_back(c);
    }

    std::string_view s{digits};
    if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X'))
        s.remove_prefix(2);

    if (s.size() % 2 != 0)
        throw HexError{"odd number of hex digits (" + std::to_string(s.size()) + ")"};

    bytes out;
    out.reserve(s.size() / 2);
    for (size_t i = 0; i < s.size(); i += 2)
    {
        const int hi = hex_digit(s[i]);
        const int lo = hex_digit(s[i + 1]);
        if (hi < 0 || lo < 0)
        {
            const size_t bad = hi < 0 ? i : i + 1;
            throw HexError{"invalid hex character '" + std::string(1, s[bad]) + "' at digit " +
                           std::to_string(bad)};
        }
        out.push_back(static_cast<uint8_t>((hi << 4) | lo));
    }
    return out;
}

std::string to_hex(bytes_view data)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (const auto b : data)
    {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}
}  // namespace eth2vec
