// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/bytes.hpp>
#include <eth2vec/opcodes.hpp>
#include <gtest/gtest.h>

using namespace eth2vec;

TEST(hex, decode_with_prefix_and_whitespace)
{
    EXPECT_EQ(from_hex("0x6001 6002\n01"), (bytes{0x60, 0x01, 0x60, 0x02, 0x01}));
    EXPECT_EQ(from_hex("AbCd"), (bytes{0xab, 0xcd}));
    EXPECT_EQ(from_hex(""), bytes{});
    EXPECT_EQ(from_hex("0x"), bytes{});
}

TEST(hex, rejects_odd_length_and_bad_digits)
{
    EXPECT_THROW(from_hex("0x600"), HexError);
    EXPECT_THROW(from_hex("zz"), HexError);
    EXPECT_THROW(from_hex("60 0"), HexError);
}

TEST(hex, encode_lowercase)
{
    EXPECT_EQ(to_hex(bytes{0x00, 0xAB, 0xff}), "00abff");
    EXPECT_EQ(to_hex_prefixed(bytes{0x01}), "0x01");
    EXPECT_EQ(to_hex({}), "");
}

TEST(opcodes, golden_mnemonics)
{
    EXPECT_EQ(mnemonic(0x00), "STOP");
    EXPECT_EQ(mnemonic(0x01), "ADD");
    EXPECT_EQ(mnemonic(0x0b), "SIGNEXTEND");
    EXPECT_EQ(mnemonic(0x1d), "SAR");
    EXPECT_EQ(mnemonic(0x20), "KECCAK256");
    EXPECT_EQ(mnemonic(0x3f), "EXTCODEHASH");
    EXPECT_EQ(mnemonic(0x44), "PREVRANDAO");
    EXPECT_EQ(mnemonic(0x48), "BASEFEE");
    EXPECT_EQ(mnemonic(0x5b), "JUMPDEST");
    EXPECT_EQ(mnemonic(0x5f), "PUSH0");
    EXPECT_EQ(mnemonic(0x60), "PUSH1");
    EXPECT_EQ(mnemonic(0x7f), "PUSH32");
    EXPECT_EQ(mnemonic(0x80), "DUP1");
    EXPECT_EQ(mnemonic(0x8f), "DUP16");
    EXPECT_EQ(mnemonic(0x90), "SWAP1");
    EXPECT_EQ(mnemonic(0x9f), "SWAP16");
    EXPECT_EQ(mnemonic(0xa0), "LOG0");
    EXPECT_EQ(mnemonic(0xa4), "LOG4");
    EXPECT_EQ(mnemonic(0xf0), "CREATE");
    EXPECT_EQ(mnemonic(0xf5), "CREATE2");
    EXPECT_EQ(mnemonic(0xfa), "STATICCALL");
    EXPECT_EQ(mnemonic(0xfd), "REVERT");
    EXPECT_EQ(mnemonic(0xfe), "INVALID");
    EXPECT_EQ(mnemonic(0xff), "SELFDESTRUCT");
}

TEST(opcodes, undefined_bytes_are_invalid_with_code)
{
    EXPECT_EQ(mnemonic(0x0c), "INVALID(0x0c)");
    EXPECT_EQ(mnemonic(0x21), "INVALID(0x21)");
    EXPECT_EQ(mnemonic(0x49), "INVALID(0x49)");  // BLOBHASH is post-Shanghai
    EXPECT_EQ(mnemonic(0x5c), "INVALID(0x5c)");  // TLOAD is post-Shanghai
    EXPECT_EQ(mnemonic(0xef), "INVALID(0xef)");
    EXPECT_FALSE(is_defined(0xef));
    EXPECT_TRUE(is_defined(0xfe));
}

TEST(opcodes, table_size)
{
    int defined = 0;
    for (int b = 0; b < 256; ++b)
        defined += is_defined(static_cast<uint8_t>(b));
    EXPECT_EQ(defined, 144);
    EXPECT_EQ(evm_revision, "shanghai");
}

TEST(opcodes, mnemonic_lookup_is_inverse)
{
    for (int b = 0; b < 256; ++b)
    {
        const auto op = static_cast<uint8_t>(b);
        const auto back = opcode_from_mnemonic(mnemonic(op));
        ASSERT_TRUE(back.has_value()) << mnemonic(op);
        EXPECT_EQ(*back, op);
    }
    EXPECT_FALSE(opcode_from_mnemonic("FOO").has_value());
    EXPECT_FALSE(opcode_from_mnemonic("INVALID(0x01)").has_value());  // 0x01 is ADD
}

TEST(opcodes, immediates_and_boundaries)
{
    EXPECT_EQ(immediate_size(OP_PUSH0), 0u);
    for (int n = 1; n <= 32; ++n)
        EXPECT_EQ(immediate_size(static_cast<uint8_t>(0x5f + n)), size_t(n));
    EXPECT_EQ(immediate_size(0x80), 0u);

    for (const uint8_t op : {0x00, 0x56, 0xf3, 0xfd, 0xfe, 0xff, 0xef})
        EXPECT_TRUE(is_terminator(op)) << int{op};
    EXPECT_FALSE(is_terminator(0x57));
    EXPECT_TRUE(ends_block(0x57));
    EXPECT_FALSE(ends_block(0x5b));
    EXPECT_FALSE(ends_block(0x01));
}
