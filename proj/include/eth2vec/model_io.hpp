// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <eth2vec/model.hpp>

#include <filesystem>

namespace eth2vec
{
/// Model container layout (all integers and floats little-endian):
///
///   "EV2V" u32:version u32:normalization u32:d u32:k f32:alpha u32:epochs
///   u32:infer_epochs u32:min_count u64:seed
///   u32:vocab { u32:len bytes u64:count }*
///   f32[vocab*d] input   f32[vocab*2d] output
///   u32:functions { str:file str:contract str:function }*
///   f32[functions*2d] theta
///   "END!"
inline constexpr uint32_t model_format_version = 1;

class ModelFormatError : public Error
{
public:
    using Error::Error;
};

bytes encode_model(const Model& model);

/// Throws ModelFormatError on bad magic, unsupported version or policy,
/// truncation, or trailing bytes. Never returns a partial model.
Model decode_model(bytes_view data);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);
}  // namespace eth2vec
