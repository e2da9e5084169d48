// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/model_io.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace eth2vec
{
namespace
{
constexpr char magic[4] = {'E', 'V', '2', 'V'};
constexpr char trailer[4] = {'E', 'N', 'D', '!'};

class Writer
{
public:
    void raw(const void* p, size_t n)
    {
        const auto* b = static_cast<const uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }

    template <typename T>
    void uint(T v)
    {
        for (size_t i = 0; i < sizeof(T); ++i)
            out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void f32(float v) { uint(std::bit_cast<uint32_t>(v)); }

    void floats(const std::vector<float>& v)
    {
        for (const auto x : v)
            f32(x);
    }

    void str(const std::string& s)
    {
        uint(static_cast<uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

    bytes out;
};

class Reader
{
public:
    explicit Reader(bytes_view data) : data_{data} {}

    bytes_view take(size_t n)
    {
        if (data_.size() - pos_ < n)
            throw ModelFormatError{"truncated model file (needed " + std::to_string(n) +
                                   " bytes at offset " + std::to_string(pos_) + ")"};
        const auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    template <typename T>
    T uint()
    {
        const auto b = take(sizeof(T));
        T v = 0;
        for (size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<T>(static_cast<T>(b[i]) << (8 * i));
        return v;
    }

    float f32() { return std::bit_cast<float>(uint<uint32_t>()); }

    std::vector<float> floats(size_t n)
    {
        if ((data_.size() - pos_) / 4 < n)
            throw ModelFormatError{"truncated model file (vector block)"};
        std::vector<float> v(n);
        for (auto& x : v)
            x = f32();
        return v;
    }

    std::string str()
    {
        const auto n = uint<uint32_t>();
        const auto b = take(n);
        return {reinterpret_cast<const char*>(b.data()), b.size()};
    }

    bool done() const noexcept { return pos_ == data_.size(); }

private:
    bytes_view data_;
    size_t pos_ = 0;
};
}  // namespace

bytes encode_model(const Model& model)
{
    Writer w;
    w.raw(magic, sizeof(magic));
    w.uint(model_format_version);
    w.uint(static_cast<uint32_t>(model.normalization));
    w.uint(model.hyper.dim);
    w.uint(model.hyper.negatives);
    w.f32(model.hyper.alpha);
    w.uint(model.hyper.epochs);
    w.uint(model.hyper.infer_epochs);
    w.uint(model.hyper.min_count);
    w.uint(model.hyper.seed);

    w.uint(static_cast<uint32_t>(model.vocab.size()));
    for (TokenId t = 0; t < model.vocab.size(); ++t)
    {
        w.str(model.vocab.token(t));
        w.uint(model.vocab.count(t));
    }
    w.floats(model.input);
    w.floats(model.output);

    w.uint(static_cast<uint32_t>(model.functions.size()));
    for (const auto& f : model.functions)
    {
        w.str(f.file);
        w.str(f.contract);
        w.str(f.function);
    }
    w.floats(model.theta);
    w.raw(trailer, sizeof(trailer));
    return std::move(w.out);
}

Model decode_model(bytes_view data)
{
    Reader r{data};
    const auto m = r.take(sizeof(magic));
    if (std::memcmp(m.data(), magic, sizeof(magic)) != 0)
        throw ModelFormatError{"not an eth2vec model file (bad magic)"};
    const auto version = r.uint<uint32_t>();
    if (version != model_format_version)
        throw ModelFormatError{"unsupported model format version " + std::to_string(version) +
                               " (expected " + std::to_string(model_format_version) + ")"};
    const auto policy = r.uint<uint32_t>();
    if (policy != static_cast<uint32_t>(Normalization::v1))
        throw ModelFormatError{"unsupported normalization policy " + std::to_string(policy)};

    Model model;
    model.normalization = static_cast<Normalization>(policy);
    model.hyper.dim = r.uint<uint32_t>();
    model.hyper.negatives = r.uint<uint32_t>();
    model.hyper.alpha = r.f32();
    model.hyper.epochs = r.uint<uint32_t>();
    model.hyper.infer_epochs = r.uint<uint32_t>();
    model.hyper.min_count = r.uint<uint32_t>();
    model.hyper.seed = r.uint<uint64_t>();
    if (model.hyper.dim == 0)
        throw ModelFormatError{"model dimension is zero"};

    const auto vocab_size = r.uint<uint32_t>();
    std::vector<std::pair<std::string, uint64_t>> entries;
    for (uint32_t i = 0; i < vocab_size; ++i)
    {
        auto token = r.str();
        const auto count = r.uint<uint64_t>();
        entries.emplace_back(std::move(token), count);
    }
    try
    {
        model.vocab = Vocabulary::from_entries(std::move(entries));
    }
    catch (const Error& e)
    {
        throw ModelFormatError{std::string{"corrupt vocabulary: "} + e.what()};
    }

    const size_t d = model.hyper.dim;
    model.input = r.floats(size_t{vocab_size} * d);
    model.output = r.floats(size_t{vocab_size} * 2 * d);

    const auto functions = r.uint<uint32_t>();
    for (uint32_t i = 0; i < functions; ++i)
    {
        FunctionId id;
        id.file = r.str();
        id.contract = r.str();
        id.function = r.str();
        model.functions.push_back(std::move(id));
    }
    model.theta = r.floats(size_t{functions} * 2 * d);

    const auto t = r.take(sizeof(trailer));
    if (std::memcmp(t.data(), trailer, sizeof(trailer)) != 0)
        throw ModelFormatError{"corrupt model file (bad trailer)"};
    if (!r.done())
        throw ModelFormatError{"corrupt model file (trailing bytes)"};
    return model;
}

void save_model(const Model& model, const std::filesystem::path& path)
{
    const auto data = encode_model(model);
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out)
        throw Error{"cannot write model file " + path.string()};
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out)
        throw Error{"write failed for model file " + path.string()};
}

Model load_model(const std::filesystem::path& path)
{
    std::ifstream in{path, std::ios::binary};
    if (!in)
        throw Error{"cannot open model file " + path.string()};
    const bytes data{std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
    return decode_model(data);
}
}  // namespace eth2vec
