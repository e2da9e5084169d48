// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/corpus.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace eth2vec
{
namespace fs = std::filesystem;

std::vector<NamedBlob> parse_hex_file(std::string_view text)
{
    std::vector<NamedBlob> blobs;
    std::string pending;
    std::string name{default_contract_name};
    bool headed = false;

    auto flush = [&] {
        if (headed || !pending.empty())
            blobs.push_back({name, from_hex(pending)});
        pending.clear();
    };

    size_t pos = 0;
    while (pos < text.size())
    {
        const auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;

        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos)
            continue;
        line.remove_prefix(first);
        if (line.front() == '#')
            continue;
        if (line.front() == '>')
        {
            flush();
            auto header = line.substr(1);
            while (!header.empty() && (header.back() == '\r' || header.back() == ' '))
                header.remove_suffix(1);
            if (header.empty())
                throw HexError{"empty contract name after '>'"};
            name = std::string{header};
            headed = true;
            continue;
        }
        pending.append(line);
        pending.push_back('\n');
    }
    flush();
    return blobs;
}

std::string read_text_file(const fs::path& path)
{
    std::ifstream in{path, std::ios::binary};
    if (!in)
        throw Error{"cannot read " + path.string()};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, std::string_view text)
{
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out)
        throw Error{"cannot write " + path.string()};
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out)
        throw Error{"write failed for " + path.string()};
}

ContractFile load_contract_file(const fs::path& path)
{
    const auto text = read_text_file(path);
    return build_contract_file(path.stem().string(), parse_hex_file(text));
}

std::vector<fs::path> list_hex_files(const fs::path& root)
{
    std::error_code ec;
    if (!fs::exists(root, ec))
        throw Error{"no such file or directory: " + root.string()};
    if (!fs::is_directory(root, ec))
        return {root};

    std::vector<fs::path> out;
    for (const auto& entry : fs::recursive_directory_iterator{root})
    {
        if (entry.is_regular_file() && entry.path().extension() == ".hex")
            out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Corpus load_corpus(const std::vector<fs::path>& roots)
{
    Corpus corpus;
    std::set<std::string> stems;
    for (const auto& root : roots)
    {
        for (const auto& path : list_hex_files(root))
        {
            try
            {
                auto file = load_contract_file(path);
                if (!stems.insert(file.name).second)
                {
                    corpus.issues.push_back({path, "duplicate file name '" + file.name + "'"});
                    continue;
                }
                corpus.files.push_back(std::move(file));
            }
            catch (const Error& e)
            {
                corpus.issues.push_back({path, e.what()});
            }
        }
    }
    return corpus;
}
}  // namespace eth2vec
