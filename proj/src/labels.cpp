// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/labels.hpp>

#include <fstream>
#include <sstream>
#include <vector>

namespace eth2vec
{
namespace
{
constexpr std::array<std::string_view, tag_count> names = {"Reentrancy", "TimeDependency",
    "ERC20Transfer", "GasConsumption", "ImplicitVisibility", "IntegerOverflow",
    "IntegerUnderflow"};

std::string_view trim(std::string_view s)
{
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true)
    {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}
}  // namespace

std::string_view tag_name(Tag tag) noexcept
{
    return names[tag_index(tag)];
}

std::optional<Tag> tag_from_name(std::string_view name) noexcept
{
    for (const auto t : all_tags)
    {
        if (names[tag_index(t)] == name)
            return t;
    }
    return std::nullopt;
}

int severity(Tag tag) noexcept
{
    switch (tag)
    {
    case Tag::Reentrancy:
        return 3;
    case Tag::TimeDependency:
        return 2;
    default:
        return 1;
    }
}

const TagSet& LabelStore::tags(const ContractKey& key) const
{
    static const TagSet empty;
    const auto it = entries_.find(key);
    return it == entries_.end() ? empty : it->second;
}

LabelStore parse_labels(std::string_view csv)
{
    std::map<ContractKey, TagSet> entries;
    bool header_seen = false;
    size_t lineno = 0;
    size_t pos = 0;
    while (pos <= csv.size())
    {
        const auto nl = csv.find('\n', pos);
        const auto line = trim(csv.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
        pos = nl == std::string_view::npos ? csv.size() + 1 : nl + 1;
        ++lineno;
        if (line.empty())
            continue;

        const auto fields = split_commas(line);
        if (!header_seen)
        {
            if (fields.size() != 3 || fields[0] != "file" || fields[1] != "contract" ||
                fields[2] != "tag")
                throw LabelError{"line " + std::to_string(lineno) +
                                 ": expected header 'file,contract,tag'"};
            header_seen = true;
            continue;
        }
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty())
            throw LabelError{"line " + std::to_string(lineno) + ": expected 3 fields"};

        const auto tag = tag_from_name(fields[2]);
        if (!tag)
            throw LabelError{"line " + std::to_string(lineno) + ": unknown tag '" +
                             std::string{fields[2]} + "'"};
        entries[{std::string{fields[0]}, std::string{fields[1]}}].insert(*tag);
    }
    if (!header_seen)
        throw LabelError{"label file is empty (missing header 'file,contract,tag')"};
    return LabelStore{std::move(entries)};
}

LabelStore load_labels(const std::filesystem::path& path)
{
    std::ifstream in{path, std::ios::binary};
    if (!in)
        throw LabelError{"cannot open label file " + path.string()};
    std::ostringstream ss;
    ss << in.rdbuf();
    try
    {
        return parse_labels(ss.str());
    }
    catch (const LabelError& e)
    {
        throw LabelError{path.string() + ": " + e.what()};
    }
}

std::string format_labels(const LabelStore& labels)
{
    std::string out = "file,contract,tag\n";
    for (const auto& [key, tags] : labels.entries())
    {
        for (const auto t : tags)
            out += key.first + "," + key.second + "," + std::string{tag_name(t)} + "\n";
    }
    return out;
}
}  // namespace eth2vec
