// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0

#include <eth2vec/corpus.hpp>
#include <eth2vec/synthetic.hpp>
#include <gtest/gtest.h>
#include <testutils.hpp>

#include <set>

using namespace eth2vec;
using namespace eth2vec::test;
namespace syn = eth2vec::synthetic;

namespace
{
std::set<std::string> function_names(const ContractFile& f)
{
    std::set<std::string> out;
    for (const auto& c : f.contracts)
        for (const auto& fn : c.functions)
            out.insert(fn.name);
    return out;
}
}  // namespace

TEST(synthetic, selector_name)
{
    EXPECT_EQ(syn::selector_name(0xa9059cbb), "0xa9059cbb");
    EXPECT_EQ(syn::selector_name(0x01), "0x00000001");
}

TEST(synthetic, templates_are_seeded)
{
    Rng a{3}, b{3};
    const auto ta = syn::random_template(a, {Tag::Reentrancy});
    const auto tb = syn::random_template(b, {Tag::Reentrancy});
    EXPECT_EQ(ta, tb);
    EXPECT_EQ(syn::assemble(ta), syn::assemble(tb));
    EXPECT_EQ(ta.tags, TagSet{Tag::Reentrancy});
}

TEST(synthetic, template_shape_is_respected)
{
    Rng rng{4};
    syn::TemplateShape shape;
    shape.min_functions = 3;
    shape.max_functions = 3;
    shape.min_statements = 2;
    shape.max_statements = 4;
    for (int i = 0; i < 50; ++i)
    {
        const auto t = syn::random_template(rng, {Tag::GasConsumption, Tag::IntegerOverflow}, shape);
        ASSERT_EQ(t.functions.size(), 3u);
        EXPECT_LE(t.functions[0].body.size(), 4u + 2u);  // plus one idiom per tag
        for (size_t f = 1; f < 3; ++f)
        {
            EXPECT_GE(t.functions[f].body.size(), 2u);
            EXPECT_LE(t.functions[f].body.size(), 4u);
        }
        for (const auto& fn : t.functions)
            for (const auto& s : fn.body)
                EXPECT_LT(s.kind, syn::statement_kinds());
    }
}

TEST(synthetic, dispatcher_is_recovered)
{
    Rng rng{5};
    for (int i = 0; i < 30; ++i)
    {
        const auto t = syn::random_template(rng, {all_tags[i % tag_count]});
        const auto names = function_names(build_contract_file("x", syn::assemble(t)));
        EXPECT_TRUE(names.contains("dispatch"));
        for (const auto& fn : t.functions)
            EXPECT_TRUE(names.contains(syn::selector_name(fn.selector))) << fn.selector;
    }
}

TEST(synthetic, delete_statement_removes_exactly_one)
{
    Rng rng{6};
    for (int i = 0; i < 100; ++i)
    {
        const auto f = syn::random_function(rng, {}, {});
        const auto g = syn::delete_statement(f, rng);
        EXPECT_EQ(g.body.size(), f.body.size() - 1);
        EXPECT_EQ(g.selector, f.selector);
    }
    syn::FunctionTemplate single;
    single.body.push_back({});
    EXPECT_EQ(syn::delete_statement(single, rng).body.size(), 1u);
}

TEST(synthetic, rewrite_keeps_interface)
{
    Rng rng{7};
    const auto base = syn::random_template(rng, {Tag::TimeDependency});
    const auto r = syn::rewrite(base, rng, 3);
    ASSERT_EQ(r.functions.size(), base.functions.size());
    for (size_t i = 0; i < r.functions.size(); ++i)
        EXPECT_EQ(r.functions[i].selector, base.functions[i].selector);
    EXPECT_EQ(r.tags, base.tags);
    EXPECT_EQ(syn::rewrite(base, rng, 0), base);
}

TEST(synthetic, vulnerable_corpus_names_and_labels)
{
    const auto corpus = syn::vulnerable_corpus(9, 2, 1);
    ASSERT_EQ(corpus.files.size(), 18u);
    EXPECT_EQ(corpus.files[0].name, "t00_v0");
    EXPECT_EQ(corpus.files[17].name, "t08_v1");
    std::set<Tag> covered;
    const auto labels = corpus.labels();
    for (const auto& f : corpus.files)
    {
        EXPECT_FALSE(f.tags.empty());
        EXPECT_EQ(labels.tags({f.name, "main"}), f.tags);
        covered.insert(f.tags.begin(), f.tags.end());
    }
    EXPECT_EQ(covered.size(), tag_count);
    EXPECT_EQ(corpus.files[0].tags.count(Tag::Reentrancy), 1u);
    EXPECT_EQ(syn::vulnerable_corpus(9, 2, 1).files[5].code, corpus.files[5].code);
}

TEST(synthetic, write_corpus_round_trips)
{
    TempDir dir{"synth"};
    const auto corpus = syn::vulnerable_corpus(3, 2, 8);
    syn::write_corpus(corpus, dir.path());
    const auto loaded = load_corpus({dir.path()});
    EXPECT_TRUE(loaded.issues.empty());
    ASSERT_EQ(loaded.files.size(), corpus.files.size());
    EXPECT_EQ(load_labels(dir / "labels.csv"), corpus.labels());
    for (const auto& f : loaded.files)
    {
        const auto it = std::find_if(corpus.files.begin(), corpus.files.end(),
            [&](const syn::LabeledFile& lf) { return lf.name == f.name; });
        ASSERT_NE(it, corpus.files.end()) << f.name;
        EXPECT_EQ(f.md5, md5_hex(it->code));
    }
}
