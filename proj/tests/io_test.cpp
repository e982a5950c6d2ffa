#include <gtest/gtest.h>

#include <fstream>

#include "test_util.hpp"
#include "tokevolve/tokevolve.hpp"

using namespace tokevolve;

namespace {

void write(const std::filesystem::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary);
    out << data;
}

}  // namespace

TEST(Io, SaveLoadRoundTrip) {
    testutil::TempDir dir("io");
    const auto tok = testutil::train_on(testutil::read_fixture("corpus_b.jsonl"), 700);
    save(tok, dir.path());
    const auto loaded = load(dir.path());
    EXPECT_TRUE(same_structure(tok, loaded));
    EXPECT_TRUE(validate(loaded).empty());
    const std::string s = "Het RIVM bespreekt de coronamaatregelen.";
    EXPECT_EQ(encode(tok, s), encode(loaded, s));
}

TEST(Io, SaveIsByteStable) {
    testutil::TempDir a("io_a");
    testutil::TempDir b("io_b");
    const auto tok = testutil::train_on(testutil::read_fixture("corpus_a.jsonl"), 400);
    save(tok, a.path());
    save(load(a.path()), b.path());
    for (const char* f : {kVocabFile, kMergesFile, kSpecialsFile}) {
        EXPECT_EQ(detail::read_file(a / f), detail::read_file(b / f)) << f;
    }
}

TEST(Io, MergesFileFormat) {
    auto tokens = base_tokenizer().vocab().tokens();
    tokens.push_back("Cor");
    tokens.push_back("on");
    tokens.push_back("Coron");
    const auto text = merges_txt({make_rule("C", "or", 0)});
    EXPECT_EQ(text, "#version: 0.2\nC or\n");

    const auto rules = parse_merges_txt("#version: 0.2\nCor on\n");
    ASSERT_EQ(rules.size(), 1u);
    EXPECT_EQ(rules[0].left, "Cor");
    EXPECT_EQ(rules[0].right, "on");
    EXPECT_EQ(rules[0].result, "Coron");
    EXPECT_EQ(rules[0].rank, 0u);
}

TEST(Io, LoadAcceptsCoronRule) {
    testutil::TempDir dir("coron");
    auto tokens = base_tokenizer().vocab().tokens();
    for (const char* t : {"or", "Cor", "on", "Coron"}) tokens.push_back(t);
    write(dir / kVocabFile, vocab_json(Vocab(tokens)));
    write(dir / kMergesFile, "#version: 0.2\no r\nC or\no n\nCor on\n");
    const auto tok = load(dir.path());
    ASSERT_EQ(tok.merges().size(), 4u);
    EXPECT_EQ(tok.merges()[3], make_rule("Cor", "on", 3));
}

TEST(Io, UnknownTokenInMergesIsValidationError) {
    testutil::TempDir dir("unknown");
    write(dir / kVocabFile, vocab_json(base_tokenizer().vocab()));
    write(dir / kMergesFile, "#version: 0.2\nCor on\n");
    EXPECT_THROW(load(dir.path()), ValidationError);
}

TEST(Io, MalformedMergeLineReportsLine) {
    try {
        parse_merges_txt("#version: 0.2\na b\nab  c\n", "merges.txt");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_merges_txt("a\n"), ParseError);
    EXPECT_THROW(parse_merges_txt("a b c\n"), ParseError);
}

TEST(Io, MalformedVocabReportsLine) {
    try {
        parse_vocab_json("{\"a\": 0,\n\"b\": }", "vocab.json");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(parse_vocab_json("[1, 2]"), ParseError);
    EXPECT_THROW(parse_vocab_json("{\"a\": 0, \"b\": 2}"), ParseError);  // gap
    EXPECT_THROW(parse_vocab_json("{\"a\": 0, \"b\": 0}"), ParseError);  // duplicate id
    EXPECT_THROW(parse_vocab_json("{\"a\": \"x\"}"), ParseError);
}

TEST(Io, VocabJsonIsFlatUtf8Object) {
    const auto text = vocab_json(base_tokenizer().vocab());
    EXPECT_EQ(text.front(), '{');
    EXPECT_NE(text.find("\"Ġ\":37"), std::string::npos);  // space byte 0x20 after 5 specials
    EXPECT_NE(text.find("\"<s>\":0"), std::string::npos);
}

TEST(Io, SpecialsFileIsOptional) {
    testutil::TempDir dir("nospecials");
    const auto tok = base_tokenizer();
    write(dir / kVocabFile, vocab_json(tok.vocab()));
    write(dir / kMergesFile, merges_txt({}));
    EXPECT_TRUE(same_structure(load(dir.path()), tok));
}

TEST(Io, CustomSpecialsRoundTrip) {
    testutil::TempDir dir("specials");
    SpecialTokens sp;
    sp.bos = "[CLS]";
    sp.eos = "[SEP]";
    const auto tok = base_tokenizer(sp);
    save(tok, dir.path());
    const auto loaded = load(dir.path());
    EXPECT_EQ(loaded.specials(), sp);
    EXPECT_EQ(loaded.special_id(SpecialRole::bos), 0u);
}
