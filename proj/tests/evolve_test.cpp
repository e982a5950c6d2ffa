#include <gtest/gtest.h>

#include <algorithm>

#include "test_util.hpp"
#include "tokevolve/tokevolve.hpp"

using namespace tokevolve;

namespace {

// Coron fixture: the old tokenizer knows "Cor" and "on"; the new one
// additionally composes "Coron" and "Corona".
struct CoronFixture {
    Tokenizer older;
    Tokenizer newer;
};

CoronFixture coron_fixture() {
    auto old_tokens = base_tokenizer().vocab().tokens();
    std::vector<MergeRule> old_rules;
    auto add = [](std::vector<std::string>& tokens, std::vector<MergeRule>& rules, const char* l, const char* r) {
        rules.push_back(make_rule(l, r, static_cast<std::uint32_t>(rules.size())));
        tokens.push_back(rules.back().result);
    };
    add(old_tokens, old_rules, "o", "r");
    add(old_tokens, old_rules, "C", "or");
    add(old_tokens, old_rules, "o", "n");
    add(old_tokens, old_rules, "i", "n");
    auto new_tokens = base_tokenizer().vocab().tokens();
    std::vector<MergeRule> new_rules;
    add(new_tokens, new_rules, "o", "r");
    add(new_tokens, new_rules, "C", "or");
    add(new_tokens, new_rules, "o", "n");
    add(new_tokens, new_rules, "Cor", "on");
    add(new_tokens, new_rules, "Coron", "a");
    return {Tokenizer(Vocab(old_tokens), old_rules), Tokenizer(Vocab(new_tokens), new_rules)};
}

}  // namespace

TEST(VocabDiff, IdenticalTokenizers) {
    const auto f = coron_fixture();
    EXPECT_TRUE(vocab_diff(f.older, f.older).empty());
}

TEST(VocabDiff, NewComposedToken) {
    const auto f = coron_fixture();
    EXPECT_EQ(vocab_diff(f.older, f.newer), (std::vector<std::string>{"Coron", "Corona"}));
}

TEST(VocabDiff, CoronaFromNewerCorpus) {
    const auto a = testutil::read_fixture("corpus_a.jsonl");
    auto ab = a;
    const auto b = testutil::read_fixture("corpus_b.jsonl");
    ab.insert(ab.end(), b.begin(), b.end());
    const auto diff = vocab_diff(testutil::train_on(a, 700), testutil::train_on(ab, 800));
    EXPECT_TRUE(std::any_of(diff.begin(), diff.end(), [](const std::string& t) { return t.find("corona") != std::string::npos; }));
}

TEST(MergeTokenizers, CoronFixture) {
    const auto f = coron_fixture();
    const auto out = merge_tokenizers(f.older, f.newer);
    ASSERT_EQ(out.added_tokens.size(), 2u);
    EXPECT_EQ(out.added_tokens[0], (AddedToken{"Coron", static_cast<TokenId>(f.older.vocab().size())}));
    EXPECT_EQ(out.added_tokens[1], (AddedToken{"Corona", static_cast<TokenId>(f.older.vocab().size() + 1)}));
    ASSERT_EQ(out.skipped_rules.size(), 3u);
    EXPECT_EQ(out.skipped_rules[1], make_rule("C", "or", 1));
    EXPECT_EQ(out.appended_rules[0], make_rule("Cor", "on", 4));  // after the 4 old rules
    EXPECT_TRUE(validate(out.merged).empty());

    EXPECT_EQ(testutil::token_texts(out.merged, encode(out.merged, "Coron")), (std::vector<std::string>{"Coron"}));
    EXPECT_EQ(testutil::token_texts(f.older, encode(f.older, "Coron")), (std::vector<std::string>{"Cor", "on"}));
}

TEST(MergeTokenizers, IdenticalTokenizersAddNothing) {
    const auto f = coron_fixture();
    const auto out = merge_tokenizers(f.older, f.older);
    EXPECT_TRUE(out.added_tokens.empty());
    EXPECT_TRUE(out.appended_rules.empty());
    EXPECT_TRUE(same_structure(out.merged, f.older));
}

TEST(MergeTokenizers, Idempotent) {
    const auto f = coron_fixture();
    const auto first = merge_tokenizers(f.older, f.newer);
    EXPECT_TRUE(merge_tokenizers(first.merged, f.newer).added_tokens.empty());
}

TEST(MergeTokenizers, SpecialsMismatchIsAnError) {
    const auto f = coron_fixture();
    SpecialTokens other;
    other.mask = "[MASK]";
    EXPECT_THROW(merge_tokenizers(f.older, base_tokenizer(other)), Error);
}

TEST(MergeTokenizers, InvalidInputIsAnError) {
    const auto f = coron_fixture();
    auto tokens = base_tokenizer().vocab().tokens();
    tokens.push_back("xy");
    const Tokenizer broken(Vocab(tokens), {});  // "xy" has no rule
    EXPECT_THROW(merge_tokenizers(f.older, broken), ValidationError);
}

TEST(MergeTokenizers, FullScaleSizeArithmetic) {
    // 40000-token old vocabulary; the new one shares 30000 of its tokens and
    // brings 2774 unseen ones.
    const auto& map = build_byte_map();
    std::vector<std::string> pairs;
    for (unsigned a = 33; a < 256 && pairs.size() < 60000; ++a) {
        for (unsigned b = 33; b < 256 && pairs.size() < 60000; ++b) {
            pairs.push_back(map.symbol(static_cast<std::uint8_t>(a)) + map.symbol(static_cast<std::uint8_t>(b)));
        }
    }
    auto build = [&](std::size_t begin, std::size_t end) {
        Vocab vocab = base_tokenizer().vocab();
        std::vector<MergeRule> rules;
        for (std::size_t i = begin; i < end; ++i) {
            const auto sym = oracle::code_points(pairs[i]);
            rules.push_back(make_rule(sym[0], sym[1], static_cast<std::uint32_t>(rules.size())));
            vocab.add(pairs[i]);
        }
        return Tokenizer(std::move(vocab), std::move(rules));
    };
    const std::size_t old_rules = 40000 - 261;
    const auto older = build(0, old_rules);
    const auto newer = build(old_rules - 30000, old_rules + 2774);
    ASSERT_EQ(older.vocab().size(), 40000u);
    const auto out = merge_tokenizers(older, newer);
    EXPECT_EQ(vocab_diff(older, newer).size(), 2774u);
    EXPECT_EQ(out.added_tokens.size(), 2774u);
    EXPECT_EQ(out.merged.vocab().size(), 42774u);
    EXPECT_EQ(out.added_tokens.front().id, 40000u);
    EXPECT_EQ(out.added_tokens.back().id, 42773u);
}

TEST(MergeTokenizers, PropertiesOnTrainedFixtures) {
    const auto a = testutil::read_fixture("corpus_a.jsonl");
    const auto b = testutil::read_fixture("corpus_b.jsonl");
    auto ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const auto older = testutil::train_on(a, 700);
    const auto newer = testutil::train_on(ab, 800);
    const auto out = merge_tokenizers(older, newer);

    const auto& ov = older.vocab();
    const auto& mv = out.merged.vocab();
    EXPECT_EQ(mv.size(), ov.size() + vocab_diff(older, newer).size());
    for (TokenId id = 0; id < ov.size(); ++id) ASSERT_EQ(mv.find(ov.token(id)), id);
    for (std::size_t i = 0; i < out.added_tokens.size(); ++i) {
        EXPECT_EQ(out.added_tokens[i].id, ov.size() + i);
    }
    EXPECT_TRUE(validate(out.merged).empty());

    std::set<std::pair<TokenId, TokenId>> appended;
    for (const auto& r : out.appended_rules) appended.emplace(*mv.find(r.left), *mv.find(r.right));

    std::mt19937_64 rng(5);
    std::size_t conservative = 0;
    for (int i = 0; i < 400; ++i) {
        const auto s = i % 2 ? testutil::random_unicode(rng) : b[static_cast<std::size_t>(i) % b.size()];
        const auto eo = encode(older, s);
        const auto em = encode(out.merged, s);
        ASSERT_LE(em.size(), eo.size());
        ASSERT_EQ(decode(out.merged, em), s);
        bool touches = false;
        for (std::size_t k = 0; k + 1 < eo.size(); ++k) touches = touches || appended.contains({eo[k], eo[k + 1]});
        if (!touches) {
            ++conservative;
            ASSERT_EQ(em, eo) << s;
        }
    }
    EXPECT_GT(conservative, 0u);
}

TEST(MergeTokenizers, ReconstructOutcome) {
    const auto f = coron_fixture();
    const auto out = merge_tokenizers(f.older, f.newer);
    const auto again = reconstruct_outcome(f.older, out.merged);
    EXPECT_EQ(again.added_tokens, out.added_tokens);
    EXPECT_EQ(again.appended_rules, out.appended_rules);
    EXPECT_THROW(reconstruct_outcome(f.newer, out.merged), Error);
}

TEST(DiffReport, BoundaryVariants) {
    const auto older = testutil::chain_tokenizer({"Ġcoron", "coron"});
    const auto newer = testutil::chain_tokenizer({"Ġcorona", "corona"});
    const auto report = build_diff_report(merge_tokenizers(older, newer), std::vector<std::string>{});
    ASSERT_EQ(report.entries.size(), 2u);
    EXPECT_EQ(report.entries[0].token, "Ġcorona");
    EXPECT_EQ(report.entries[1].token, "corona");
    for (const auto& e : report.entries) {
        EXPECT_TRUE(e.has_boundary_variant) << e.token;
        EXPECT_FALSE(e.capitalization_duplicate) << e.token;
        EXPECT_EQ(e.frequency, 0u);
    }
}

TEST(DiffReport, CapitalizationDuplicates) {
    const auto older = testutil::chain_tokenizer({"Covi", "ĠCOVI", "Ġcovi"});
    const auto newer = testutil::chain_tokenizer({"Covid", "ĠCOVID", "Ġcovid"});
    const auto report = build_diff_report(merge_tokenizers(older, newer), std::vector<std::string>{});
    ASSERT_EQ(report.entries.size(), 3u);
    std::map<std::string, bool> cap;
    for (const auto& e : report.entries) cap[e.token] = e.capitalization_duplicate;
    EXPECT_FALSE(cap["Covid"]);
    EXPECT_TRUE(cap["ĠCOVID"]);
    EXPECT_TRUE(cap["Ġcovid"]);
}

TEST(DiffReport, FrequenciesAndCategories) {
    const auto older = testutil::chain_tokenizer({"Ġcoron", "coron"});
    const auto newer = testutil::chain_tokenizer({"Ġcorona", "corona"});
    const auto outcome = merge_tokenizers(older, newer);
    const std::vector<std::string> docs{"corona en de corona", "geen corona", "niets"};
    const CategoryMap categories{{"Ġcorona", "COVID-19"}};
    const auto report = build_diff_report(outcome, docs, categories, 2);
    EXPECT_EQ(report.entries[0].frequency, 2u);  // Ġcorona
    EXPECT_EQ(report.entries[1].frequency, 1u);  // corona
    EXPECT_EQ(report.entries[0].category, "COVID-19");
    EXPECT_EQ(report.entries[1].category, "");

    const auto tsv = to_tsv(report);
    EXPECT_EQ(tsv,
              "token\tfrequency\tflags\tcategory\n"
              "Ġcorona\t2\tboundary_variant\tCOVID-19\n"
              "corona\t1\tboundary_variant\t\n");
    const auto json = nlohmann::json::parse(to_json(report));
    ASSERT_TRUE(json.is_array());
    EXPECT_EQ(json[0]["token"], "Ġcorona");
    EXPECT_EQ(json[0]["frequency"], 2);
    EXPECT_EQ(json[0]["has_boundary_variant"], true);
}
