#include <gtest/gtest.h>

#include <cstdlib>
#include <regex>
#include <sys/wait.h>

#include "test_util.hpp"
#include "tokevolve/tokevolve.hpp"

using namespace tokevolve;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string quoted(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

// Runs the CLI with `args` (already shell-quoted) inside `dir`.
RunResult run(const testutil::TempDir& dir, const std::string& args, const std::string& env = "") {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = "cd " + quoted(dir.path()) + " && " + env + " " + quoted(TOKEVOLVE_CLI_PATH) + " " + args +
                            " >" + quoted(out) + " 2>" + quoted(err);
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = detail::read_file(out);
    r.err = detail::read_file(err);
    return r;
}

std::string fixture_arg(const std::string& name) { return quoted(testutil::fixture(name)); }

// Every stderr line must be a `level=... msg="..."` record.
void expect_records(const std::string& err) {
    static const std::regex record(R"(level=(info|warn|error) msg="([^"\\]|\\.)*")");
    std::istringstream lines(err);
    for (std::string line; std::getline(lines, line);) EXPECT_TRUE(std::regex_match(line, record)) << line;
}

}  // namespace

TEST(Cli, TrainWritesValidTokenizer) {
    testutil::TempDir dir("cli_train");
    const auto r = run(dir, "train " + fixture_arg("corpus_a.jsonl") + " tok --vocab-size 400");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    expect_records(r.err);
    for (const char* f : {kVocabFile, kMergesFile, kSpecialsFile}) EXPECT_TRUE(std::filesystem::exists(dir / "tok" / f));
    const auto v = run(dir, "validate tok");
    EXPECT_EQ(v.exit_code, 0);
    EXPECT_EQ(v.out, "ok\n");
    EXPECT_EQ(load(dir / "tok").vocab().size(), 400u);
}

TEST(Cli, TrainIsByteIdenticalAcrossRunsAndThreads) {
    testutil::TempDir dir("cli_repro");
    ASSERT_EQ(run(dir, "train " + fixture_arg("corpus_b.jsonl") + " a --vocab-size 450").exit_code, 0);
    ASSERT_EQ(run(dir, "--threads 4 train " + fixture_arg("corpus_b.jsonl") + " b --vocab-size 450").exit_code, 0);
    for (const char* f : {kVocabFile, kMergesFile}) {
        EXPECT_EQ(detail::read_file(dir / "a" / f), detail::read_file(dir / "b" / f)) << f;
    }
}

TEST(Cli, VocabSizeBelowBaseFails) {
    testutil::TempDir dir("cli_small");
    const auto r = run(dir, "train " + fixture_arg("corpus_a.jsonl") + " tok --vocab-size 100");
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_EQ(run(dir, "train " + fixture_arg("corpus_a.jsonl") + " tok").exit_code, 2);  // missing --vocab-size
    EXPECT_NE(r.err.find("level=error"), std::string::npos);
    expect_records(r.err);
    EXPECT_FALSE(std::filesystem::exists(dir / "tok"));
}

TEST(Cli, OptionsFallBackToEnvironment) {
    testutil::TempDir dir("cli_env");
    const auto r = run(dir, "train " + fixture_arg("corpus_a.jsonl") + " tok", "TOKEVOLVE_VOCAB_SIZE=300");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(load(dir / "tok").vocab().size(), 300u);
}

TEST(Cli, MergeReportsAddedTokenCount) {
    testutil::TempDir dir("cli_merge");
    save(testutil::chain_tokenizer({"Ġcoron"}), dir / "old");
    // Adds "Ġcorona", "co", "cov": three tokens the old vocabulary lacks.
    save(testutil::chain_tokenizer({"Ġcorona", "cov"}), dir / "new");
    const auto r = run(dir, "merge old new merged --report report.tsv --corpus " + fixture_arg("corpus_b.jsonl"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.out, "added 3 tokens\n");
    expect_records(r.err);
    const auto merged = load(dir / "merged");
    EXPECT_TRUE(validate(merged).empty());
    const auto report = detail::read_file(dir / "report.tsv");
    EXPECT_EQ(report.rfind("token\tfrequency\tflags\tcategory\n", 0), 0u);
    EXPECT_NE(report.find("Ġcorona\t"), std::string::npos);

    const auto same = run(dir, "merge old old merged2");
    ASSERT_EQ(same.exit_code, 0) << same.err;
    EXPECT_EQ(same.out, "added 0 tokens\n");
}

TEST(Cli, DiffWritesJson) {
    testutil::TempDir dir("cli_diff");
    save(testutil::chain_tokenizer({"Ġcoron", "coron"}), dir / "old");
    save(testutil::chain_tokenizer({"Ġcorona", "corona"}), dir / "new");
    const auto r = run(dir, "diff old new --report-format json");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[0]["token"], "Ġcorona");
}

TEST(Cli, PackExtendAndPppl) {
    testutil::TempDir dir("cli_pipeline");
    const auto a = fixture_arg("corpus_a.jsonl");
    const auto b = fixture_arg("corpus_b.jsonl");
    ASSERT_EQ(run(dir, "train " + a + " old --vocab-size 400").exit_code, 0);
    ASSERT_EQ(run(dir, "train " + b + " new --vocab-size 450").exit_code, 0);
    ASSERT_EQ(run(dir, "merge old new merged").exit_code, 0);

    const auto pack = run(dir, "pack " + b + " merged chunks.jsonl --max-tokens 64");
    ASSERT_EQ(pack.exit_code, 0) << pack.err;
    std::istringstream chunks(detail::read_file(dir / "chunks.jsonl"));
    std::size_t n = 0;
    for (std::string line; std::getline(chunks, line); ++n) {
        const auto j = nlohmann::json::parse(line);
        ASSERT_LE(j["ids"].size(), 64u);
    }
    EXPECT_GT(n, 0u);

    ASSERT_EQ(run(dir, "random-embeddings old e_old.bin --dim 8 --seed 1").exit_code, 0);
    const auto ext = run(dir, "extend-embeddings e_old.bin old merged e_new.bin --text-export e_new.txt");
    ASSERT_EQ(ext.exit_code, 0) << ext.err;
    const auto e_new = load_embeddings(dir / "e_new.bin");
    EXPECT_EQ(e_new.rows(), load(dir / "merged").vocab().size());
    EXPECT_EQ(e_new.dim(), 8u);

    const auto p = run(dir, "pppl merged " + b + " --fit-corpus " + a + " --out report.json");
    ASSERT_EQ(p.exit_code, 0) << p.err;
    const auto report = nlohmann::json::parse(detail::read_file(dir / "report.json"));
    EXPECT_GT(report["pppl"].get<double>(), 1.0);
    EXPECT_EQ(run(dir, "pppl merged " + b).exit_code == 0, false);  // unigram needs --fit-corpus
}

TEST(Cli, ValidateReportsViolations) {
    testutil::TempDir dir("cli_invalid");
    std::filesystem::create_directories(dir / "bad");
    {
        std::ofstream(dir / "bad" / kVocabFile) << vocab_json(base_tokenizer().vocab());
        std::ofstream(dir / "bad" / kMergesFile) << "#version: 0.2\na b\n";
    }
    const auto r = run(dir, "validate bad");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.out.find("closure"), std::string::npos) << r.out;
    expect_records(r.err);
}

TEST(Cli, MalformedInputsAreReportedWithLocation) {
    testutil::TempDir dir("cli_malformed");
    {
        std::ofstream(dir / "c.jsonl") << "{\"text\": \"ok\"}\n{oops\n";
    }
    const auto r = run(dir, "train c.jsonl tok --vocab-size 300");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("2"), std::string::npos) << r.err;
    expect_records(r.err);
    EXPECT_NE(run(dir, "validate missing_dir").exit_code, 0);
}
