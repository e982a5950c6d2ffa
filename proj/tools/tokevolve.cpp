// tokevolve: batch steps for growing a BPE vocabulary on newer data.
//
//   train -> merge/diff -> pack -> extend-embeddings -> pppl
//
// Diagnostics go to stderr as `level=<lvl> msg="<text>"` records; data goes to
// files or stdout. Every option can also be set through TOKEVOLVE_<NAME>.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tokevolve/tokevolve.hpp"

namespace fs = std::filesystem;
using namespace tokevolve;

namespace {

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += c;
        } else if (c == '\n') {
            out += "\\n";
        } else if (c == '\r') {
            out += "\\r";
        } else {
            out += c;
        }
    }
    return out + "\"";
}

struct Log {
    bool failed = false;

    void info(const std::string& msg) { emit("info", msg); }
    void warn(const std::string& msg) { emit("warn", msg); }
    void error(const std::string& msg) {
        failed = true;
        emit("error", msg);
    }

private:
    static void emit(const char* level, const std::string& msg) {
        std::cerr << "level=" << level << " msg=" << quote(msg) << "\n";
    }
};

std::string env_name(const std::string& option) {
    std::string name = "TOKEVOLVE_";
    for (char c : option) name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return name;
}

// Registers --<name> with its TOKEVOLVE_<NAME> environment fallback.
template <typename T>
CLI::Option* opt(CLI::App* app, const std::string& name, T& value, const std::string& help) {
    return app->add_option("--" + name, value, help)->envname(env_name(name))->capture_default_str();
}

void write_output(const std::string& path, const std::string& data) {
    if (path.empty() || path == "-") {
        std::cout << data;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << data;
    if (!out.flush()) throw Error("failed writing " + path);
}

void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw Error("no such file: " + path);
}

void require_dir(const std::string& path) {
    if (!fs::is_directory(path)) throw Error("no such tokenizer directory: " + path);
}

struct Shared {
    std::size_t threads = 1;
    std::string format = "jsonl";
};

std::vector<std::string> corpus(const std::string& path, const Shared& shared) {
    return read_corpus(fs::path(path), parse_corpus_format(shared.format));
}

std::string report_text(const DiffReport& report, const std::string& format) {
    if (format == "json") return to_json(report);
    return to_tsv(report);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tokevolve: train, merge and evaluate byte-level BPE vocabularies"};
    app.require_subcommand(1);
    Log log;
    Shared shared;
    opt(&app, "threads", shared.threads, "Worker threads (0 = all cores)");
    opt(&app, "format", shared.format, "Corpus format: jsonl or text")->check(CLI::IsMember({"jsonl", "text"}));

    // train --------------------------------------------------------------
    struct {
        std::string corpus, out;
        std::size_t vocab_size = 0;
        std::uint64_t min_freq = 2;
    } train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a byte-level BPE tokenizer on a corpus");
    train_cmd->add_option("corpus", train_args.corpus, "Corpus file")->required();
    train_cmd->add_option("out_dir", train_args.out, "Output tokenizer directory")->required();
    opt(train_cmd, "vocab-size", train_args.vocab_size, "Target vocabulary size")->required();
    opt(train_cmd, "min-freq", train_args.min_freq, "Minimum pair frequency")->check(CLI::PositiveNumber);
    train_cmd->callback([&] {
        TrainConfig config;
        config.target_vocab_size = train_args.vocab_size;
        config.min_pair_frequency = train_args.min_freq;
        config.threads = shared.threads;
        if (config.target_vocab_size < config.base_size()) {
            throw CLI::ValidationError("--vocab-size", "must be at least " + std::to_string(config.base_size()) +
                                                           " (256 byte symbols + 5 specials)");
        }
        require_file(train_args.corpus);
        const auto docs = corpus(train_args.corpus, shared);
        auto result = train_with_trace(docs, config);
        for (const auto& w : result.warnings) log.warn(w);
        require_valid(result.tokenizer, "trained tokenizer");
        save(result.tokenizer, train_args.out);
        log.info("trained " + std::to_string(result.tokenizer.merges().size()) + " merges, vocabulary " +
                 std::to_string(result.tokenizer.vocab().size()) + " -> " + train_args.out);
    });

    // merge / diff -------------------------------------------------------
    struct {
        std::string old_dir, new_dir, out_dir, report, report_format = "tsv", corpus, categories;
    } merge_args;
    auto add_report_options = [&](CLI::App* cmd) {
        opt(cmd, "report-format", merge_args.report_format, "Diff report format: tsv or json")
            ->check(CLI::IsMember({"tsv", "json"}));
        opt(cmd, "corpus", merge_args.corpus, "New corpus for token frequencies");
        opt(cmd, "categories", merge_args.categories, "TSV of token<TAB>category labels");
    };
    auto make_report = [&](const MergeOutcome& outcome) {
        std::vector<std::string> docs;
        if (!merge_args.corpus.empty()) {
            require_file(merge_args.corpus);
            docs = corpus(merge_args.corpus, shared);
        }
        CategoryMap categories;
        if (!merge_args.categories.empty()) categories = load_categories(merge_args.categories);
        return build_diff_report(outcome, docs, categories, shared.threads);
    };
    auto merge_inputs = [&] {
        require_dir(merge_args.old_dir);
        require_dir(merge_args.new_dir);
        return merge_tokenizers(load(merge_args.old_dir), load(merge_args.new_dir));
    };

    auto* merge_cmd = app.add_subcommand("merge", "Extend an old tokenizer with the new tokens of a newer one");
    merge_cmd->add_option("old_dir", merge_args.old_dir, "Old tokenizer directory")->required();
    merge_cmd->add_option("new_dir", merge_args.new_dir, "New tokenizer directory")->required();
    merge_cmd->add_option("out_dir", merge_args.out_dir, "Merged tokenizer output directory")->required();
    opt(merge_cmd, "report", merge_args.report, "Also write the diff report to this path");
    add_report_options(merge_cmd);
    merge_cmd->callback([&] {
        const auto outcome = merge_inputs();
        save(outcome.merged, merge_args.out_dir);
        if (!merge_args.report.empty()) {
            write_output(merge_args.report, report_text(make_report(outcome), merge_args.report_format));
        }
        std::cout << "added " << outcome.added_tokens.size() << " tokens\n";
        log.info("merged vocabulary " + std::to_string(outcome.merged.vocab().size()) + ", appended " +
                 std::to_string(outcome.appended_rules.size()) + " rules, skipped " +
                 std::to_string(outcome.skipped_rules.size()));
    });

    auto* diff_cmd = app.add_subcommand("diff", "Report the tokens a newer tokenizer would add");
    diff_cmd->add_option("old_dir", merge_args.old_dir, "Old tokenizer directory")->required();
    diff_cmd->add_option("new_dir", merge_args.new_dir, "New tokenizer directory")->required();
    opt(diff_cmd, "out", merge_args.report, "Report path (default: stdout)");
    add_report_options(diff_cmd);
    diff_cmd->callback([&] {
        const auto outcome = merge_inputs();
        write_output(merge_args.report, report_text(make_report(outcome), merge_args.report_format));
    });

    // pack ---------------------------------------------------------------
    struct {
        std::string corpus, tokenizer, out;
        std::size_t max_tokens = kDefaultMaxTokens;
    } pack_args;
    auto* pack_cmd = app.add_subcommand("pack", "Pack complete sentences into fixed token budgets");
    pack_cmd->add_option("corpus", pack_args.corpus, "Corpus file")->required();
    pack_cmd->add_option("tokenizer_dir", pack_args.tokenizer, "Tokenizer directory")->required();
    pack_cmd->add_option("out", pack_args.out, "Output JSONL (- for stdout)")->required();
    opt(pack_cmd, "max-tokens", pack_args.max_tokens, "Token budget per chunk")->check(CLI::PositiveNumber);
    pack_cmd->callback([&] {
        require_file(pack_args.corpus);
        require_dir(pack_args.tokenizer);
        const auto tok = load(pack_args.tokenizer);
        const auto docs = corpus(pack_args.corpus, shared);
        const auto result = pack_corpus(docs, tok, pack_args.max_tokens, shared.threads);
        for (const auto& w : result.warnings) log.warn("oversize sentence " + w.to_string());
        std::string data;
        for (const auto& c : result.chunks) data += chunk_jsonl(c);
        write_output(pack_args.out, data);
        log.info("packed " + std::to_string(docs.size()) + " documents into " + std::to_string(result.chunks.size()) +
                 " chunks");
    });

    // extend-embeddings --------------------------------------------------
    struct {
        std::string emb_in, old_dir, merged_dir, emb_out, strategy = "subtoken-mean", text_export;
        double stddev = 0.02;
        std::uint64_t seed = 0;
    } emb_args;
    auto* emb_cmd = app.add_subcommand("extend-embeddings", "Grow an embedding matrix to the merged vocabulary");
    emb_cmd->add_option("emb_in", emb_args.emb_in, "Input EMB1 matrix")->required();
    emb_cmd->add_option("old_dir", emb_args.old_dir, "Old tokenizer directory")->required();
    emb_cmd->add_option("merged_dir", emb_args.merged_dir, "Merged tokenizer directory")->required();
    emb_cmd->add_option("emb_out", emb_args.emb_out, "Output EMB1 matrix")->required();
    opt(emb_cmd, "strategy", emb_args.strategy, "subtoken-mean or gaussian")
        ->check(CLI::IsMember({"subtoken-mean", "gaussian"}));
    opt(emb_cmd, "std", emb_args.stddev, "Standard deviation for gaussian rows")->check(CLI::NonNegativeNumber);
    opt(emb_cmd, "seed", emb_args.seed, "Seed for gaussian rows");
    opt(emb_cmd, "text-export", emb_args.text_export, "Also write a text dump of the result");
    emb_cmd->callback([&] {
        require_file(emb_args.emb_in);
        require_dir(emb_args.old_dir);
        require_dir(emb_args.merged_dir);
        const auto older = load(emb_args.old_dir);
        const auto outcome = reconstruct_outcome(older, load(emb_args.merged_dir));
        ExtendOptions options;
        options.strategy = parse_init_strategy(emb_args.strategy);
        options.stddev = emb_args.stddev;
        options.seed = emb_args.seed;
        options.threads = shared.threads;
        const auto extended = extend_embeddings(load_embeddings(emb_args.emb_in), older, outcome, options);
        save_embeddings(extended, emb_args.emb_out);
        if (!emb_args.text_export.empty()) write_output(emb_args.text_export, embeddings_text(extended));
        log.info("extended embeddings " + std::to_string(older.vocab().size()) + " -> " +
                 std::to_string(extended.rows()) + " rows");
    });

    // random-embeddings --------------------------------------------------
    struct {
        std::string tokenizer, out;
        std::size_t dim = 64;
        double stddev = 0.02;
        std::uint64_t seed = 0;
    } rand_args;
    auto* rand_cmd = app.add_subcommand("random-embeddings", "Write a seeded random EMB1 matrix for a tokenizer");
    rand_cmd->add_option("tokenizer_dir", rand_args.tokenizer, "Tokenizer directory")->required();
    rand_cmd->add_option("out", rand_args.out, "Output EMB1 matrix")->required();
    opt(rand_cmd, "dim", rand_args.dim, "Embedding dimension")->check(CLI::PositiveNumber);
    opt(rand_cmd, "std", rand_args.stddev, "Standard deviation")->check(CLI::NonNegativeNumber);
    opt(rand_cmd, "seed", rand_args.seed, "Seed");
    rand_cmd->callback([&] {
        require_dir(rand_args.tokenizer);
        const auto tok = load(rand_args.tokenizer);
        save_embeddings(random_embeddings(tok.vocab().size(), rand_args.dim, rand_args.stddev, rand_args.seed),
                        rand_args.out);
    });

    // pppl ---------------------------------------------------------------
    struct {
        std::string tokenizer, corpus, scorer = "unigram", fit_corpus, out;
    } pppl_args;
    auto* pppl_cmd = app.add_subcommand("pppl", "Pseudo-perplexity of a corpus under a masked scorer");
    pppl_cmd->add_option("tokenizer_dir", pppl_args.tokenizer, "Tokenizer directory")->required();
    pppl_cmd->add_option("corpus", pppl_args.corpus, "Corpus to evaluate")->required();
    opt(pppl_cmd, "scorer", pppl_args.scorer, "unigram or uniform")->check(CLI::IsMember({"unigram", "uniform"}));
    opt(pppl_cmd, "fit-corpus", pppl_args.fit_corpus, "Corpus the unigram scorer is fit on");
    opt(pppl_cmd, "out", pppl_args.out, "Report path (default: stdout)");
    pppl_cmd->callback([&] {
        require_dir(pppl_args.tokenizer);
        require_file(pppl_args.corpus);
        const auto tok = load(pppl_args.tokenizer);
        auto encode_all = [&](const std::string& path) {
            std::vector<std::vector<TokenId>> seqs;
            for (const auto& d : corpus(path, shared)) seqs.push_back(tok.encode(d));
            return seqs;
        };
        const auto eval = encode_all(pppl_args.corpus);
        PllOptions options;
        options.skip_ids = tok.special_ids();
        PPPLReport report;
        if (pppl_args.scorer == "uniform") {
            report = pppl(UniformScorer(tok.vocab().size()), eval, options, shared.threads);
        } else {
            if (pppl_args.fit_corpus.empty()) throw CLI::ValidationError("--fit-corpus", "required for --scorer=unigram");
            require_file(pppl_args.fit_corpus);
            const auto fit = encode_all(pppl_args.fit_corpus);
            report = pppl(UnigramScorer(tok.vocab().size(), fit, options.skip_ids), eval, options, shared.threads);
        }
        write_output(pppl_args.out, to_json(report));
    });

    // validate -----------------------------------------------------------
    std::string validate_dir;
    auto* validate_cmd = app.add_subcommand("validate", "Check a tokenizer directory's invariants");
    validate_cmd->add_option("tokenizer_dir", validate_dir, "Tokenizer directory")->required();
    validate_cmd->callback([&] {
        require_dir(validate_dir);
        const auto tok = Tokenizer(parse_vocab_json(detail::read_file(fs::path(validate_dir) / kVocabFile)),
                                   parse_merges_txt(detail::read_file(fs::path(validate_dir) / kMergesFile)),
                                   fs::exists(fs::path(validate_dir) / kSpecialsFile)
                                       ? parse_specials_json(detail::read_file(fs::path(validate_dir) / kSpecialsFile))
                                       : SpecialTokens{});
        const auto violations = validate(tok);
        for (const auto& v : violations) std::cout << v.to_string() << "\n";
        if (!violations.empty()) {
            log.error(std::to_string(violations.size()) + " violation(s) in " + validate_dir);
        } else {
            std::cout << "ok\n";
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        log.error(std::string("usage: ") + e.what());
        return 2;
    } catch (const ValidationError& e) {
        log.error(e.what());
        for (const auto& d : e.details()) log.error(d);
        return 1;
    } catch (const std::exception& e) {
        log.error(e.what());
        return 1;
    }
    return log.failed ? 1 : 0;
}
