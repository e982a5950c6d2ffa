// Trains an old and a new tokenizer on two tiny corpora, merges them and
// prints what changed.
//
//   evolve_demo [old_corpus.jsonl new_corpus.jsonl]

#include <iostream>

#include "tokevolve/tokevolve.hpp"

using namespace tokevolve;

int main(int argc, char** argv) {
    std::vector<std::string> old_docs{
        "De bakker verkoopt verse broodjes. De markt is op zaterdag.",
        "Het weer is mooi en de kinderen spelen buiten.",
        "De trein naar Utrecht heeft vertraging.",
    };
    std::vector<std::string> new_docs{
        "Het coronavirus verspreidt zich snel. De coronamaatregelen worden strenger.",
        "Corona houdt iedereen bezig. De corona-app is uit.",
        "Het RIVM meldt nieuwe besmettingen met corona.",
    };
    if (argc == 3) {
        old_docs = read_corpus(std::filesystem::path(argv[1]), CorpusFormat::jsonl);
        new_docs = read_corpus(std::filesystem::path(argv[2]), CorpusFormat::jsonl);
    }
    auto all_docs = old_docs;
    all_docs.insert(all_docs.end(), new_docs.begin(), new_docs.end());

    TrainConfig config;
    config.target_vocab_size = 320;
    const auto older = train(old_docs, config);
    config.target_vocab_size = 360;
    const auto newer = train(all_docs, config);
    const auto outcome = merge_tokenizers(older, newer);

    std::cout << "old vocabulary:    " << older.vocab().size() << "\n"
              << "merged vocabulary: " << outcome.merged.vocab().size() << " (+" << outcome.added_tokens.size()
              << ")\n\n";
    std::cout << to_tsv(build_diff_report(outcome, new_docs)) << "\n";

    const std::string probe = "De coronamaatregelen gelden voor iedereen.";
    for (const auto* tok : {&older, &outcome.merged}) {
        const auto ids = tok->encode(probe);
        std::cout << ids.size() << " tokens:";
        for (auto id : ids) std::cout << " " << tok->vocab().token(id);
        std::cout << "\n";
    }

    const auto e_old = random_embeddings(older.vocab().size(), 8, 0.02, 1);
    const auto e_new = extend_embeddings(e_old, older, outcome);
    std::cout << "\nembeddings: " << e_old.rows() << " -> " << e_new.rows() << " rows\n";
    return 0;
}
