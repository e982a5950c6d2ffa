#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tokevolve/detail/utf8.hpp"
#include "tokevolve/error.hpp"

namespace tokevolve {

enum class CorpusFormat {
    jsonl,  ///< one JSON object per line with a "text" string field
    text,   ///< one document per line, taken verbatim
};

/// Reads one document per line. Blank lines are skipped in both formats.
/// Throws ParseError naming the line of the first unreadable record.
inline std::vector<std::string> read_corpus(std::istream& in, CorpusFormat format,
                                            const std::string& source = "<corpus>") {
    std::vector<std::string> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (format == CorpusFormat::text) {
            if (const auto bad = detail::find_invalid_utf8(line)) {
                throw ParseError(source, lineno, "invalid UTF-8 at byte " + std::to_string(*bad));
            }
            docs.push_back(std::move(line));
            continue;
        }
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(source, lineno, "malformed JSON at byte " + std::to_string(e.byte));
        }
        if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
            throw ParseError(source, lineno, "record has no string field \"text\"");
        }
        docs.push_back(record["text"].get<std::string>());
    }
    return docs;
}

inline std::vector<std::string> read_corpus(const std::filesystem::path& path, CorpusFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open corpus " + path.string());
    return read_corpus(in, format, path.string());
}

inline CorpusFormat parse_corpus_format(const std::string& name) {
    if (name == "jsonl") return CorpusFormat::jsonl;
    if (name == "text") return CorpusFormat::text;
    throw Error("unknown corpus format '" + name + "' (expected jsonl or text)");
}

}  // namespace tokevolve
