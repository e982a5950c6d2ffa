#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tokevolve/error.hpp"
#include "tokevolve/tokenizer.hpp"
#include "tokevolve/validate.hpp"

namespace tokevolve {

inline constexpr const char* kVocabFile = "vocab.json";
inline constexpr const char* kMergesFile = "merges.txt";
inline constexpr const char* kSpecialsFile = "special_tokens_map.json";
inline constexpr const char* kMergesHeader = "#version: 0.2";

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << data;
    if (!out.flush()) throw Error("failed writing " + path.string());
}

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

inline nlohmann::ordered_json parse_json(const std::string& text, const std::string& source) {
    try {
        return nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(source, line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1),
                         "malformed JSON at byte " + std::to_string(e.byte));
    }
}

inline std::string special_key(SpecialRole role) { return std::string(role_name(role)) + "_token"; }

}  // namespace detail

/// Parses the contents of a vocab.json file: a flat object of token -> ID whose
/// IDs cover [0, n) exactly once.
inline Vocab parse_vocab_json(const std::string& text, const std::string& source = kVocabFile) {
    const auto doc = detail::parse_json(text, source);
    if (!doc.is_object()) throw ParseError(source, 1, "expected a JSON object of token -> id");
    std::vector<std::string> tokens(doc.size());
    std::vector<bool> seen(doc.size(), false);
    for (const auto& [token, value] : doc.items()) {
        if (!value.is_number_integer() || value.get<long long>() < 0) {
            throw ParseError(source, 1, "id of token '" + token + "' is not a non-negative integer");
        }
        const auto id = value.get<unsigned long long>();
        if (id >= tokens.size()) {
            throw ParseError(source, 1, "id " + std::to_string(id) + " of token '" + token +
                                            "' outside contiguous range [0, " + std::to_string(tokens.size()) + ")");
        }
        if (seen[id]) throw ParseError(source, 1, "id " + std::to_string(id) + " assigned twice");
        seen[id] = true;
        tokens[id] = token;
    }
    return Vocab(std::move(tokens));
}

/// Parses merges.txt contents: an optional leading "#version" comment, then one
/// "<left> <right>" rule per line in rank order. Blank lines are ignored.
inline std::vector<MergeRule> parse_merges_txt(const std::string& text, const std::string& source = kMergesFile) {
    std::vector<MergeRule> rules;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 && line.starts_with("#version")) continue;
        if (line.empty()) continue;
        const auto sp = line.find(' ');
        if (sp == std::string::npos || sp == 0 || sp + 1 == line.size() || line.find(' ', sp + 1) != std::string::npos) {
            throw ParseError(source, lineno, "expected '<left> <right>' separated by exactly one space");
        }
        rules.push_back(make_rule(line.substr(0, sp), line.substr(sp + 1), static_cast<std::uint32_t>(rules.size())));
    }
    return rules;
}

inline std::string vocab_json(const Vocab& vocab) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (TokenId id = 0; id < vocab.size(); ++id) doc[vocab.tokens()[id]] = id;
    return doc.dump(-1, ' ', false) + "\n";
}

inline std::string merges_txt(const std::vector<MergeRule>& merges) {
    std::string out = std::string(kMergesHeader) + "\n";
    for (const auto& r : merges) out += r.left + " " + r.right + "\n";
    return out;
}

inline std::string specials_json(const SpecialTokens& specials) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (const auto role : kSpecialRoles) doc[detail::special_key(role)] = specials.text(role);
    return doc.dump(2, ' ', false) + "\n";
}

inline SpecialTokens parse_specials_json(const std::string& text, const std::string& source = kSpecialsFile) {
    const auto doc = detail::parse_json(text, source);
    if (!doc.is_object()) throw ParseError(source, 1, "expected a JSON object");
    SpecialTokens specials;
    for (const auto role : kSpecialRoles) {
        const auto key = detail::special_key(role);
        if (!doc.contains(key)) continue;
        if (!doc[key].is_string()) throw ParseError(source, 1, key + " must be a string");
        specials.text(role) = doc[key].get<std::string>();
    }
    return specials;
}

/// Writes vocab.json, merges.txt and special_tokens_map.json into `dir`,
/// creating it if needed.
inline void save(const Tokenizer& tok, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
    detail::write_file(dir / kVocabFile, vocab_json(tok.vocab()));
    detail::write_file(dir / kMergesFile, merges_txt(tok.merges()));
    detail::write_file(dir / kSpecialsFile, specials_json(tok.specials()));
}

/// Loads a tokenizer directory. The specials file is optional (defaults apply).
/// Throws ParseError on malformed files and ValidationError when the result
/// breaks any tokenizer invariant.
inline Tokenizer load(const std::filesystem::path& dir) {
    const auto vocab_path = dir / kVocabFile;
    const auto merges_path = dir / kMergesFile;
    const auto specials_path = dir / kSpecialsFile;
    Vocab vocab = parse_vocab_json(detail::read_file(vocab_path), vocab_path.string());
    auto merges = parse_merges_txt(detail::read_file(merges_path), merges_path.string());
    SpecialTokens specials;
    if (std::filesystem::exists(specials_path)) {
        specials = parse_specials_json(detail::read_file(specials_path), specials_path.string());
    }
    for (const auto& r : merges) {
        for (const std::string* t : {&r.left, &r.right, &r.result}) {
            if (!vocab.contains(*t)) {
                throw ValidationError(merges_path.string() + ": rule #" + std::to_string(r.rank) + " ('" + r.left +
                                          " " + r.right + "') references token '" + *t + "' absent from vocabulary",
                                      {});
            }
        }
    }
    Tokenizer tok(std::move(vocab), std::move(merges), std::move(specials));
    require_valid(tok, dir.string());
    return tok;
}

}  // namespace tokevolve
