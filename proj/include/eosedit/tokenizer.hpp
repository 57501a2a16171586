#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "eosedit/errors.hpp"
#include "eosedit/unicode.hpp"

// CLIP byte-pair-encoding tokenizer. Token layout is always
// [<SOS>, pieces..., <EOS>, <EOS> pad...] with a fixed context length.

namespace eosedit {

inline constexpr std::string_view kSosToken = "<|startoftext|>";
inline constexpr std::string_view kEosToken = "<|endoftext|>";

struct TokenSequence {
    std::vector<int> ids;  // length == context_len
    int eos_index = 0;     // first occurrence of eos_id
    int content_len = 0;   // eos_index - 1
};

// The GPT-2 byte <-> unicode alphabet: printable latin-1 bytes map to
// themselves, the rest shift into U+0100..U+0143.
struct ByteAlphabet {
    std::array<std::string, 256> byte_to_sym;
    std::unordered_map<char32_t, uint8_t> cp_to_byte;

    ByteAlphabet() {
        std::vector<int> bs;
        for (int b = '!'; b <= '~'; ++b) bs.push_back(b);
        for (int b = 0xA1; b <= 0xAC; ++b) bs.push_back(b);
        for (int b = 0xAE; b <= 0xFF; ++b) bs.push_back(b);
        std::array<bool, 256> direct{};
        for (int b : bs) direct[static_cast<size_t>(b)] = true;
        int shifted = 0;
        for (int b = 0; b < 256; ++b) {
            char32_t cp;
            if (direct[static_cast<size_t>(b)]) {
                cp = static_cast<char32_t>(b);
            } else {
                cp = static_cast<char32_t>(256 + shifted++);
            }
            std::string sym;
            unicode::utf8_append(sym, cp);
            byte_to_sym[static_cast<size_t>(b)] = sym;
            cp_to_byte.emplace(cp, static_cast<uint8_t>(b));
        }
    }

    static const ByteAlphabet& instance() {
        static const ByteAlphabet alphabet;
        return alphabet;
    }
};

struct Vocabulary {
    std::unordered_map<std::string, int> token_to_id;
    std::vector<std::string> id_to_token;
    std::unordered_map<std::string, int> merge_rank;  // "left right" -> rank
    int merge_count = 0;
    int sos_id = -1;
    int eos_id = -1;
    int context_len = 77;

    int vocab_size() const { return static_cast<int>(id_to_token.size()); }
};

namespace detail_tok {

inline std::string merge_key(const std::string& a, const std::string& b) {
    std::string k;
    k.reserve(a.size() + b.size() + 1);
    k += a;
    k += ' ';
    k += b;
    return k;
}

}  // namespace detail_tok

inline Vocabulary load_vocabulary(std::istream& vocab_source, std::istream& merges_source,
                                  int context_len = 77) {
    if (context_len < 2) {
        throw parameter_error("context_len must be at least 2");
    }
    Vocabulary v;
    v.context_len = context_len;

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(vocab_source);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("vocab: ") + e.what());
    }
    if (!doc.is_object()) {
        throw parse_error("vocab: expected a JSON object mapping token to id");
    }

    v.token_to_id.reserve(doc.size());
    int max_id = -1;
    for (const auto& [token, value] : doc.items()) {
        if (!value.is_number_integer()) {
            throw parse_error("vocab: id for token '" + token + "' is not an integer");
        }
        int id = value.get<int>();
        if (id < 0) {
            throw integrity_error("vocab: negative id for token '" + token + "'");
        }
        if (!v.token_to_id.emplace(token, id).second) {
            throw integrity_error("vocab: duplicate token '" + token + "'");
        }
        max_id = std::max(max_id, id);
    }
    if (v.token_to_id.empty()) {
        throw integrity_error("vocab: empty");
    }
    if (max_id + 1 != static_cast<int>(v.token_to_id.size())) {
        throw integrity_error("vocab: ids are not dense in [0, vocab_size)");
    }
    v.id_to_token.assign(v.token_to_id.size(), std::string());
    std::vector<bool> seen(v.token_to_id.size(), false);
    for (const auto& [token, id] : v.token_to_id) {
        if (seen[static_cast<size_t>(id)]) {
            throw integrity_error("vocab: duplicate id " + std::to_string(id));
        }
        seen[static_cast<size_t>(id)] = true;
        v.id_to_token[static_cast<size_t>(id)] = token;
    }

    auto find_special = [&](std::string_view name) {
        auto it = v.token_to_id.find(std::string(name));
        if (it == v.token_to_id.end()) {
            throw integrity_error("vocab: missing special token " + std::string(name));
        }
        return it->second;
    };
    v.sos_id = find_special(kSosToken);
    v.eos_id = find_special(kEosToken);
    if (v.sos_id == v.eos_id) {
        throw integrity_error("vocab: sos and eos map to the same id");
    }

    // the full byte alphabet (plain and end-of-word forms) must be present,
    // otherwise encode would not be total
    const auto& alphabet = ByteAlphabet::instance();
    for (const auto& sym : alphabet.byte_to_sym) {
        if (!v.token_to_id.count(sym) || !v.token_to_id.count(sym + "</w>")) {
            throw integrity_error("vocab: missing byte-alphabet token '" + sym + "'");
        }
    }

    std::string line;
    int line_no = 0;
    int rank = 0;
    while (std::getline(merges_source, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line[0] == '#') continue;  // "#version: ..." header
        size_t space = line.find(' ');
        if (space == std::string::npos || space == 0 || space + 1 >= line.size() ||
            line.find(' ', space + 1) != std::string::npos) {
            throw parse_error("merges line " + std::to_string(line_no) +
                              ": expected exactly two space-separated symbols");
        }
        std::string left = line.substr(0, space);
        std::string right = line.substr(space + 1);
        if (!v.token_to_id.count(left) || !v.token_to_id.count(right)) {
            throw integrity_error("merges line " + std::to_string(line_no) +
                                  ": symbol not present in vocab");
        }
        if (!v.token_to_id.count(left + right)) {
            throw integrity_error("merges line " + std::to_string(line_no) +
                                  ": merged token not present in vocab");
        }
        if (!v.merge_rank.emplace(detail_tok::merge_key(left, right), rank).second) {
            throw integrity_error("merges line " + std::to_string(line_no) + ": duplicate pair");
        }
        ++rank;
    }
    v.merge_count = rank;
    return v;
}

inline Vocabulary load_vocabulary_files(const std::string& vocab_path,
                                        const std::string& merges_path, int context_len = 77);

namespace detail_tok {

// Greedy merge-by-rank over one pattern word, openai style: the last byte
// symbol carries the </w> suffix, then the lowest-ranked adjacent pair is
// merged (all occurrences, left to right) until none remains.
inline void bpe_word(const Vocabulary& v, std::string_view word, std::vector<int>& out) {
    const auto& alphabet = ByteAlphabet::instance();
    std::vector<std::string> symbols;
    symbols.reserve(word.size());
    for (unsigned char b : word) {
        symbols.push_back(alphabet.byte_to_sym[b]);
    }
    if (symbols.empty()) return;
    symbols.back() += "</w>";

    while (symbols.size() > 1) {
        int best_rank = std::numeric_limits<int>::max();
        size_t best = 0;
        for (size_t k = 0; k + 1 < symbols.size(); ++k) {
            auto it = v.merge_rank.find(merge_key(symbols[k], symbols[k + 1]));
            if (it != v.merge_rank.end() && it->second < best_rank) {
                best_rank = it->second;
                best = k;
            }
        }
        if (best_rank == std::numeric_limits<int>::max()) break;

        const std::string first = symbols[best];
        const std::string second = symbols[best + 1];
        std::vector<std::string> merged;
        merged.reserve(symbols.size());
        size_t k = 0;
        while (k < symbols.size()) {
            if (k + 1 < symbols.size() && symbols[k] == first && symbols[k + 1] == second) {
                merged.push_back(first + second);
                k += 2;
            } else {
                merged.push_back(std::move(symbols[k]));
                ++k;
            }
        }
        symbols = std::move(merged);
    }

    for (const auto& sym : symbols) {
        auto it = v.token_to_id.find(sym);
        if (it == v.token_to_id.end()) {
            throw integrity_error("bpe piece '" + sym + "' missing from vocab");
        }
        out.push_back(it->second);
    }
}

}  // namespace detail_tok

// Tokenize arbitrary text. Never fails: unknown characters flow through the
// byte alphabet, overlong prompts are truncated to context_len - 2 pieces
// with <EOS> forced at the last position.
inline TokenSequence encode(const Vocabulary& v, std::string_view text) {
    std::vector<char32_t> cps = unicode::normalize(text);
    std::vector<std::string> words = unicode::split_words(cps);

    const size_t max_pieces = static_cast<size_t>(v.context_len - 2);
    std::vector<int> pieces;
    for (const auto& w : words) {
        detail_tok::bpe_word(v, w, pieces);
        if (pieces.size() >= max_pieces) break;
    }
    if (pieces.size() > max_pieces) pieces.resize(max_pieces);

    TokenSequence seq;
    seq.ids.reserve(static_cast<size_t>(v.context_len));
    seq.ids.push_back(v.sos_id);
    seq.ids.insert(seq.ids.end(), pieces.begin(), pieces.end());
    seq.ids.push_back(v.eos_id);
    seq.eos_index = static_cast<int>(pieces.size()) + 1;
    seq.content_len = static_cast<int>(pieces.size());
    seq.ids.resize(static_cast<size_t>(v.context_len), v.eos_id);
    return seq;
}

// Normalized text of the content tokens only; specials and padding stripped.
inline std::string decode(const Vocabulary& v, const TokenSequence& seq) {
    std::string joined;
    for (size_t pos = 0; pos < seq.ids.size(); ++pos) {
        int id = seq.ids[pos];
        if (id < 0 || id >= v.vocab_size()) {
            throw input_error("token id " + std::to_string(id) + " at position " +
                              std::to_string(pos) + " is out of range");
        }
        if (id == v.sos_id || id == v.eos_id) continue;
        joined += v.id_to_token[static_cast<size_t>(id)];
    }
    // "</w>" marks word ends; everything else is byte-alphabet symbols
    std::string spaced;
    size_t i = 0;
    while (i < joined.size()) {
        if (joined.compare(i, 4, "</w>") == 0) {
            spaced += ' ';
            i += 4;
        } else {
            spaced += joined[i];
            ++i;
        }
    }
    const auto& alphabet = ByteAlphabet::instance();
    std::string bytes;
    for (char32_t cp : unicode::utf8_decode(spaced)) {
        auto it = alphabet.cp_to_byte.find(cp);
        if (it != alphabet.cp_to_byte.end()) {
            bytes.push_back(static_cast<char>(it->second));
        } else {
            unicode::utf8_append(bytes, cp);
        }
    }
    size_t begin = bytes.find_first_not_of(' ');
    if (begin == std::string::npos) return "";
    size_t end = bytes.find_last_not_of(' ');
    return bytes.substr(begin, end - begin + 1);
}

inline int eos_index_of(const TokenSequence& seq, const Vocabulary& v) {
    for (size_t i = 0; i < seq.ids.size(); ++i) {
        if (seq.ids[i] == v.eos_id) return static_cast<int>(i);
    }
    throw integrity_error("token sequence contains no <EOS>");
}

inline Vocabulary load_vocabulary_files(const std::string& vocab_path,
                                        const std::string& merges_path, int context_len) {
    std::ifstream vf(vocab_path, std::ios::binary);
    if (!vf) throw io_error("cannot open vocab file: " + vocab_path);
    std::ifstream mf(merges_path, std::ios::binary);
    if (!mf) throw io_error("cannot open merges file: " + merges_path);
    return load_vocabulary(vf, mf, context_len);
}

}  // namespace eosedit
