#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "eosedit/detail/unicode_tables.hpp"

// Unicode machinery behind the tokenizer's text normalization: UTF-8
// transcoding, NFC, full lowercase mapping and the character classes used by
// the splitting pattern. Everything here is locale-independent and pure.

namespace eosedit::unicode {

inline constexpr char32_t kReplacement = 0xFFFD;

inline std::vector<char32_t> utf8_decode(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        char32_t cp = 0;
        size_t len = 0;
        if (c < 0x80) {
            cp = c;
            len = 1;
        } else if ((c >> 5) == 0x6) {
            cp = c & 0x1F;
            len = 2;
        } else if ((c >> 4) == 0xE) {
            cp = c & 0x0F;
            len = 3;
        } else if ((c >> 3) == 0x1E) {
            cp = c & 0x07;
            len = 4;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        if (i + len > s.size()) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        bool ok = true;
        for (size_t k = 1; k < len; ++k) {
            unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc >> 6) != 0x2) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        // reject overlong forms, surrogates and out-of-range values
        if (ok) {
            if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
                (cp >= 0xD800 && cp <= 0xDFFF)) {
                ok = false;
            }
        }
        if (!ok) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void utf8_append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string utf8_encode(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) utf8_append(out, cp);
    return out;
}

namespace detail2 {

inline bool in_ranges(const eosedit::detail::CpRange* ranges, size_t n, char32_t cp) {
    size_t lo = 0, hi = n;
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (cp < ranges[mid].first) {
            hi = mid;
        } else if (cp > ranges[mid].last) {
            lo = mid + 1;
        } else {
            return true;
        }
    }
    return false;
}

}  // namespace detail2

inline bool is_letter(char32_t cp) {
    using namespace eosedit::detail;
    return detail2::in_ranges(kLetterRanges, kLetterRanges_count, cp);
}

inline bool is_number(char32_t cp) {
    using namespace eosedit::detail;
    return detail2::in_ranges(kNumberRanges, kNumberRanges_count, cp);
}

// Unicode White_Space, the set regex engines use for \s.
inline bool is_whitespace(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

inline uint8_t combining_class(char32_t cp) {
    using namespace eosedit::detail;
    size_t lo = 0, hi = kCcc_count;
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (kCcc[mid].cp < cp) {
            lo = mid + 1;
        } else if (kCcc[mid].cp > cp) {
            hi = mid;
        } else {
            return kCcc[mid].ccc;
        }
    }
    return 0;
}

namespace hangul {
inline constexpr char32_t SBase = 0xAC00, LBase = 0x1100, VBase = 0x1161, TBase = 0x11A7;
inline constexpr int LCount = 19, VCount = 21, TCount = 28;
inline constexpr int NCount = VCount * TCount, SCount = LCount * NCount;
}  // namespace hangul

namespace detail2 {

inline const eosedit::detail::DecompEntry* find_decomp(char32_t cp) {
    using namespace eosedit::detail;
    size_t lo = 0, hi = kDecomp_count;
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (kDecomp[mid].cp < cp) {
            lo = mid + 1;
        } else if (kDecomp[mid].cp > cp) {
            hi = mid;
        } else {
            return &kDecomp[mid];
        }
    }
    return nullptr;
}

inline void decompose_into(char32_t cp, std::vector<char32_t>& out) {
    using namespace hangul;
    if (cp >= SBase && cp < SBase + static_cast<char32_t>(SCount)) {
        int s = static_cast<int>(cp - SBase);
        out.push_back(LBase + s / NCount);
        out.push_back(VBase + (s % NCount) / TCount);
        if (s % TCount != 0) out.push_back(TBase + s % TCount);
        return;
    }
    if (const auto* e = find_decomp(cp)) {
        decompose_into(e->first, out);
        if (e->second != 0) decompose_into(e->second, out);
        return;
    }
    out.push_back(cp);
}

inline char32_t compose_pair(char32_t a, char32_t b) {
    using namespace hangul;
    if (a >= LBase && a < LBase + static_cast<char32_t>(LCount) &&
        b >= VBase && b < VBase + static_cast<char32_t>(VCount)) {
        return SBase + ((a - LBase) * VCount + (b - VBase)) * TCount;
    }
    if (a >= SBase && a < SBase + static_cast<char32_t>(SCount) &&
        (a - SBase) % TCount == 0 &&
        b > TBase && b < TBase + static_cast<char32_t>(TCount)) {
        return a + (b - TBase);
    }
    using namespace eosedit::detail;
    uint64_t key = (static_cast<uint64_t>(a) << 21) | b;
    size_t lo = 0, hi = kCompose_count;
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (kCompose[mid].key < key) {
            lo = mid + 1;
        } else if (kCompose[mid].key > key) {
            hi = mid;
        } else {
            return kCompose[mid].composed;
        }
    }
    return 0;
}

}  // namespace detail2

inline std::vector<char32_t> nfd(const std::vector<char32_t>& in) {
    std::vector<char32_t> out;
    out.reserve(in.size() + 8);
    for (char32_t cp : in) detail2::decompose_into(cp, out);
    // canonical ordering: stable-sort maximal runs of nonzero combining class
    size_t i = 0;
    while (i < out.size()) {
        if (combining_class(out[i]) == 0) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < out.size() && combining_class(out[j]) != 0) ++j;
        std::stable_sort(out.begin() + i, out.begin() + j,
                         [](char32_t a, char32_t b) { return combining_class(a) < combining_class(b); });
        i = j;
    }
    return out;
}

inline std::vector<char32_t> nfc(const std::vector<char32_t>& in) {
    std::vector<char32_t> d = nfd(in);
    if (d.empty()) return d;
    std::vector<char32_t> out;
    out.reserve(d.size());
    ptrdiff_t last_starter = -1;
    for (char32_t cp : d) {
        uint8_t cc = combining_class(cp);
        if (last_starter >= 0) {
            bool directly_follows = out.size() == static_cast<size_t>(last_starter) + 1;
            bool blocked = !directly_follows && combining_class(out.back()) >= cc;
            if (!blocked) {
                if (char32_t comp = detail2::compose_pair(out[last_starter], cp)) {
                    out[static_cast<size_t>(last_starter)] = comp;
                    continue;
                }
            }
        }
        if (cc == 0) last_starter = static_cast<ptrdiff_t>(out.size());
        out.push_back(cp);
    }
    return out;
}

// Full lowercase mapping (1 -> up to 3 code points), context-free.
inline void lower_into(char32_t cp, std::vector<char32_t>& out) {
    using namespace eosedit::detail;
    size_t lo = 0, hi = kLower_count;
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (kLower[mid].cp < cp) {
            lo = mid + 1;
        } else if (kLower[mid].cp > cp) {
            hi = mid;
        } else {
            for (char32_t m : kLower[mid].lower) {
                if (m) out.push_back(m);
            }
            return;
        }
    }
    out.push_back(cp);
}

inline std::vector<char32_t> lowercase(const std::vector<char32_t>& in) {
    std::vector<char32_t> out;
    out.reserve(in.size());
    for (char32_t cp : in) lower_into(cp, out);
    return out;
}

// Replace every maximal whitespace run with a single U+0020. No stripping;
// the splitting pattern never matches spaces, so edges are irrelevant.
inline std::vector<char32_t> collapse_whitespace(const std::vector<char32_t>& in) {
    std::vector<char32_t> out;
    out.reserve(in.size());
    size_t i = 0;
    while (i < in.size()) {
        if (is_whitespace(in[i])) {
            out.push_back(U' ');
            while (i < in.size() && is_whitespace(in[i])) ++i;
        } else {
            out.push_back(in[i]);
            ++i;
        }
    }
    return out;
}

// NFC, then whitespace collapse, then lowercase, in that order.
inline std::vector<char32_t> normalize(std::string_view text) {
    return lowercase(collapse_whitespace(nfc(utf8_decode(text))));
}

inline std::string normalize_utf8(std::string_view text) {
    return utf8_encode(normalize(text));
}

// The CLIP word-splitting pattern over normalized text:
//   's|'t|'re|'ve|'m|'ll|'d | [\p{L}]+ | [\p{N}] | [^\s\p{L}\p{N}]+
// applied left to right with the alternation order above. Special-token
// literals are intentionally not matched; they tokenize as plain text.
inline std::vector<std::string> split_words(const std::vector<char32_t>& cps) {
    std::vector<std::string> words;
    size_t i = 0;
    const size_t n = cps.size();
    auto emit = [&](size_t from, size_t to) {
        std::string w;
        for (size_t k = from; k < to; ++k) utf8_append(w, cps[k]);
        words.push_back(std::move(w));
    };
    while (i < n) {
        char32_t c = cps[i];
        if (is_whitespace(c)) {
            ++i;
            continue;
        }
        if (c == U'\'' && i + 1 < n) {
            char32_t c1 = cps[i + 1];
            char32_t c2 = i + 2 < n ? cps[i + 2] : 0;
            if ((c1 == U'r' && c2 == U'e') || (c1 == U'v' && c2 == U'e') ||
                (c1 == U'l' && c2 == U'l')) {
                emit(i, i + 3);
                i += 3;
                continue;
            }
            if (c1 == U's' || c1 == U't' || c1 == U'm' || c1 == U'd') {
                emit(i, i + 2);
                i += 2;
                continue;
            }
        }
        if (is_letter(c)) {
            size_t j = i + 1;
            while (j < n && is_letter(cps[j])) ++j;
            emit(i, j);
            i = j;
            continue;
        }
        if (is_number(c)) {
            emit(i, i + 1);
            ++i;
            continue;
        }
        size_t j = i + 1;
        while (j < n && !is_whitespace(cps[j]) && !is_letter(cps[j]) && !is_number(cps[j])) ++j;
        emit(i, j);
        i = j;
    }
    return words;
}

}  // namespace eosedit::unicode
