#include <catch2/catch_amalgamated.hpp>

#include "eosedit/unicode.hpp"
#include "test_support.hpp"

using namespace eosedit;

// Every case in unicode_cases.json was produced by the reference
// normalizer/splitter; the implementation must agree byte for byte.
TEST_CASE("nfc, lowercase and full normalization match the reference", "[unicode]") {
    auto cases = testsup::load_json(testsup::fixture_dir() / "unicode_cases.json");
    REQUIRE(cases.size() > 300);
    size_t checked = 0;
    for (const auto& c : cases) {
        const std::string raw = c.at("raw").get<std::string>();
        INFO("raw: " << raw);
        CHECK(unicode::utf8_encode(unicode::nfc(unicode::utf8_decode(raw))) ==
              c.at("nfc").get<std::string>());
        CHECK(unicode::utf8_encode(unicode::lowercase(unicode::utf8_decode(raw))) ==
              c.at("lower").get<std::string>());
        CHECK(unicode::normalize_utf8(raw) == c.at("normalized").get<std::string>());
        ++checked;
    }
    REQUIRE(checked == cases.size());
}

TEST_CASE("pattern split matches the reference pre-tokenizer", "[unicode]") {
    auto cases = testsup::load_json(testsup::fixture_dir() / "unicode_cases.json");
    for (const auto& c : cases) {
        const std::string normalized = c.at("normalized").get<std::string>();
        INFO("normalized: " << normalized);
        auto words = unicode::split_words(unicode::utf8_decode(normalized));
        auto expect = c.at("words").get<std::vector<std::string>>();
        CHECK(words == expect);
    }
}

TEST_CASE("utf8 round trip and invalid byte handling", "[unicode]") {
    const std::string good = "caf\xc3\xa9 \xe6\x97\xa5 \xf0\x9f\x98\x80";
    CHECK(unicode::utf8_encode(unicode::utf8_decode(good)) == good);

    // lone continuation, truncated sequence, overlong form
    auto bad1 = unicode::utf8_decode("\x80");
    REQUIRE(bad1.size() == 1);
    CHECK(bad1[0] == unicode::kReplacement);
    auto bad2 = unicode::utf8_decode("\xe6\x97");
    CHECK(bad2[0] == unicode::kReplacement);
    auto bad3 = unicode::utf8_decode("\xc0\xaf");  // overlong '/'
    CHECK(bad3[0] == unicode::kReplacement);
}

TEST_CASE("whitespace set is the regex \\s set", "[unicode]") {
    for (char32_t cp : {U'\t', U'\n', U'\v', U'\f', U'\r', U' ', char32_t(0x85), char32_t(0xA0),
                        char32_t(0x1680), char32_t(0x2000), char32_t(0x200A), char32_t(0x2028),
                        char32_t(0x2029), char32_t(0x202F), char32_t(0x205F), char32_t(0x3000)}) {
        CHECK(unicode::is_whitespace(cp));
    }
    // the C0 separators are not White_Space and must survive normalization
    for (char32_t cp : {char32_t(0x1C), char32_t(0x1D), char32_t(0x1E), char32_t(0x1F),
                        char32_t(0x200B)}) {
        CHECK_FALSE(unicode::is_whitespace(cp));
    }
}

TEST_CASE("hangul composition round trip", "[unicode]") {
    // L+V+T jamo compose to a syllable and decompose back
    std::vector<char32_t> jamo = {0x1100, 0x1161, 0x11A8};
    auto composed = unicode::nfc(jamo);
    REQUIRE(composed.size() == 1);
    CHECK(composed[0] == 0xAC01);
    auto decomposed = unicode::nfd(composed);
    CHECK(decomposed == jamo);
}
