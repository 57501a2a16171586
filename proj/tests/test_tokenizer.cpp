#include <random>
#include <sstream>
#include <thread>

#include <catch2/catch_amalgamated.hpp>

#include "eosedit/tokenizer.hpp"
#include "test_support.hpp"

using namespace eosedit;

namespace {

void check_layout(const Vocabulary& v, const TokenSequence& seq) {
    REQUIRE(static_cast<int>(seq.ids.size()) == v.context_len);
    CHECK(seq.ids[0] == v.sos_id);
    REQUIRE(seq.eos_index >= 1);
    REQUIRE(seq.eos_index <= v.context_len - 1);
    CHECK(seq.ids[static_cast<size_t>(seq.eos_index)] == v.eos_id);
    CHECK(seq.content_len == seq.eos_index - 1);
    for (int k = 1; k < seq.eos_index; ++k) {
        CHECK(seq.ids[static_cast<size_t>(k)] != v.eos_id);
        CHECK(seq.ids[static_cast<size_t>(k)] != v.sos_id);
    }
    for (int k = seq.eos_index; k < v.context_len; ++k) {
        CHECK(seq.ids[static_cast<size_t>(k)] == v.eos_id);
    }
}

// A minimal but valid vocabulary: full byte alphabet, both forms, specials.
std::string tiny_vocab_json(bool duplicate_id = false, bool drop_special = false) {
    const auto& alphabet = ByteAlphabet::instance();
    nlohmann::ordered_json j;
    int next = 0;
    for (const auto& sym : alphabet.byte_to_sym) j[sym] = next++;
    for (const auto& sym : alphabet.byte_to_sym) j[sym + "</w>"] = next++;
    j[std::string(kSosToken)] = next++;
    if (!drop_special) {
        j[std::string(kEosToken)] = duplicate_id ? 0 : next++;
    } else {
        j["<|filler|>"] = next++;
    }
    return j.dump();
}

Vocabulary tiny_vocab(const std::string& merges_text = "") {
    std::istringstream vs(tiny_vocab_json());
    std::istringstream ms(merges_text);
    return load_vocabulary(vs, ms, 77);
}

}  // namespace

TEST_CASE("profile vocabulary exposes the expected constants", "[tokenizer]") {
    const Vocabulary& v = testsup::vocab();
    CHECK(v.vocab_size() == 49408);
    CHECK(v.sos_id == 49406);
    CHECK(v.eos_id == 49407);
    CHECK(v.context_len == 77);
    CHECK(v.merge_count == 49408 - 512 - 2);
}

TEST_CASE("corpus oracle equivalence", "[tokenizer]") {
    const Vocabulary& v = testsup::vocab();
    auto doc = testsup::load_json(testsup::fixture_dir() / "token_corpus.json");
    REQUIRE(doc.at("cases").size() >= 200);
    size_t mismatches = 0;
    for (const auto& c : doc.at("cases")) {
        const std::string prompt = c.at("prompt").get<std::string>();
        const auto expect = c.at("ids").get<std::vector<int>>();
        TokenSequence seq = encode(v, prompt);
        if (seq.ids != expect) {
            ++mismatches;
            INFO("prompt: " << prompt);
            CHECK(seq.ids == expect);
        }
        CHECK(seq.eos_index == c.at("eos_index").get<int>());
    }
    REQUIRE(mismatches == 0);
}

TEST_CASE("vocabulary loader rejects broken inputs", "[tokenizer]") {
    SECTION("duplicate id") {
        std::istringstream vs(tiny_vocab_json(/*duplicate_id=*/true));
        std::istringstream ms("");
        CHECK_THROWS_AS(load_vocabulary(vs, ms), integrity_error);
    }
    SECTION("missing special token") {
        std::istringstream vs(tiny_vocab_json(false, /*drop_special=*/true));
        std::istringstream ms("");
        CHECK_THROWS_AS(load_vocabulary(vs, ms), integrity_error);
    }
    SECTION("malformed vocab json") {
        std::istringstream vs("{\"a\": }");
        std::istringstream ms("");
        CHECK_THROWS_AS(load_vocabulary(vs, ms), parse_error);
    }
    SECTION("non-dense ids") {
        std::istringstream vs("{\"a\": 0, \"b\": 2}");
        std::istringstream ms("");
        CHECK_THROWS_AS(load_vocabulary(vs, ms), integrity_error);
    }
    SECTION("malformed merges line carries the line number") {
        std::istringstream vs(tiny_vocab_json());
        std::istringstream ms("#version: 0.2\na b c\n");
        try {
            load_vocabulary(vs, ms);
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SECTION("merge referencing unknown symbol") {
        std::istringstream vs(tiny_vocab_json());
        std::istringstream ms("zz qq\n");
        CHECK_THROWS_AS(load_vocabulary(vs, ms), integrity_error);
    }
}

TEST_CASE("empty merges fall back to character-level pieces", "[tokenizer]") {
    Vocabulary v = tiny_vocab();
    CHECK(v.merge_count == 0);
    TokenSequence seq = encode(v, "ab cd");
    // a b</w> c d</w>
    CHECK(seq.content_len == 4);
    CHECK(v.id_to_token[static_cast<size_t>(seq.ids[1])] == "a");
    CHECK(v.id_to_token[static_cast<size_t>(seq.ids[2])] == "b</w>");
    check_layout(v, seq);
}

TEST_CASE("encode handles the documented edge cases", "[tokenizer]") {
    const Vocabulary& v = testsup::vocab();

    SECTION("empty prompt") {
        TokenSequence seq = encode(v, "");
        CHECK(seq.eos_index == 1);
        CHECK(seq.content_len == 0);
        for (int k = 1; k < v.context_len; ++k) {
            CHECK(seq.ids[static_cast<size_t>(k)] == v.eos_id);
        }
    }
    SECTION("long prompt truncates to context_len - 2 pieces") {
        std::string prompt;
        for (int i = 0; i < 200; ++i) prompt += "word ";
        TokenSequence seq = encode(v, prompt);
        CHECK(seq.content_len == v.context_len - 2);
        CHECK(seq.eos_index == v.context_len - 1);
        check_layout(v, seq);
    }
    SECTION("special-token literals tokenize as plain text") {
        TokenSequence seq = encode(v, "<|endoftext|> inside");
        // the literal must not inject an early <EOS>
        CHECK(seq.content_len > 2);
        for (int k = 1; k < seq.eos_index; ++k) {
            CHECK(seq.ids[static_cast<size_t>(k)] != v.eos_id);
            CHECK(seq.ids[static_cast<size_t>(k)] != v.sos_id);
        }
    }
}

TEST_CASE("layout invariants hold for random unicode strings", "[tokenizer]") {
    const Vocabulary& v = testsup::vocab();
    std::mt19937 rng(7);
    const std::pair<char32_t, char32_t> pools[] = {
        {0x20, 0x7E},   {0xA0, 0x2FF},    {0x300, 0x36F},    {0x400, 0x4FF},
        {0x3040, 0x30FF}, {0x4E00, 0x4FFF}, {0x1F300, 0x1F5FF}, {0x2000, 0x206F},
    };
    for (int iter = 0; iter < 300; ++iter) {
        std::uniform_int_distribution<int> len(0, 60);
        std::string text;
        const int n = len(rng);
        for (int k = 0; k < n; ++k) {
            auto [lo, hi] = pools[rng() % std::size(pools)];
            char32_t cp = lo + static_cast<char32_t>(rng() % (hi - lo + 1));
            if (cp >= 0xD800 && cp <= 0xDFFF) cp = 0xFFFD;
            unicode::utf8_append(text, cp);
        }
        TokenSequence seq = encode(v, text);
        INFO("text: " << text);
        check_layout(v, seq);
    }
}

TEST_CASE("encode is deterministic across threads", "[tokenizer]") {
    const Vocabulary& v = testsup::vocab();
    const std::string prompt = "a headshot of a woman, 35mm film";
    TokenSequence expect = encode(v, prompt);
    std::vector<std::thread> pool;
    std::vector<int> ok(8, 0);
    for (int i = 0; i < 8; ++i) {
        pool.emplace_back([&, i] {
            for (int k = 0; k < 50; ++k) {
                TokenSequence seq = encode(v, prompt);
                if (seq.ids != expect.ids) return;
            }
            ok[static_cast<size_t>(i)] = 1;
        });
    }
    for (auto& t : pool) t.join();
    for (int i = 0; i < 8; ++i) CHECK(ok[static_cast<size_t>(i)] == 1);
}

TEST_CASE("monotone truncation", "[tokenizer]") {
    const Vocabulary& v = testsup::vocab();
    auto doc = testsup::load_json(testsup::fixture_dir() / "token_corpus.json");
    int checked = 0;
    for (const auto& c : doc.at("cases")) {
        const std::string base = c.at("prompt").get<std::string>();
        TokenSequence t1 = encode(v, base);
        TokenSequence t2 = encode(v, base + " with extra appended words");
        CHECK(t1.eos_index <= t2.eos_index);
        if (++checked == 60) break;
    }
}

TEST_CASE("decode strips specials and normalizes", "[tokenizer]") {
    const Vocabulary& v = testsup::vocab();

    CHECK(decode(v, encode(v, "A   Dog")) == "a dog");
    CHECK(decode(v, encode(v, "")) == "");

    SECTION("idempotence over corpus prompts") {
        auto doc = testsup::load_json(testsup::fixture_dir() / "token_corpus.json");
        int checked = 0;
        for (const auto& c : doc.at("cases")) {
            const std::string p = c.at("prompt").get<std::string>();
            std::string once = decode(v, encode(v, p));
            std::string twice = decode(v, encode(v, once));
            CHECK(once == twice);
            if (++checked == 100) break;
        }
        REQUIRE(checked == 100);
    }
    SECTION("id out of range") {
        TokenSequence seq = encode(v, "a dog");
        seq.ids[2] = v.vocab_size() + 5;
        CHECK_THROWS_AS(decode(v, seq), input_error);
    }
}

TEST_CASE("eos_index_of finds the first <EOS>", "[tokenizer]") {
    const Vocabulary& v = testsup::vocab();
    CHECK(eos_index_of(encode(v, ""), v) == 1);
    TokenSequence dog = encode(v, "a dog");
    CHECK(eos_index_of(dog, v) == dog.eos_index);

    std::string long_prompt;
    for (int i = 0; i < 120; ++i) long_prompt += "prompt ";
    CHECK(eos_index_of(encode(v, long_prompt), v) == v.context_len - 1);

    TokenSequence none;
    none.ids.assign(77, 0);
    CHECK_THROWS_AS(eos_index_of(none, v), integrity_error);
}
