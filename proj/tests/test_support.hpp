#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "eosedit/eosedit.hpp"

namespace testsup {

inline std::filesystem::path source_dir() { return EOSEDIT_SOURCE_DIR; }
inline std::filesystem::path fixture_dir() { return source_dir() / "tests" / "fixtures"; }
inline std::filesystem::path assets_dir() { return source_dir() / "assets" / "model-small"; }

inline nlohmann::json load_json(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("missing fixture: " + p.string());
    return nlohmann::json::parse(f);
}

// Singletons: the profile artifacts are moderately expensive to load.
inline const eosedit::Vocabulary& vocab() {
    static eosedit::Vocabulary v = eosedit::load_vocabulary_files(
        (assets_dir() / "vocab.json").string(), (assets_dir() / "merges.txt").string(), 77);
    return v;
}

inline const eosedit::EncoderConfig& encoder_config() {
    static eosedit::EncoderConfig cfg = [] {
        eosedit::EncoderConfig c;
        c.d_model = 64;
        c.n_layers = 4;
        c.n_heads = 4;
        c.context_len = 77;
        c.vocab_size = 49408;
        c.activation = eosedit::Activation::quick_gelu;
        c.layer_norm_eps = 1e-5f;
        return c;
    }();
    return cfg;
}

inline const eosedit::EncoderWeights& encoder_weights() {
    static eosedit::EncoderWeights w = eosedit::load_weights_file(
        (assets_dir() / "text_encoder.safetensors").string(), encoder_config());
    return w;
}

inline eosedit::PromptEmbedding embed(const std::string& prompt) {
    return eosedit::encode_tokens(encoder_weights(), encoder_config(),
                                  eosedit::encode(vocab(), prompt), prompt);
}

}  // namespace testsup
