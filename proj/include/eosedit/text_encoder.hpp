#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eosedit/errors.hpp"
#include "eosedit/safetensors.hpp"
#include "eosedit/tokenizer.hpp"

// Causal transformer text encoder (the CLIP text tower as conditioned on by
// latent diffusion). Produces per-position final hidden states; position
// eos_index is the running summary the edit operates on.

namespace eosedit {

using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorF = Eigen::VectorXf;

enum class Activation { quick_gelu, gelu };

struct EncoderConfig {
    int d_model = 768;
    int n_layers = 12;
    int n_heads = 12;
    int context_len = 77;
    int vocab_size = 49408;
    Activation activation = Activation::quick_gelu;
    float layer_norm_eps = 1e-5f;

    void validate() const {
        if (d_model <= 0 || n_layers <= 0 || n_heads <= 0 || context_len <= 0 || vocab_size <= 0) {
            throw parameter_error("encoder config: all counts must be positive");
        }
        if (d_model % n_heads != 0) {
            throw parameter_error("encoder config: d_model must be divisible by n_heads");
        }
        if (!(layer_norm_eps > 0.0f)) {
            throw parameter_error("encoder config: layer_norm_eps must be positive");
        }
    }

    std::string digest() const;
};

struct EncoderWeights {
    struct Layer {
        MatrixF wq, wk, wv, wo;      // [d_model, d_model], applied as x * W^T + b
        VectorF bq, bk, bv, bo;
        MatrixF fc1_w;               // [4*d_model, d_model]
        VectorF fc1_b;
        MatrixF fc2_w;               // [d_model, 4*d_model]
        VectorF fc2_b;
        VectorF ln1_w, ln1_b, ln2_w, ln2_b;
    };

    MatrixF token_embedding;     // [vocab_size, d_model]
    MatrixF position_embedding;  // [context_len, d_model]
    std::vector<Layer> layers;
    VectorF final_ln_w, final_ln_b;
};

struct PromptEmbedding {
    MatrixF hidden;  // [context_len, d_model]
    TokenSequence tokens;
    int eos_index = 0;
    std::string prompt_text;
};

namespace detail_enc {

inline MatrixF fetch_matrix(const archive::Reader& r, const std::string& name,
                            int64_t rows, int64_t cols) {
    const auto& view = r.view(name);
    if (view.shape.size() != 2 || view.shape[0] != rows || view.shape[1] != cols) {
        std::string found = "[";
        for (size_t i = 0; i < view.shape.size(); ++i) {
            if (i) found += ", ";
            found += std::to_string(view.shape[i]);
        }
        found += "]";
        throw load_error("tensor '" + name + "': expected shape [" + std::to_string(rows) +
                         ", " + std::to_string(cols) + "], found " + found);
    }
    std::vector<float> data = r.tensor_f32(name);
    MatrixF m(rows, cols);
    std::copy(data.begin(), data.end(), m.data());
    if (!m.allFinite()) {
        throw integrity_error("tensor '" + name + "' contains non-finite entries");
    }
    return m;
}

inline VectorF fetch_vector(const archive::Reader& r, const std::string& name, int64_t n) {
    const auto& view = r.view(name);
    if (view.shape.size() != 1 || view.shape[0] != n) {
        throw load_error("tensor '" + name + "': expected shape [" + std::to_string(n) +
                         "], found rank-" + std::to_string(view.shape.size()) + " tensor");
    }
    std::vector<float> data = r.tensor_f32(name);
    VectorF v(n);
    std::copy(data.begin(), data.end(), v.data());
    if (!v.allFinite()) {
        throw integrity_error("tensor '" + name + "' contains non-finite entries");
    }
    return v;
}

}  // namespace detail_enc

// Load from an archive laid out like the published text-encoder checkpoints
// (text_model.embeddings..., text_model.encoder.layers.N..., ...).
inline EncoderWeights load_weights(const archive::Reader& r, const EncoderConfig& cfg) {
    cfg.validate();
    using detail_enc::fetch_matrix;
    using detail_enc::fetch_vector;

    EncoderWeights w;
    const int d = cfg.d_model;
    w.token_embedding =
        fetch_matrix(r, "text_model.embeddings.token_embedding.weight", cfg.vocab_size, d);
    w.position_embedding =
        fetch_matrix(r, "text_model.embeddings.position_embedding.weight", cfg.context_len, d);

    w.layers.reserve(static_cast<size_t>(cfg.n_layers));
    for (int i = 0; i < cfg.n_layers; ++i) {
        const std::string p = "text_model.encoder.layers." + std::to_string(i) + ".";
        EncoderWeights::Layer layer;
        layer.wq = fetch_matrix(r, p + "self_attn.q_proj.weight", d, d);
        layer.bq = fetch_vector(r, p + "self_attn.q_proj.bias", d);
        layer.wk = fetch_matrix(r, p + "self_attn.k_proj.weight", d, d);
        layer.bk = fetch_vector(r, p + "self_attn.k_proj.bias", d);
        layer.wv = fetch_matrix(r, p + "self_attn.v_proj.weight", d, d);
        layer.bv = fetch_vector(r, p + "self_attn.v_proj.bias", d);
        layer.wo = fetch_matrix(r, p + "self_attn.out_proj.weight", d, d);
        layer.bo = fetch_vector(r, p + "self_attn.out_proj.bias", d);
        layer.ln1_w = fetch_vector(r, p + "layer_norm1.weight", d);
        layer.ln1_b = fetch_vector(r, p + "layer_norm1.bias", d);
        layer.ln2_w = fetch_vector(r, p + "layer_norm2.weight", d);
        layer.ln2_b = fetch_vector(r, p + "layer_norm2.bias", d);
        layer.fc1_w = fetch_matrix(r, p + "mlp.fc1.weight", 4 * d, d);
        layer.fc1_b = fetch_vector(r, p + "mlp.fc1.bias", 4 * d);
        layer.fc2_w = fetch_matrix(r, p + "mlp.fc2.weight", d, 4 * d);
        layer.fc2_b = fetch_vector(r, p + "mlp.fc2.bias", d);
        w.layers.push_back(std::move(layer));
    }
    w.final_ln_w = fetch_vector(r, "text_model.final_layer_norm.weight", d);
    w.final_ln_b = fetch_vector(r, "text_model.final_layer_norm.bias", d);
    return w;
}

inline EncoderWeights load_weights_file(const std::string& path, const EncoderConfig& cfg) {
    archive::Reader r = archive::Reader::from_file(path);
    return load_weights(r, cfg);
}

namespace detail_enc {

inline void layer_norm_rows(MatrixF& x, const VectorF& gamma, const VectorF& beta, float eps) {
    const Eigen::Index cols = x.cols();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        auto row = x.row(i);
        float mean = row.mean();
        float var = (row.array() - mean).square().sum() / static_cast<float>(cols);
        float inv = 1.0f / std::sqrt(var + eps);
        row = (((row.array() - mean) * inv) * gamma.transpose().array()) + beta.transpose().array();
    }
}

inline float apply_activation(float v, Activation act) {
    if (act == Activation::quick_gelu) {
        return v / (1.0f + std::exp(-1.702f * v));
    }
    // tanh-approximation gelu
    const float c = 0.7978845608028654f;  // sqrt(2/pi)
    return 0.5f * v * (1.0f + std::tanh(c * (v + 0.044715f * v * v * v)));
}

}  // namespace detail_enc

// Full forward pass: embeddings -> n_layers pre-norm blocks with strictly
// causal attention -> final layer norm. All arithmetic in 32-bit floats;
// row i of every intermediate depends only on tokens at positions <= i.
inline PromptEmbedding encode_tokens(const EncoderWeights& w, const EncoderConfig& cfg,
                                     const TokenSequence& seq, std::string prompt_text = {}) {
    cfg.validate();
    const int ctx = cfg.context_len;
    const int d = cfg.d_model;
    if (static_cast<int>(seq.ids.size()) != ctx) {
        throw input_error("token sequence length " + std::to_string(seq.ids.size()) +
                          " does not match context_len " + std::to_string(ctx));
    }
    for (int id : seq.ids) {
        if (id < 0 || id >= cfg.vocab_size) {
            throw input_error("token id " + std::to_string(id) + " out of range");
        }
    }

    MatrixF x(ctx, d);
    for (int i = 0; i < ctx; ++i) {
        x.row(i) = w.token_embedding.row(seq.ids[static_cast<size_t>(i)]) +
                   w.position_embedding.row(i);
    }

    const int heads = cfg.n_heads;
    const int hd = d / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(hd));

    MatrixF attn_out(ctx, d);
    for (const auto& layer : w.layers) {
        MatrixF normed = x;
        detail_enc::layer_norm_rows(normed, layer.ln1_w, layer.ln1_b, cfg.layer_norm_eps);

        MatrixF q = normed * layer.wq.transpose();
        q.rowwise() += layer.bq.transpose();
        MatrixF k = normed * layer.wk.transpose();
        k.rowwise() += layer.bk.transpose();
        MatrixF v = normed * layer.wv.transpose();
        v.rowwise() += layer.bv.transpose();

        for (int h = 0; h < heads; ++h) {
            auto qh = q.middleCols(h * hd, hd);
            auto kh = k.middleCols(h * hd, hd);
            auto vh = v.middleCols(h * hd, hd);
            for (int i = 0; i < ctx; ++i) {
                // softmax over the causal prefix only
                Eigen::VectorXf logits = (kh.topRows(i + 1) * qh.row(i).transpose()) * scale;
                float mx = logits.maxCoeff();
                Eigen::VectorXf weights = (logits.array() - mx).exp();
                weights /= weights.sum();
                attn_out.row(i).segment(h * hd, hd) = weights.transpose() * vh.topRows(i + 1);
            }
        }
        MatrixF proj = attn_out * layer.wo.transpose();
        proj.rowwise() += layer.bo.transpose();
        x += proj;

        MatrixF normed2 = x;
        detail_enc::layer_norm_rows(normed2, layer.ln2_w, layer.ln2_b, cfg.layer_norm_eps);
        MatrixF hmid = normed2 * layer.fc1_w.transpose();
        hmid.rowwise() += layer.fc1_b.transpose();
        for (Eigen::Index i = 0; i < hmid.size(); ++i) {
            hmid.data()[i] = detail_enc::apply_activation(hmid.data()[i], cfg.activation);
        }
        MatrixF out = hmid * layer.fc2_w.transpose();
        out.rowwise() += layer.fc2_b.transpose();
        x += out;
    }

    detail_enc::layer_norm_rows(x, w.final_ln_w, w.final_ln_b, cfg.layer_norm_eps);
    if (!x.allFinite()) {
        throw numeric_error("encoder produced non-finite hidden states");
    }

    PromptEmbedding emb;
    emb.hidden = std::move(x);
    emb.tokens = seq;
    emb.eos_index = seq.eos_index;
    emb.prompt_text = std::move(prompt_text);
    return emb;
}

// Copy of the <EOS>-slot hidden state.
inline VectorF eos_state(const PromptEmbedding& emb) {
    return emb.hidden.row(emb.eos_index).transpose();
}

inline std::string EncoderConfig::digest() const {
    // FNV-1a over the canonical field rendering
    std::string repr = std::to_string(d_model) + "/" + std::to_string(n_layers) + "/" +
                       std::to_string(n_heads) + "/" + std::to_string(context_len) + "/" +
                       std::to_string(vocab_size) + "/" +
                       (activation == Activation::quick_gelu ? "quick_gelu" : "gelu") + "/" +
                       std::to_string(layer_norm_eps);
    uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : repr) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

}  // namespace eosedit
