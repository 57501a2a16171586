#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "eosedit/errors.hpp"
#include "eosedit/text_encoder.hpp"

// The edit itself: write the scaled target <EOS> hidden state into the
// source embedding's <EOS> slot, leaving every other position untouched.

namespace eosedit {

struct EditSpec {
    std::string source_prompt;
    std::string target_prompt;
    double w = 1.0;
};

struct EditedEmbedding {
    PromptEmbedding embedding;   // source layout with the replaced <EOS> row
    int source_eos_index = 0;
    double applied_w = 1.0;
    double target_eos_norm = 0.0;
};

namespace detail_edit {

inline void check_shapes(const PromptEmbedding& a, const PromptEmbedding& b) {
    if (a.hidden.rows() != b.hidden.rows() || a.hidden.cols() != b.hidden.cols()) {
        throw shape_error("embedding shapes differ: " + std::to_string(a.hidden.rows()) + "x" +
                          std::to_string(a.hidden.cols()) + " vs " +
                          std::to_string(b.hidden.rows()) + "x" + std::to_string(b.hidden.cols()));
    }
}

}  // namespace detail_edit

// Replace the source's first-<EOS> row with w times the target's <EOS> row.
// Inputs are untouched; all positions other than source.eos_index are copied
// bit-exactly, the slot itself is computed in 32-bit arithmetic.
inline EditedEmbedding apply_eos_edit(const PromptEmbedding& source,
                                      const PromptEmbedding& target, double w) {
    detail_edit::check_shapes(source, target);
    if (!std::isfinite(w)) {
        throw parameter_error("guidance scale w must be finite");
    }

    EditedEmbedding out;
    out.embedding = source;
    const float fw = static_cast<float>(w);
    out.embedding.hidden.row(source.eos_index) = fw * target.hidden.row(target.eos_index);
    out.source_eos_index = source.eos_index;
    out.applied_w = w;
    out.target_eos_norm =
        std::sqrt(target.hidden.row(target.eos_index).cast<double>().array().square().sum());
    return out;
}

inline std::vector<EditedEmbedding> sweep_guidance(const PromptEmbedding& source,
                                                   const PromptEmbedding& target,
                                                   const std::vector<double>& w_values) {
    if (w_values.empty()) {
        throw parameter_error("sweep requires at least one w value");
    }
    std::vector<EditedEmbedding> out;
    out.reserve(w_values.size());
    for (double w : w_values) {
        out.push_back(apply_eos_edit(source, target, w));
    }
    return out;
}

// Frobenius norm of the hidden-state difference (accumulated in doubles).
inline double embedding_distance(const PromptEmbedding& a, const PromptEmbedding& b) {
    detail_edit::check_shapes(a, b);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.hidden.size(); ++i) {
        double d = static_cast<double>(a.hidden.data()[i]) - static_cast<double>(b.hidden.data()[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace eosedit
