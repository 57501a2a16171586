#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "eosedit/edit.hpp"
#include "eosedit/errors.hpp"
#include "eosedit/rng.hpp"
#include "eosedit/schedule.hpp"
#include "eosedit/text_encoder.hpp"

// Deterministic sampling: seeded initial latent, DDIM (eta = 0) updates with
// classifier-free guidance, pluggable denoiser backends.

namespace eosedit {

struct LatentShape {
    int channels = 0;
    int height = 0;
    int width = 0;

    size_t numel() const {
        return static_cast<size_t>(channels) * static_cast<size_t>(height) *
               static_cast<size_t>(width);
    }
    bool operator==(const LatentShape&) const = default;
};

struct LatentTensor {
    LatentShape shape;
    std::vector<float> values;  // channel-major, row-major within a channel

    bool all_finite() const {
        for (float v : values) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
};

inline LatentTensor sample_initial_latent(uint64_t seed, const LatentShape& shape) {
    if (shape.channels <= 0 || shape.height <= 0 || shape.width <= 0) {
        throw parameter_error("latent shape must be positive");
    }
    LatentTensor t;
    t.shape = shape;
    t.values.resize(shape.numel());
    Xoshiro256pp gen(seed);
    fill_normal_f32(gen, t.values.data(), t.values.size());
    return t;
}

namespace detail_smp {

inline void check_same_shape(const LatentTensor& a, const LatentTensor& b, const char* what) {
    if (!(a.shape == b.shape)) {
        throw shape_error(std::string(what) + ": latent shapes differ");
    }
}

}  // namespace detail_smp

// uncond + scale * (cond - uncond); endpoints return exact copies so that
// scale 0/1 are bit-identical to the inputs.
inline LatentTensor cfg_combine(const LatentTensor& uncond_pred, const LatentTensor& cond_pred,
                                double cfg_scale) {
    detail_smp::check_same_shape(uncond_pred, cond_pred, "cfg_combine");
    if (cfg_scale == 0.0) return uncond_pred;
    if (cfg_scale == 1.0) return cond_pred;
    LatentTensor out;
    out.shape = uncond_pred.shape;
    out.values.resize(uncond_pred.values.size());
    const float s = static_cast<float>(cfg_scale);
    for (size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = uncond_pred.values[i] + s * (cond_pred.values[i] - uncond_pred.values[i]);
    }
    return out;
}

inline constexpr int kFinalStepSentinel = -1;

// One deterministic DDIM update from timestep t toward t_prev
// (t_prev == kFinalStepSentinel finishes at the predicted x0).
inline LatentTensor ddim_step(const LatentTensor& latent, const LatentTensor& noise_pred, int t,
                              int t_prev, const NoiseSchedule& schedule) {
    detail_smp::check_same_shape(latent, noise_pred, "ddim_step");
    if (!schedule.contains(t)) {
        throw parameter_error("timestep " + std::to_string(t) + " not in schedule");
    }
    if (t_prev != kFinalStepSentinel) {
        if (!schedule.contains(t_prev)) {
            throw parameter_error("timestep " + std::to_string(t_prev) + " not in schedule");
        }
        if (t_prev >= t) {
            throw parameter_error("t_prev must be smaller than t");
        }
    }

    const double ac_t = schedule.alphas_cumprod[static_cast<size_t>(t)];
    const double ac_prev =
        t_prev == kFinalStepSentinel ? 1.0 : schedule.alphas_cumprod[static_cast<size_t>(t_prev)];
    const float sqrt_ac = static_cast<float>(std::sqrt(ac_t));
    const float sqrt_om = static_cast<float>(std::sqrt(1.0 - ac_t));
    const float sqrt_ac_prev = static_cast<float>(std::sqrt(ac_prev));
    const float sqrt_om_prev = static_cast<float>(std::sqrt(1.0 - ac_prev));

    LatentTensor out;
    out.shape = latent.shape;
    out.values.resize(latent.values.size());
    for (size_t i = 0; i < out.values.size(); ++i) {
        const float x = latent.values[i];
        const float e = noise_pred.values[i];
        const float x0 = (x - sqrt_om * e) / sqrt_ac;
        out.values[i] = sqrt_ac_prev * x0 + sqrt_om_prev * e;
    }
    return out;
}

struct ImagePixels {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb;  // height * width * 3
};

class DiffusionBackend {
public:
    virtual ~DiffusionBackend() = default;
    virtual std::string id() const = 0;
    virtual LatentShape latent_shape() const = 0;
    virtual int num_train_steps() const = 0;
    virtual BetaProfile beta_profile() const = 0;
    virtual LatentTensor predict_noise(const LatentTensor& latent, int t,
                                       const PromptEmbedding& conditioning) const = 0;
    virtual ImagePixels decode(const LatentTensor& latent) const = 0;
};

struct Provenance {
    std::string source_prompt;
    std::string target_prompt;  // empty when no edit was applied
    bool edited = false;
    double w = 1.0;
    uint64_t seed = 0;
    int steps = 50;
    double cfg_scale = 1.0;
    std::string backend_id;
};

struct GenerationRequest {
    PromptEmbedding conditioning;
    PromptEmbedding unconditional;
    uint64_t seed = 0;
    int steps = 50;
    double cfg_scale = 1.0;
};

struct ImageResult {
    ImagePixels pixels;
    std::string latent_digest;
    Provenance provenance;
};

inline std::string fnv1a_digest(const float* data, size_t n) {
    uint64_t hash = 1469598103934665603ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n * sizeof(float); ++i) {
        hash ^= bytes[i];
        hash *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

// Full sampling loop. Pure function of (backend, request): seeded latent,
// then for each selected timestep a conditional + unconditional prediction,
// CFG combination and DDIM update, finally the backend's latent decode.
inline ImageResult generate(const DiffusionBackend& backend, const GenerationRequest& request) {
    if (request.steps < 1) {
        throw parameter_error("steps must be >= 1");
    }
    if (request.cfg_scale < 0.0 || !std::isfinite(request.cfg_scale)) {
        throw parameter_error("cfg_scale must be finite and non-negative");
    }
    if (request.conditioning.hidden.rows() != request.unconditional.hidden.rows() ||
        request.conditioning.hidden.cols() != request.unconditional.hidden.cols()) {
        throw shape_error("conditional and unconditional embeddings differ in shape");
    }

    NoiseSchedule schedule =
        build_schedule(backend.num_train_steps(), request.steps, backend.beta_profile());
    LatentTensor latent = sample_initial_latent(request.seed, backend.latent_shape());

    const auto& ts = schedule.selected_timesteps;
    for (size_t k = 0; k < ts.size(); ++k) {
        const int t = ts[k];
        const int t_prev = k + 1 < ts.size() ? ts[k + 1] : kFinalStepSentinel;
        LatentTensor cond_pred = backend.predict_noise(latent, t, request.conditioning);
        LatentTensor uncond_pred = backend.predict_noise(latent, t, request.unconditional);
        LatentTensor guided = cfg_combine(uncond_pred, cond_pred, request.cfg_scale);
        latent = ddim_step(latent, guided, t, t_prev, schedule);
        if (!latent.all_finite()) {
            throw numeric_error("non-finite latent after step " + std::to_string(k) +
                                " (t=" + std::to_string(t) + ")");
        }
    }

    ImageResult result;
    result.latent_digest = fnv1a_digest(latent.values.data(), latent.values.size());
    result.pixels = backend.decode(latent);
    result.provenance.source_prompt = request.conditioning.prompt_text;
    result.provenance.seed = request.seed;
    result.provenance.steps = request.steps;
    result.provenance.cfg_scale = request.cfg_scale;
    result.provenance.backend_id = backend.id();
    return result;
}

// Desk-scale denoiser: a fixed seeded affine map of the latent, the
// mean-pooled conditioning, the conditioning's <EOS> row and a sinusoidal
// timestep embedding. Cheap, deterministic, and sensitive to single-row
// conditioning changes, which is what makes <EOS> edits visible end to end.
class ToyBackend : public DiffusionBackend {
public:
    static constexpr uint64_t kWeightSeed = 0x0E05ED17ull;

    explicit ToyBackend(int d_model) : d_model_(d_model) {
        if (d_model <= 0) throw parameter_error("toy backend: d_model must be positive");
        const size_t n = shape_.numel();
        Xoshiro256pp gen(kWeightSeed);
        auto draw = [&gen](std::vector<float>& dst, size_t count, float scale) {
            dst.resize(count);
            fill_normal_f32(gen, dst.data(), count);
            for (auto& v : dst) v *= scale;
        };
        const size_t d = static_cast<size_t>(d_model);
        draw(w_latent_, n * n, 1.0f / std::sqrt(static_cast<float>(n)));
        draw(w_pool_, n * d, 1.0f / std::sqrt(static_cast<float>(d)));
        draw(w_eos_, n * d, 1.0f / std::sqrt(static_cast<float>(d)));
        draw(w_time_, n * kTimeDim, 1.0f / std::sqrt(static_cast<float>(kTimeDim)));
        draw(bias_, n, 0.05f);
        draw(w_decode_, 3 * 4, 0.8f);
        draw(b_decode_, 3, 0.2f);
    }

    std::string id() const override { return "toy"; }
    LatentShape latent_shape() const override { return shape_; }
    int num_train_steps() const override { return 1000; }
    BetaProfile beta_profile() const override { return BetaProfile::scaled_linear; }

    LatentTensor predict_noise(const LatentTensor& latent, int t,
                               const PromptEmbedding& conditioning) const override {
        if (!(latent.shape == shape_)) {
            throw shape_error("toy backend: unexpected latent shape");
        }
        if (conditioning.hidden.cols() != d_model_) {
            throw shape_error("toy backend: conditioning width " +
                              std::to_string(conditioning.hidden.cols()) + " != " +
                              std::to_string(d_model_));
        }
        const size_t n = shape_.numel();
        const size_t d = static_cast<size_t>(d_model_);

        std::vector<float> pool(d, 0.0f);
        const auto rows = conditioning.hidden.rows();
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (size_t c = 0; c < d; ++c) {
                pool[c] += conditioning.hidden(r, static_cast<Eigen::Index>(c));
            }
        }
        const float inv_rows = 1.0f / static_cast<float>(rows);
        for (auto& v : pool) v *= inv_rows;

        std::vector<float> temb(kTimeDim);
        for (size_t i = 0; i < kTimeDim / 2; ++i) {
            const float freq =
                std::exp(-std::log(10000.0f) * static_cast<float>(i) / (kTimeDim / 2.0f));
            temb[2 * i] = std::sin(static_cast<float>(t) * freq);
            temb[2 * i + 1] = std::cos(static_cast<float>(t) * freq);
        }

        LatentTensor out;
        out.shape = shape_;
        out.values.resize(n);
        const Eigen::Index eos_row = conditioning.eos_index;
        for (size_t i = 0; i < n; ++i) {
            float acc = bias_[i];
            const float* wl = &w_latent_[i * n];
            for (size_t j = 0; j < n; ++j) acc += wl[j] * latent.values[j];
            const float* wp = &w_pool_[i * d];
            const float* we = &w_eos_[i * d];
            for (size_t c = 0; c < d; ++c) {
                acc += wp[c] * pool[c];
                acc += we[c] * conditioning.hidden(eos_row, static_cast<Eigen::Index>(c));
            }
            const float* wt = &w_time_[i * kTimeDim];
            for (size_t j = 0; j < kTimeDim; ++j) acc += wt[j] * temb[j];
            out.values[i] = acc;
        }
        return out;
    }

    // Bilinear 8x upsample of the four channels, then a fixed 3x4 color mix
    // squashed through a sigmoid.
    ImagePixels decode(const LatentTensor& latent) const override {
        if (!(latent.shape == shape_)) {
            throw shape_error("toy backend: unexpected latent shape");
        }
        const int scale = 8;
        ImagePixels img;
        img.width = shape_.width * scale;
        img.height = shape_.height * scale;
        img.rgb.resize(static_cast<size_t>(img.width) * img.height * 3);

        auto sample = [&](int ch, float y, float x) {
            const int h = shape_.height, w = shape_.width;
            int y0 = static_cast<int>(std::floor(y));
            int x0 = static_cast<int>(std::floor(x));
            int y1 = std::min(y0 + 1, h - 1);
            int x1 = std::min(x0 + 1, w - 1);
            float fy = y - static_cast<float>(y0);
            float fx = x - static_cast<float>(x0);
            auto at = [&](int yy, int xx) {
                return latent.values[static_cast<size_t>(ch) * h * w + static_cast<size_t>(yy) * w +
                                     static_cast<size_t>(xx)];
            };
            return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) +
                   fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
        };

        for (int py = 0; py < img.height; ++py) {
            for (int px = 0; px < img.width; ++px) {
                const float ly = (static_cast<float>(py) + 0.5f) / scale - 0.5f;
                const float lx = (static_cast<float>(px) + 0.5f) / scale - 0.5f;
                float c[4];
                for (int ch = 0; ch < 4; ++ch) {
                    c[ch] = sample(ch, std::max(0.0f, std::min(ly, shape_.height - 1.0f)),
                                   std::max(0.0f, std::min(lx, shape_.width - 1.0f)));
                }
                for (int rgb = 0; rgb < 3; ++rgb) {
                    float mix = b_decode_[static_cast<size_t>(rgb)];
                    for (int ch = 0; ch < 4; ++ch) {
                        mix += w_decode_[static_cast<size_t>(rgb) * 4 + ch] * c[ch];
                    }
                    const float v = 1.0f / (1.0f + std::exp(-mix));
                    img.rgb[(static_cast<size_t>(py) * img.width + px) * 3 + rgb] =
                        static_cast<uint8_t>(std::lround(v * 255.0f));
                }
            }
        }
        return img;
    }

private:
    static constexpr size_t kTimeDim = 64;
    static constexpr LatentShape shape_{4, 8, 8};
    int d_model_;
    std::vector<float> w_latent_, w_pool_, w_eos_, w_time_, bias_;
    std::vector<float> w_decode_, b_decode_;
};

// Contract for a full-scale UNet/VAE adapter. Weights are not bundled;
// constructing without them reports a backend error.
class Sd14AdapterBackend : public DiffusionBackend {
public:
    explicit Sd14AdapterBackend(const std::string& weights_dir = {}) {
        throw backend_error(
            weights_dir.empty()
                ? "sd14 adapter: no weights configured (set adapter weights to enable)"
                : "sd14 adapter: loading from '" + weights_dir + "' is not available in this build");
    }

    std::string id() const override { return "sd14-adapter"; }
    LatentShape latent_shape() const override { return {4, 64, 64}; }
    int num_train_steps() const override { return 1000; }
    BetaProfile beta_profile() const override { return BetaProfile::scaled_linear; }
    LatentTensor predict_noise(const LatentTensor&, int, const PromptEmbedding&) const override {
        throw backend_error("sd14 adapter: not available");
    }
    ImagePixels decode(const LatentTensor&) const override {
        throw backend_error("sd14 adapter: not available");
    }
};

inline std::unique_ptr<DiffusionBackend> make_backend(const std::string& backend_id, int d_model) {
    if (backend_id == "toy") {
        return std::make_unique<ToyBackend>(d_model);
    }
    if (backend_id == "sd14" || backend_id == "sd14-adapter") {
        return std::make_unique<Sd14AdapterBackend>();
    }
    throw backend_error("unknown backend '" + backend_id + "'");
}

}  // namespace eosedit
