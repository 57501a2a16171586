#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eosedit/edit.hpp"
#include "eosedit/errors.hpp"
#include "eosedit/png.hpp"
#include "eosedit/safetensors.hpp"
#include "eosedit/sampler.hpp"
#include "eosedit/text_encoder.hpp"
#include "eosedit/tokenizer.hpp"

// Command layer shared by the CLI and the integration tests: configuration,
// atomic artifact emission, and the paired-generation protocols.

namespace eosedit::pipeline {

namespace fs = std::filesystem;

struct RunConfig {
    std::string vocab_path;
    std::string merges_path;
    std::string encoder_weights_path;
    int context_len = 77;
    EncoderConfig encoder;
    std::string backend = "toy";
    int steps = 50;
    double cfg_scale = 1.0;
    double w = 1.0;
    uint64_t seed = 0;
    std::string out_dir = "out";

    // Paths in the file are resolved relative to the config's directory.
    static RunConfig load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw io_error("cannot open config: " + path);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(f);
        } catch (const nlohmann::json::parse_error& e) {
            throw parse_error(std::string("config: ") + e.what());
        }
        RunConfig cfg;
        const fs::path base = fs::path(path).parent_path();
        auto resolve = [&](const std::string& p) {
            fs::path fp(p);
            return fp.is_absolute() ? fp.string() : (base / fp).string();
        };
        cfg.vocab_path = resolve(doc.at("vocab").get<std::string>());
        cfg.merges_path = resolve(doc.at("merges").get<std::string>());
        cfg.encoder_weights_path = resolve(doc.at("encoder_weights").get<std::string>());
        cfg.context_len = doc.value("context_len", 77);
        if (doc.contains("encoder")) {
            const auto& e = doc["encoder"];
            cfg.encoder.d_model = e.at("d_model").get<int>();
            cfg.encoder.n_layers = e.at("n_layers").get<int>();
            cfg.encoder.n_heads = e.at("n_heads").get<int>();
            cfg.encoder.context_len = e.value("context_len", cfg.context_len);
            cfg.encoder.vocab_size = e.at("vocab_size").get<int>();
            const std::string act = e.value("activation", "quick_gelu");
            if (act == "quick_gelu") {
                cfg.encoder.activation = Activation::quick_gelu;
            } else if (act == "gelu") {
                cfg.encoder.activation = Activation::gelu;
            } else {
                throw parse_error("config: unknown activation '" + act + "'");
            }
            cfg.encoder.layer_norm_eps = e.value("layer_norm_eps", 1e-5);
        }
        cfg.backend = doc.value("backend", "toy");
        cfg.steps = doc.value("steps", 50);
        cfg.cfg_scale = doc.value("cfg_scale", 1.0);
        cfg.w = doc.value("w", 1.0);
        cfg.seed = doc.value("seed", 0ull);
        cfg.out_dir = doc.value("out_dir", "out");

        for (const auto& p : {cfg.vocab_path, cfg.merges_path, cfg.encoder_weights_path}) {
            if (!fs::exists(p)) {
                throw input_error("config references missing file: " + p);
            }
        }
        return cfg;
    }
};

// Loaded-once state shared across commands; immutable after construction.
struct Context {
    Vocabulary vocab;
    EncoderConfig encoder_cfg;
    EncoderWeights weights;
    std::unique_ptr<DiffusionBackend> backend;
    PromptEmbedding unconditional;

    static Context open(const RunConfig& cfg) {
        Context ctx;
        ctx.vocab = load_vocabulary_files(cfg.vocab_path, cfg.merges_path, cfg.context_len);
        ctx.encoder_cfg = cfg.encoder;
        ctx.encoder_cfg.context_len = cfg.context_len;
        ctx.weights = load_weights_file(cfg.encoder_weights_path, ctx.encoder_cfg);
        ctx.backend = make_backend(cfg.backend, ctx.encoder_cfg.d_model);
        ctx.unconditional = ctx.encode_prompt("");
        return ctx;
    }

    PromptEmbedding encode_prompt(const std::string& prompt) const {
        return encode_tokens(weights, encoder_cfg, encode(vocab, prompt), prompt);
    }
};

// --- artifact emission ------------------------------------------------

inline void write_file_atomic(const fs::path& path, const void* data, size_t size) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw io_error("cannot open for writing: " + tmp.string());
        f.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!f) throw io_error("short write: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw io_error("cannot move into place: " + path.string());
    }
}

inline void write_file_atomic(const fs::path& path, const std::string& text) {
    write_file_atomic(path, text.data(), text.size());
}

inline void write_file_atomic(const fs::path& path, const std::vector<uint8_t>& bytes) {
    write_file_atomic(path, bytes.data(), bytes.size());
}

// Removes every file it saw if the command does not finish.
class OutputTracker {
public:
    ~OutputTracker() {
        if (!committed_) {
            for (const auto& p : written_) {
                std::error_code ec;
                fs::remove(p, ec);
            }
        }
    }
    void record(const fs::path& p) { written_.push_back(p); }
    void commit() { committed_ = true; }
    const std::vector<fs::path>& files() const { return written_; }

private:
    std::vector<fs::path> written_;
    bool committed_ = false;
};

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += "\"";
    return out;
}

inline nlohmann::ordered_json provenance_json(const Provenance& p) {
    nlohmann::ordered_json j;
    j["source_prompt"] = p.source_prompt;
    if (p.edited) {
        j["target_prompt"] = p.target_prompt;
        j["w"] = p.w;
    }
    j["edited"] = p.edited;
    j["seed"] = p.seed;
    j["steps"] = p.steps;
    j["cfg_scale"] = p.cfg_scale;
    j["backend_id"] = p.backend_id;
    return j;
}

inline void write_image_with_provenance(OutputTracker& tracker, const fs::path& png_path,
                                        const ImageResult& result,
                                        nlohmann::ordered_json extra = {}) {
    std::vector<uint8_t> bytes = png::encode(result.pixels);
    write_file_atomic(png_path, bytes);
    tracker.record(png_path);

    nlohmann::ordered_json j = provenance_json(result.provenance);
    j["latent_digest"] = result.latent_digest;
    j["image"] = png_path.filename().string();
    for (auto& [k, v] : extra.items()) j[k] = v;
    fs::path sidecar = png_path;
    sidecar += ".provenance.json";
    write_file_atomic(sidecar, j.dump(1) + "\n");
    tracker.record(sidecar);
}

// --- commands ----------------------------------------------------------

struct TokenizeReport {
    TokenSequence seq;
    std::string normalized;
};

inline TokenizeReport run_tokenize(const Vocabulary& vocab, const std::string& prompt) {
    TokenizeReport r;
    r.seq = encode(vocab, prompt);
    r.normalized = unicode::normalize_utf8(prompt);
    return r;
}

// Dump a prompt embedding as a named-tensor archive plus sidecar metadata.
inline std::vector<fs::path> run_encode_dump(const Context& ctx, const std::string& prompt,
                                             const fs::path& out_file) {
    OutputTracker tracker;
    PromptEmbedding emb = ctx.encode_prompt(prompt);
    archive::Writer w;
    w.add("hidden", {emb.hidden.rows(), emb.hidden.cols()}, emb.hidden.data(),
          static_cast<size_t>(emb.hidden.size()));
    std::vector<float> ids_f(emb.tokens.ids.begin(), emb.tokens.ids.end());
    w.add("token_ids", {static_cast<int64_t>(ids_f.size())}, ids_f.data(), ids_f.size());
    write_file_atomic(out_file, w.bytes());
    tracker.record(out_file);

    nlohmann::ordered_json meta;
    meta["prompt"] = prompt;
    meta["eos_index"] = emb.eos_index;
    meta["config_digest"] = ctx.encoder_cfg.digest();
    fs::path sidecar = out_file;
    sidecar += ".json";
    write_file_atomic(sidecar, meta.dump(1) + "\n");
    tracker.record(sidecar);
    tracker.commit();
    return tracker.files();
}

inline std::vector<fs::path> run_edit_dump(const Context& ctx, const std::string& source,
                                           const std::string& target, double w,
                                           const fs::path& out_file) {
    OutputTracker tracker;
    PromptEmbedding s = ctx.encode_prompt(source);
    PromptEmbedding g = ctx.encode_prompt(target);
    EditedEmbedding edited = apply_eos_edit(s, g, w);

    archive::Writer aw;
    aw.add("hidden", {edited.embedding.hidden.rows(), edited.embedding.hidden.cols()},
           edited.embedding.hidden.data(), static_cast<size_t>(edited.embedding.hidden.size()));
    write_file_atomic(out_file, aw.bytes());
    tracker.record(out_file);

    nlohmann::ordered_json meta;
    meta["source_prompt"] = source;
    meta["target_prompt"] = target;
    meta["w"] = w;
    meta["source_eos_index"] = edited.source_eos_index;
    meta["target_eos_norm"] = edited.target_eos_norm;
    meta["config_digest"] = ctx.encoder_cfg.digest();
    fs::path sidecar = out_file;
    sidecar += ".json";
    write_file_atomic(sidecar, meta.dump(1) + "\n");
    tracker.record(sidecar);
    tracker.commit();
    return tracker.files();
}

inline ImageResult run_generation(const Context& ctx, const PromptEmbedding& conditioning,
                                  uint64_t seed, int steps, double cfg_scale) {
    GenerationRequest req;
    req.conditioning = conditioning;
    req.unconditional = ctx.unconditional;
    req.seed = seed;
    req.steps = steps;
    req.cfg_scale = cfg_scale;
    return generate(*ctx.backend, req);
}

inline std::vector<fs::path> run_generate(const Context& ctx, const std::string& prompt,
                                          uint64_t seed, int steps, double cfg_scale,
                                          const fs::path& out_dir,
                                          const std::string& name = "generate") {
    OutputTracker tracker;
    fs::create_directories(out_dir);
    ImageResult img = run_generation(ctx, ctx.encode_prompt(prompt), seed, steps, cfg_scale);
    write_image_with_provenance(tracker, out_dir / (name + ".png"), img);
    tracker.commit();
    return tracker.files();
}

struct CompareResult {
    ImageResult source_image;
    ImageResult edited_image;
    double embedding_distance = 0.0;
    std::vector<fs::path> files;
};

// The paired protocol: one unedited and one <EOS>-edited generation from the
// same seed, steps and guidance, plus a CSV report.
inline CompareResult run_compare(const Context& ctx, const std::string& source,
                                 const std::string& target, double w, uint64_t seed, int steps,
                                 double cfg_scale, const fs::path& out_dir,
                                 const std::string& name = "compare") {
    OutputTracker tracker;
    fs::create_directories(out_dir);

    PromptEmbedding s = ctx.encode_prompt(source);
    PromptEmbedding g = ctx.encode_prompt(target);
    EditedEmbedding edited = apply_eos_edit(s, g, w);

    CompareResult res;
    res.source_image = run_generation(ctx, s, seed, steps, cfg_scale);
    res.edited_image = run_generation(ctx, edited.embedding, seed, steps, cfg_scale);
    res.edited_image.provenance.edited = true;
    res.edited_image.provenance.target_prompt = target;
    res.edited_image.provenance.w = w;
    res.embedding_distance = embedding_distance(s, edited.embedding);

    write_image_with_provenance(tracker, out_dir / (name + "_source.png"), res.source_image);
    write_image_with_provenance(tracker, out_dir / (name + "_edited.png"), res.edited_image);

    std::string csv =
        "image,source_prompt,target_prompt,w,seed,steps,cfg_scale,backend,"
        "embedding_distance,latent_digest\n";
    auto row = [&](const std::string& img, const ImageResult& r, bool is_edit) {
        csv += csv_escape(img) + "," + csv_escape(source) + "," +
               (is_edit ? csv_escape(target) : std::string()) + "," +
               (is_edit ? format_double(w) : std::string()) + "," + std::to_string(seed) + "," +
               std::to_string(steps) + "," + format_double(cfg_scale) + "," +
               ctx.backend->id() + "," + (is_edit ? format_double(res.embedding_distance) : "0") +
               "," + r.latent_digest + "\n";
    };
    row(name + "_source.png", res.source_image, false);
    row(name + "_edited.png", res.edited_image, true);
    fs::path report = out_dir / (name + "_report.csv");
    write_file_atomic(report, csv);
    tracker.record(report);

    tracker.commit();
    res.files = tracker.files();
    return res;
}

// Moderation recipe: identical machinery, the replacement prompt's <EOS>
// state overwrites the unsafe prompt's slot. No classifier is involved.
inline CompareResult run_moderate(const Context& ctx, const std::string& unsafe_prompt,
                                  const std::string& replacement_prompt, double w, uint64_t seed,
                                  int steps, double cfg_scale, const fs::path& out_dir) {
    return run_compare(ctx, unsafe_prompt, replacement_prompt, w, seed, steps, cfg_scale, out_dir,
                       "moderate");
}

struct BaselineResult {
    ImageResult image;
    std::string concat_prompt;
    std::vector<fs::path> files;
};

// Prompt-concatenation baseline: "<source>, <attr>, <attr>..." generated
// as-is for side-by-side comparison against the edited pair.
inline BaselineResult run_baseline_concat(const Context& ctx, const std::string& source,
                                          const std::vector<std::string>& attributes,
                                          uint64_t seed, int steps, double cfg_scale,
                                          const fs::path& out_dir) {
    OutputTracker tracker;
    fs::create_directories(out_dir);

    std::string concat = source;
    for (const auto& a : attributes) {
        concat += ", ";
        concat += a;
    }
    TokenSequence source_seq = encode(ctx.vocab, source);
    TokenSequence concat_seq = encode(ctx.vocab, concat);

    BaselineResult res;
    res.concat_prompt = concat;
    res.image = run_generation(ctx, ctx.encode_prompt(concat), seed, steps, cfg_scale);

    nlohmann::ordered_json extra;
    extra["baseline"] = "concat";
    extra["concat_prompt"] = concat;
    extra["source_token_ids"] = source_seq.ids;
    extra["concat_token_ids"] = concat_seq.ids;
    write_image_with_provenance(tracker, out_dir / "baseline.png", res.image, extra);

    tracker.commit();
    res.files = tracker.files();
    return res;
}

struct SweepRow {
    double w = 0.0;
    double embedding_distance = 0.0;
    std::string latent_digest;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<fs::path> files;
};

// Evenly spaced guidance-scale sweep with a shared seed; emits a horizontal
// grid image and a CSV of (w, embedding_distance, latent_digest).
inline SweepResult run_sweep(const Context& ctx, const std::string& source,
                             const std::string& target, double w_min, double w_max, int count,
                             uint64_t seed, int steps, double cfg_scale, const fs::path& out_dir) {
    if (count < 2) throw input_error("sweep requires count >= 2");
    if (!(w_min < w_max)) throw input_error("sweep requires w_min < w_max");

    OutputTracker tracker;
    fs::create_directories(out_dir);

    PromptEmbedding s = ctx.encode_prompt(source);
    PromptEmbedding g = ctx.encode_prompt(target);
    std::vector<double> w_values;
    w_values.reserve(static_cast<size_t>(count));
    const double step = (w_max - w_min) / static_cast<double>(count - 1);
    for (int i = 0; i < count; ++i) {
        w_values.push_back(w_min + static_cast<double>(i) * step);
    }
    std::vector<EditedEmbedding> edits = sweep_guidance(s, g, w_values);

    SweepResult res;
    ImagePixels grid;
    std::string csv = "w,embedding_distance,latent_digest\n";
    for (size_t i = 0; i < edits.size(); ++i) {
        ImageResult img = run_generation(ctx, edits[i].embedding, seed, steps, cfg_scale);
        if (i == 0) {
            grid.height = img.pixels.height;
            grid.width = img.pixels.width * count;
            grid.rgb.assign(static_cast<size_t>(grid.width) * grid.height * 3, 0);
        }
        for (int y = 0; y < img.pixels.height; ++y) {
            std::memcpy(&grid.rgb[(static_cast<size_t>(y) * grid.width +
                                   i * static_cast<size_t>(img.pixels.width)) *
                                  3],
                        &img.pixels.rgb[static_cast<size_t>(y) * img.pixels.width * 3],
                        static_cast<size_t>(img.pixels.width) * 3);
        }
        SweepRow row;
        row.w = w_values[i];
        row.embedding_distance = embedding_distance(s, edits[i].embedding);
        row.latent_digest = img.latent_digest;
        res.rows.push_back(row);
        csv += format_double(row.w) + "," + format_double(row.embedding_distance) + "," +
               row.latent_digest + "\n";
    }

    std::vector<uint8_t> grid_png = png::encode(grid);
    fs::path grid_path = out_dir / "sweep_grid.png";
    write_file_atomic(grid_path, grid_png);
    tracker.record(grid_path);

    nlohmann::ordered_json prov;
    prov["source_prompt"] = source;
    prov["target_prompt"] = target;
    prov["w_min"] = w_min;
    prov["w_max"] = w_max;
    prov["count"] = count;
    prov["seed"] = seed;
    prov["steps"] = steps;
    prov["cfg_scale"] = cfg_scale;
    prov["backend_id"] = ctx.backend->id();
    fs::path prov_path = out_dir / "sweep_grid.png.provenance.json";
    write_file_atomic(prov_path, prov.dump(1) + "\n");
    tracker.record(prov_path);

    fs::path report = out_dir / "sweep_report.csv";
    write_file_atomic(report, csv);
    tracker.record(report);

    tracker.commit();
    res.files = tracker.files();
    return res;
}

}  // namespace eosedit::pipeline
