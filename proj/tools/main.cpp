// eosedit CLI: tokenize / encode / edit / generate / compare / baseline /
// sweep / moderate over a configured model profile.
//
// Exit codes: 0 success, 2 input error, 3 pipeline error, 4 backend error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eosedit/eosedit.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kPipelineError = 3;
constexpr int kBackendError = 4;

struct CommonFlags {
    std::string config_path;
    std::string vocab;
    std::string merges;
    std::string encoder_weights;
    std::string backend;
    std::optional<uint64_t> seed;
    std::optional<int> steps;
    std::optional<double> cfg;
    std::optional<double> w;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "run configuration JSON");
    cmd->add_option("--vocab", f.vocab, "token->id listing (vocab.json)");
    cmd->add_option("--merges", f.merges, "ranked merges file");
    cmd->add_option("--encoder-weights", f.encoder_weights, "text encoder archive");
    cmd->add_option("--backend", f.backend, "diffusion backend")
        ->check(CLI::IsMember({"toy", "sd14"}));
    cmd->add_option("--seed", f.seed, "generation seed");
    cmd->add_option("--steps", f.steps, "denoising steps (default 50)");
    cmd->add_option("--cfg", f.cfg, "classifier-free guidance scale");
    cmd->add_option("--w", f.w, "target <EOS> guidance scale (default 1.0)");
    cmd->add_option("--out", f.out, "output directory");
}

// Config file first, flags win.
eosedit::pipeline::RunConfig resolve_config(const CommonFlags& f) {
    eosedit::pipeline::RunConfig cfg;
    if (!f.config_path.empty()) {
        cfg = eosedit::pipeline::RunConfig::load(f.config_path);
    } else if (f.vocab.empty() || f.merges.empty() || f.encoder_weights.empty()) {
        throw eosedit::input_error(
            "either --config or all of --vocab/--merges/--encoder-weights are required");
    }
    if (!f.vocab.empty()) cfg.vocab_path = f.vocab;
    if (!f.merges.empty()) cfg.merges_path = f.merges;
    if (!f.encoder_weights.empty()) cfg.encoder_weights_path = f.encoder_weights;
    if (!f.backend.empty()) cfg.backend = f.backend;
    if (f.seed) cfg.seed = *f.seed;
    if (f.steps) cfg.steps = *f.steps;
    if (f.cfg) cfg.cfg_scale = *f.cfg;
    if (f.w) cfg.w = *f.w;
    if (!f.out.empty()) cfg.out_dir = f.out;
    return cfg;
}

void print_files(const std::vector<std::filesystem::path>& files) {
    for (const auto& p : files) std::cout << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-shot prompt-embedding editing via the <EOS> token"};
    app.require_subcommand(1);

    CommonFlags flags;

    std::string prompt, source, target, unsafe_prompt, replacement;
    std::vector<std::string> attributes;
    std::string out_file;
    double w_min = 0.0, w_max = 2.0;
    int count = 5;
    bool as_json = false;

    auto* c_tok = app.add_subcommand("tokenize", "tokenize a prompt");
    add_common(c_tok, flags);
    c_tok->add_option("prompt", prompt, "prompt text")->required();
    c_tok->add_flag("--json", as_json, "emit JSON");

    auto* c_enc = app.add_subcommand("encode", "dump a prompt embedding archive");
    add_common(c_enc, flags);
    c_enc->add_option("prompt", prompt)->required();
    c_enc->add_option("--out-file", out_file, "archive path")->required();

    auto* c_edit = app.add_subcommand("edit", "dump an edited embedding archive");
    add_common(c_edit, flags);
    c_edit->add_option("--source", source, "source prompt")->required();
    c_edit->add_option("--target", target, "target prompt")->required();
    c_edit->add_option("--out-file", out_file, "archive path")->required();

    auto* c_gen = app.add_subcommand("generate", "generate one image");
    add_common(c_gen, flags);
    c_gen->add_option("prompt", prompt)->required();

    auto* c_cmp = app.add_subcommand("compare", "paired same-seed generation");
    add_common(c_cmp, flags);
    c_cmp->add_option("--source", source)->required();
    c_cmp->add_option("--target", target)->required();

    auto* c_base = app.add_subcommand("baseline", "prompt-concatenation baseline");
    add_common(c_base, flags);
    c_base->add_option("--source", source)->required();
    c_base->add_option("--attribute", attributes, "appended attribute (repeatable)");

    auto* c_sweep = app.add_subcommand("sweep", "guidance-scale sweep");
    add_common(c_sweep, flags);
    c_sweep->add_option("--source", source)->required();
    c_sweep->add_option("--target", target)->required();
    c_sweep->add_option("--w-min", w_min, "lowest w");
    c_sweep->add_option("--w-max", w_max, "highest w");
    c_sweep->add_option("--count", count, "number of sweep points");

    auto* c_mod = app.add_subcommand("moderate", "replace unsafe conditioning");
    add_common(c_mod, flags);
    c_mod->add_option("--unsafe", unsafe_prompt, "prompt to moderate")->required();
    c_mod->add_option("--replacement", replacement, "replacement prompt")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kInputError;
    }

    try {
        using namespace eosedit;
        pipeline::RunConfig cfg = resolve_config(flags);

        if (c_tok->parsed()) {
            Vocabulary vocab = load_vocabulary_files(cfg.vocab_path, cfg.merges_path,
                                                     cfg.context_len);
            pipeline::TokenizeReport r = pipeline::run_tokenize(vocab, prompt);
            if (as_json) {
                nlohmann::ordered_json j;
                j["prompt"] = prompt;
                j["normalized"] = r.normalized;
                j["ids"] = r.seq.ids;
                j["eos_index"] = r.seq.eos_index;
                j["content_len"] = r.seq.content_len;
                std::cout << j.dump(1) << "\n";
            } else {
                std::cout << "normalized: " << r.normalized << "\n";
                std::cout << "eos_index: " << r.seq.eos_index
                          << "  content_len: " << r.seq.content_len << "\nids:";
                for (int id : r.seq.ids) std::cout << ' ' << id;
                std::cout << "\n";
            }
            return kOk;
        }

        pipeline::Context ctx = pipeline::Context::open(cfg);

        if (c_enc->parsed()) {
            print_files(pipeline::run_encode_dump(ctx, prompt, out_file));
        } else if (c_edit->parsed()) {
            print_files(pipeline::run_edit_dump(ctx, source, target, cfg.w, out_file));
        } else if (c_gen->parsed()) {
            print_files(pipeline::run_generate(ctx, prompt, cfg.seed, cfg.steps, cfg.cfg_scale,
                                               cfg.out_dir));
        } else if (c_cmp->parsed()) {
            auto res = pipeline::run_compare(ctx, source, target, cfg.w, cfg.seed, cfg.steps,
                                             cfg.cfg_scale, cfg.out_dir);
            std::cout << "embedding_distance: " << pipeline::format_double(res.embedding_distance)
                      << "\n";
            print_files(res.files);
        } else if (c_base->parsed()) {
            auto res = pipeline::run_baseline_concat(ctx, source, attributes, cfg.seed, cfg.steps,
                                                     cfg.cfg_scale, cfg.out_dir);
            std::cout << "concat_prompt: " << res.concat_prompt << "\n";
            print_files(res.files);
        } else if (c_sweep->parsed()) {
            auto res = pipeline::run_sweep(ctx, source, target, w_min, w_max, count, cfg.seed,
                                           cfg.steps, cfg.cfg_scale, cfg.out_dir);
            print_files(res.files);
        } else if (c_mod->parsed()) {
            auto res = pipeline::run_moderate(ctx, unsafe_prompt, replacement, cfg.w, cfg.seed,
                                              cfg.steps, cfg.cfg_scale, cfg.out_dir);
            std::cout << "embedding_distance: " << pipeline::format_double(res.embedding_distance)
                      << "\n";
            print_files(res.files);
        }
        return kOk;
    } catch (const eosedit::backend_error& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kBackendError;
    } catch (const eosedit::input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const eosedit::parameter_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const eosedit::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPipelineError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPipelineError;
    }
}
