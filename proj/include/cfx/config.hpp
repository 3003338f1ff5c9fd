#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cfx {

// ---- per-stage configs ----

struct SynthConfig {
    uint64_t master_seed = 20240901;
    int image_size = 64;
    int n_healthy = 450;
    int n_pathological = 450;
    int n_train = 600, n_val = 100, n_test = 200;
    int lesion_count_min = 1, lesion_count_max = 1;
    int lesion_radius_min = 3, lesion_radius_max = 6;
    double contrast = 0.40;
    double noise_amp = 0.03;
    double bg_base = 0.42;
    double bg_amp = 0.10;
    int bg_cell = 16;

    void validate() const;
    double mean_lesion_area() const;  // expected half-peak disk area over the radius range
};

struct ScorerConfig {
    uint64_t seed = 11;
    std::vector<int> widths = {16, 32, 64, 128};
    int kernel = 3;
    double lr = 1e-3;
    int epochs = 40;
    int batch = 16;
    int patience = 8;
    void validate() const;
};

struct MaskGenConfig {
    double fraction_min = 0.05, fraction_max = 0.25;
    int stroke_max = 4;
    int blob_max = 4;
    int stroke_width_min = 2, stroke_width_max = 4;
    int blob_radius_min = 2, blob_radius_max = 5;
    int resample_tries = 100;
    void validate() const;
};

struct InpainterConfig {
    uint64_t seed = 22;
    std::vector<int> depths = {32, 64, 128, 256, 256};
    std::vector<int> ksizes = {7, 5, 5, 3, 3};
    double lr_phase1 = 2e-4;
    double lr_phase2 = 5e-5;
    int epochs_phase1 = 10;
    int epochs_phase2 = 4;
    MaskGenConfig mask;
    void validate() const;
};

struct AttributorConfig {
    uint64_t seed = 33;
    double threshold = 0.55;
    double sigma_rbf = 0.05;  // fraction of min(H,W)
    double smoothing = 30.0;  // log-sum-exp sharpness
    double lr_min = 1e-6, lr_max = 1e-4;
    int cycle_epochs = 4;
    int epochs = 30;
    int patience = 10;
    double lambda = 0.5;
    double k_phi = 1.0, x0_phi = 0.0;
    double k_psi = 1.0, x0_psi = 0.0;
    double k_tv = 1.0, x0_tv = 0.0;
    double penalty_init = 1.0;
    int penalty_double_every = 200;
    double delta = 0.0;  // pixels; 0 = auto (2x mean lesion area of the train split)
    std::string merge = "concat";  // or "add"
    double init_std = 0.05;
    void validate() const;
};

struct EvalConfig {
    uint64_t seed = 44;
    std::vector<int> percentiles = {50, 75, 90};
    double iou_tau = 0.125;
    bool iou_literal_le = false;  // literal reading of the found-box rule (IOU <= tau)
    int roc_runs = 10;
    int sanity_draws = 10;
    int bench_reps = 10;
    void validate() const;
};

struct RunConfig {
    uint64_t seed = 1234;
    std::string out = "runs";
    int threads = 0;  // 0 = library default

    SynthConfig data;
    ScorerConfig classifier;
    InpainterConfig inpainter;
    AttributorConfig attributor;
    EvalConfig eval;

    void validate() const;
    // Canonical key-sorted serialization; identical configs hash identically.
    std::string canonical_text() const;
    std::string config_hash() const;  // 16 hex chars of fnv1a(canonical_text)
};

// Parses a config file, applies "section.key=value" overrides, validates.
// Unknown sections or keys are rejected.
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});
RunConfig parse_run_config(const std::string& text,
                           const std::vector<std::string>& overrides = {});

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

std::string format_double(double v);  // shortest round-trip representation

}  // namespace cfx
