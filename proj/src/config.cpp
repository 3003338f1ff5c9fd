#include "cfx/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cfx/errors.hpp"
#include "cfx/rng.hpp"

namespace cfx {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = std::strtod(buf, nullptr);
    if (back == v) {
        for (int prec = 1; prec < 17; ++prec) {
            char b2[64];
            std::snprintf(b2, sizeof(b2), "%.*g", prec, v);
            if (std::strtod(b2, nullptr) == v) return b2;
        }
    }
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw PersistenceError("cannot write " + path.string());
    f << text;
    if (!f) throw PersistenceError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw PersistenceError("cannot read " + path.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// ---- validation ----

void SynthConfig::validate() const {
    if (image_size < 16 || image_size > 128) throw ConfigError("data.image_size must be in [16,128]");
    if (n_healthy < 0 || n_pathological < 0) throw ConfigError("data sample counts must be >= 0");
    if (n_train + n_val + n_test != n_healthy + n_pathological)
        throw ConfigError("data split sizes must sum to n_healthy + n_pathological");
    if (lesion_count_min < 1 || lesion_count_max < lesion_count_min)
        throw ConfigError("data.lesion_count range invalid");
    if (lesion_radius_min < 2 || lesion_radius_max < lesion_radius_min)
        throw ConfigError("data.lesion_radius range invalid");
    if (lesion_radius_max * 4 >= image_size) throw ConfigError("lesion radius too large for image size");
    if (contrast <= 0.0 || contrast > 1.0) throw ConfigError("data.contrast must be in (0,1]");
    if (noise_amp < 0.0) throw ConfigError("data.noise_amp must be >= 0");
    if (contrast <= noise_amp) throw ConfigError("data.contrast must exceed data.noise_amp");
    if (bg_cell < 2) throw ConfigError("data.bg_cell must be >= 2");
}

double SynthConfig::mean_lesion_area() const {
    double s = 0.0;
    int n = 0;
    for (int r = lesion_radius_min; r <= lesion_radius_max; ++r, ++n) s += M_PI * r * r;
    return s / std::max(1, n);
}

void ScorerConfig::validate() const {
    if (widths.size() != 4) throw ConfigError("classifier.widths must list 4 stage widths");
    for (int w : widths)
        if (w < 1) throw ConfigError("classifier.widths must be positive");
    if (kernel % 2 == 0 || kernel < 1) throw ConfigError("classifier.kernel must be odd");
    if (lr <= 0) throw ConfigError("classifier.lr must be > 0");
    if (epochs < 0) throw ConfigError("classifier.epochs must be >= 0");
    if (batch < 1) throw ConfigError("classifier.batch must be >= 1");
}

void MaskGenConfig::validate() const {
    if (fraction_min < 0 || fraction_max <= 0 || fraction_min > fraction_max || fraction_max > 0.9)
        throw ConfigError("inpainter.mask fraction range invalid");
    if (stroke_max < 0 || blob_max < 0) throw ConfigError("inpainter.mask counts must be >= 0");
    if (stroke_width_min < 1 || stroke_width_max < stroke_width_min)
        throw ConfigError("inpainter.mask stroke width range invalid");
    if (blob_radius_min < 1 || blob_radius_max < blob_radius_min)
        throw ConfigError("inpainter.mask blob radius range invalid");
    if (resample_tries < 1) throw ConfigError("inpainter.mask_resample_tries must be >= 1");
}

void InpainterConfig::validate() const {
    if (depths.empty() || depths.size() != ksizes.size())
        throw ConfigError("inpainter.depths and inpainter.ksizes must have matching lengths");
    for (int d : depths)
        if (d < 1) throw ConfigError("inpainter.depths must be positive");
    for (int k : ksizes)
        if (k < 1 || k % 2 == 0) throw ConfigError("inpainter.ksizes must be odd positive");
    if (lr_phase1 <= 0 || lr_phase2 <= 0) throw ConfigError("inpainter learning rates must be > 0");
    if (epochs_phase1 < 0 || epochs_phase2 < 0) throw ConfigError("inpainter epochs must be >= 0");
    mask.validate();
}

void AttributorConfig::validate() const {
    if (threshold <= 0 || threshold >= 1) throw ConfigError("attributor.threshold must be in (0,1)");
    if (sigma_rbf <= 0) throw ConfigError("attributor.sigma_rbf must be > 0");
    if (smoothing <= 0) throw ConfigError("attributor.smoothing must be > 0");
    if (lr_min <= 0 || lr_max < lr_min) throw ConfigError("attributor learning rate range invalid");
    if (lambda < 0) throw ConfigError("attributor.lambda must be >= 0");
    if (penalty_init < 0) throw ConfigError("attributor.penalty_init must be >= 0");
    if (penalty_double_every < 1) throw ConfigError("attributor.penalty_double_every must be >= 1");
    if (delta < 0) throw ConfigError("attributor.delta must be >= 0");
    if (merge != "concat" && merge != "add") throw ConfigError("attributor.merge must be concat|add");
    if (init_std <= 0) throw ConfigError("attributor.init_std must be > 0");
}

void EvalConfig::validate() const {
    if (percentiles.empty()) throw ConfigError("eval.percentiles must be nonempty");
    for (int p : percentiles)
        if (p <= 0 || p >= 100) throw ConfigError("eval.percentiles must be in (0,100)");
    if (iou_tau <= 0 || iou_tau >= 1) throw ConfigError("eval.iou_tau must be in (0,1)");
    if (roc_runs < 1 || sanity_draws < 1 || bench_reps < 10)
        throw ConfigError("eval run counts invalid (bench_reps must be >= 10)");
}

void RunConfig::validate() const {
    data.validate();
    classifier.validate();
    inpainter.validate();
    attributor.validate();
    eval.validate();
}

// ---- raw ini parsing ----

namespace {

struct RawConfig {
    // section -> key -> value, plus seen-flags for unknown-key detection
    std::map<std::string, std::map<std::string, std::string>> sections;
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

RawConfig parse_ini(const std::string& text) {
    RawConfig rc;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
            section = trim(t.substr(1, t.size() - 2));
            rc.sections[section];
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": key outside a section");
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (rc.sections[section].count(key))
            throw ConfigError("duplicate key " + section + "." + key);
        rc.sections[section][key] = val;
    }
    return rc;
}

class SectionReader {
public:
    SectionReader(RawConfig& rc, std::string name) : rc_(rc), name_(std::move(name)) {}

    template <typename F>
    void key(const std::string& k, F&& apply) {
        auto sit = rc_.sections.find(name_);
        if (sit == rc_.sections.end()) return;
        auto it = sit->second.find(k);
        if (it == sit->second.end()) return;
        try {
            apply(it->second);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("bad value for " + name_ + "." + k + ": " + e.what());
        }
        seen_.insert(k);
    }

    void finish() {
        auto sit = rc_.sections.find(name_);
        if (sit == rc_.sections.end()) return;
        for (auto& [k, v] : sit->second)
            if (!seen_.count(k)) throw ConfigError("unknown key " + name_ + "." + k);
        done_.insert(name_);
    }

    static void check_sections(const RawConfig& rc) {
        for (auto& [s, kv] : rc.sections)
            if (!done_.count(s)) throw ConfigError("unknown config section [" + s + "]");
    }
    static void reset_done() { done_.clear(); }

private:
    RawConfig& rc_;
    std::string name_;
    std::set<std::string> seen_;
    static inline std::set<std::string> done_;
};

uint64_t to_u64(const std::string& s) { return std::stoull(s); }
int to_int(const std::string& s) { return std::stoi(s); }
double to_dbl(const std::string& s) {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::runtime_error("trailing characters");
    return v;
}
bool to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::runtime_error("expected boolean");
}
std::vector<int> to_int_list(const std::string& s) {
    std::vector<int> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) v.push_back(std::stoi(tok));
    }
    if (v.empty()) throw std::runtime_error("empty list");
    return v;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::vector<std::string>& overrides) {
    RawConfig rc = parse_ini(text);
    for (const auto& ov : overrides) {
        size_t eq = ov.find('=');
        size_t dot = ov.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("override must look like section.key=value: " + ov);
        std::string sec = trim(ov.substr(0, dot));
        std::string key = trim(ov.substr(dot + 1, eq - dot - 1));
        std::string val = trim(ov.substr(eq + 1));
        rc.sections[sec][key] = val;
    }

    RunConfig c;
    SectionReader::reset_done();

    SectionReader run(rc, "run");
    run.key("seed", [&](const std::string& s) { c.seed = to_u64(s); });
    run.key("out", [&](const std::string& s) { c.out = s; });
    run.key("threads", [&](const std::string& s) { c.threads = to_int(s); });
    run.finish();

    SectionReader d(rc, "data");
    d.key("master_seed", [&](const std::string& s) { c.data.master_seed = to_u64(s); });
    d.key("image_size", [&](const std::string& s) { c.data.image_size = to_int(s); });
    d.key("n_healthy", [&](const std::string& s) { c.data.n_healthy = to_int(s); });
    d.key("n_pathological", [&](const std::string& s) { c.data.n_pathological = to_int(s); });
    d.key("n_train", [&](const std::string& s) { c.data.n_train = to_int(s); });
    d.key("n_val", [&](const std::string& s) { c.data.n_val = to_int(s); });
    d.key("n_test", [&](const std::string& s) { c.data.n_test = to_int(s); });
    d.key("lesion_count_min", [&](const std::string& s) { c.data.lesion_count_min = to_int(s); });
    d.key("lesion_count_max", [&](const std::string& s) { c.data.lesion_count_max = to_int(s); });
    d.key("lesion_radius_min", [&](const std::string& s) { c.data.lesion_radius_min = to_int(s); });
    d.key("lesion_radius_max", [&](const std::string& s) { c.data.lesion_radius_max = to_int(s); });
    d.key("contrast", [&](const std::string& s) { c.data.contrast = to_dbl(s); });
    d.key("noise_amp", [&](const std::string& s) { c.data.noise_amp = to_dbl(s); });
    d.key("bg_base", [&](const std::string& s) { c.data.bg_base = to_dbl(s); });
    d.key("bg_amp", [&](const std::string& s) { c.data.bg_amp = to_dbl(s); });
    d.key("bg_cell", [&](const std::string& s) { c.data.bg_cell = to_int(s); });
    d.finish();

    SectionReader cl(rc, "classifier");
    cl.key("seed", [&](const std::string& s) { c.classifier.seed = to_u64(s); });
    cl.key("widths", [&](const std::string& s) { c.classifier.widths = to_int_list(s); });
    cl.key("kernel", [&](const std::string& s) { c.classifier.kernel = to_int(s); });
    cl.key("lr", [&](const std::string& s) { c.classifier.lr = to_dbl(s); });
    cl.key("epochs", [&](const std::string& s) { c.classifier.epochs = to_int(s); });
    cl.key("batch", [&](const std::string& s) { c.classifier.batch = to_int(s); });
    cl.key("patience", [&](const std::string& s) { c.classifier.patience = to_int(s); });
    cl.finish();

    SectionReader in(rc, "inpainter");
    in.key("seed", [&](const std::string& s) { c.inpainter.seed = to_u64(s); });
    in.key("depths", [&](const std::string& s) { c.inpainter.depths = to_int_list(s); });
    in.key("ksizes", [&](const std::string& s) { c.inpainter.ksizes = to_int_list(s); });
    in.key("lr_phase1", [&](const std::string& s) { c.inpainter.lr_phase1 = to_dbl(s); });
    in.key("lr_phase2", [&](const std::string& s) { c.inpainter.lr_phase2 = to_dbl(s); });
    in.key("epochs_phase1", [&](const std::string& s) { c.inpainter.epochs_phase1 = to_int(s); });
    in.key("epochs_phase2", [&](const std::string& s) { c.inpainter.epochs_phase2 = to_int(s); });
    in.key("mask_fraction_min", [&](const std::string& s) { c.inpainter.mask.fraction_min = to_dbl(s); });
    in.key("mask_fraction_max", [&](const std::string& s) { c.inpainter.mask.fraction_max = to_dbl(s); });
    in.key("mask_stroke_max", [&](const std::string& s) { c.inpainter.mask.stroke_max = to_int(s); });
    in.key("mask_blob_max", [&](const std::string& s) { c.inpainter.mask.blob_max = to_int(s); });
    in.key("mask_stroke_width_min", [&](const std::string& s) { c.inpainter.mask.stroke_width_min = to_int(s); });
    in.key("mask_stroke_width_max", [&](const std::string& s) { c.inpainter.mask.stroke_width_max = to_int(s); });
    in.key("mask_blob_radius_min", [&](const std::string& s) { c.inpainter.mask.blob_radius_min = to_int(s); });
    in.key("mask_blob_radius_max", [&](const std::string& s) { c.inpainter.mask.blob_radius_max = to_int(s); });
    in.key("mask_resample_tries", [&](const std::string& s) { c.inpainter.mask.resample_tries = to_int(s); });
    in.finish();

    SectionReader at(rc, "attributor");
    at.key("seed", [&](const std::string& s) { c.attributor.seed = to_u64(s); });
    at.key("threshold", [&](const std::string& s) { c.attributor.threshold = to_dbl(s); });
    at.key("sigma_rbf", [&](const std::string& s) { c.attributor.sigma_rbf = to_dbl(s); });
    at.key("smoothing", [&](const std::string& s) { c.attributor.smoothing = to_dbl(s); });
    at.key("lr_min", [&](const std::string& s) { c.attributor.lr_min = to_dbl(s); });
    at.key("lr_max", [&](const std::string& s) { c.attributor.lr_max = to_dbl(s); });
    at.key("cycle_epochs", [&](const std::string& s) { c.attributor.cycle_epochs = to_int(s); });
    at.key("epochs", [&](const std::string& s) { c.attributor.epochs = to_int(s); });
    at.key("patience", [&](const std::string& s) { c.attributor.patience = to_int(s); });
    at.key("lambda", [&](const std::string& s) { c.attributor.lambda = to_dbl(s); });
    at.key("k_phi", [&](const std::string& s) { c.attributor.k_phi = to_dbl(s); });
    at.key("x0_phi", [&](const std::string& s) { c.attributor.x0_phi = to_dbl(s); });
    at.key("k_psi", [&](const std::string& s) { c.attributor.k_psi = to_dbl(s); });
    at.key("x0_psi", [&](const std::string& s) { c.attributor.x0_psi = to_dbl(s); });
    at.key("k_tv", [&](const std::string& s) { c.attributor.k_tv = to_dbl(s); });
    at.key("x0_tv", [&](const std::string& s) { c.attributor.x0_tv = to_dbl(s); });
    at.key("penalty_init", [&](const std::string& s) { c.attributor.penalty_init = to_dbl(s); });
    at.key("penalty_double_every", [&](const std::string& s) { c.attributor.penalty_double_every = to_int(s); });
    at.key("delta", [&](const std::string& s) { c.attributor.delta = to_dbl(s); });
    at.key("merge", [&](const std::string& s) { c.attributor.merge = s; });
    at.key("init_std", [&](const std::string& s) { c.attributor.init_std = to_dbl(s); });
    at.finish();

    SectionReader ev(rc, "eval");
    ev.key("seed", [&](const std::string& s) { c.eval.seed = to_u64(s); });
    ev.key("percentiles", [&](const std::string& s) { c.eval.percentiles = to_int_list(s); });
    ev.key("iou_tau", [&](const std::string& s) { c.eval.iou_tau = to_dbl(s); });
    ev.key("iou_literal_le", [&](const std::string& s) { c.eval.iou_literal_le = to_bool(s); });
    ev.key("roc_runs", [&](const std::string& s) { c.eval.roc_runs = to_int(s); });
    ev.key("sanity_draws", [&](const std::string& s) { c.eval.sanity_draws = to_int(s); });
    ev.key("bench_reps", [&](const std::string& s) { c.eval.bench_reps = to_int(s); });
    ev.finish();

    SectionReader::check_sections(rc);
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    return parse_run_config(read_text_file(path), overrides);
}

std::string RunConfig::canonical_text() const {
    std::ostringstream os;
    os << "[run]\n";
    os << "out = " << out << "\n";
    os << "seed = " << seed << "\n";
    os << "threads = " << threads << "\n";
    os << "\n[data]\n";
    os << "bg_amp = " << format_double(data.bg_amp) << "\n";
    os << "bg_base = " << format_double(data.bg_base) << "\n";
    os << "bg_cell = " << data.bg_cell << "\n";
    os << "contrast = " << format_double(data.contrast) << "\n";
    os << "image_size = " << data.image_size << "\n";
    os << "lesion_count_max = " << data.lesion_count_max << "\n";
    os << "lesion_count_min = " << data.lesion_count_min << "\n";
    os << "lesion_radius_max = " << data.lesion_radius_max << "\n";
    os << "lesion_radius_min = " << data.lesion_radius_min << "\n";
    os << "master_seed = " << data.master_seed << "\n";
    os << "n_healthy = " << data.n_healthy << "\n";
    os << "n_pathological = " << data.n_pathological << "\n";
    os << "n_test = " << data.n_test << "\n";
    os << "n_train = " << data.n_train << "\n";
    os << "n_val = " << data.n_val << "\n";
    os << "noise_amp = " << format_double(data.noise_amp) << "\n";
    os << "\n[classifier]\n";
    os << "batch = " << classifier.batch << "\n";
    os << "epochs = " << classifier.epochs << "\n";
    os << "kernel = " << classifier.kernel << "\n";
    os << "lr = " << format_double(classifier.lr) << "\n";
    os << "patience = " << classifier.patience << "\n";
    os << "seed = " << classifier.seed << "\n";
    os << "widths = " << join_ints(classifier.widths) << "\n";
    os << "\n[inpainter]\n";
    os << "depths = " << join_ints(inpainter.depths) << "\n";
    os << "epochs_phase1 = " << inpainter.epochs_phase1 << "\n";
    os << "epochs_phase2 = " << inpainter.epochs_phase2 << "\n";
    os << "ksizes = " << join_ints(inpainter.ksizes) << "\n";
    os << "lr_phase1 = " << format_double(inpainter.lr_phase1) << "\n";
    os << "lr_phase2 = " << format_double(inpainter.lr_phase2) << "\n";
    os << "mask_blob_max = " << inpainter.mask.blob_max << "\n";
    os << "mask_blob_radius_max = " << inpainter.mask.blob_radius_max << "\n";
    os << "mask_blob_radius_min = " << inpainter.mask.blob_radius_min << "\n";
    os << "mask_fraction_max = " << format_double(inpainter.mask.fraction_max) << "\n";
    os << "mask_fraction_min = " << format_double(inpainter.mask.fraction_min) << "\n";
    os << "mask_resample_tries = " << inpainter.mask.resample_tries << "\n";
    os << "mask_stroke_max = " << inpainter.mask.stroke_max << "\n";
    os << "mask_stroke_width_max = " << inpainter.mask.stroke_width_max << "\n";
    os << "mask_stroke_width_min = " << inpainter.mask.stroke_width_min << "\n";
    os << "seed = " << inpainter.seed << "\n";
    os << "\n[attributor]\n";
    os << "cycle_epochs = " << attributor.cycle_epochs << "\n";
    os << "delta = " << format_double(attributor.delta) << "\n";
    os << "epochs = " << attributor.epochs << "\n";
    os << "init_std = " << format_double(attributor.init_std) << "\n";
    os << "k_phi = " << format_double(attributor.k_phi) << "\n";
    os << "k_psi = " << format_double(attributor.k_psi) << "\n";
    os << "k_tv = " << format_double(attributor.k_tv) << "\n";
    os << "lambda = " << format_double(attributor.lambda) << "\n";
    os << "lr_max = " << format_double(attributor.lr_max) << "\n";
    os << "lr_min = " << format_double(attributor.lr_min) << "\n";
    os << "merge = " << attributor.merge << "\n";
    os << "patience = " << attributor.patience << "\n";
    os << "penalty_double_every = " << attributor.penalty_double_every << "\n";
    os << "penalty_init = " << format_double(attributor.penalty_init) << "\n";
    os << "seed = " << attributor.seed << "\n";
    os << "sigma_rbf = " << format_double(attributor.sigma_rbf) << "\n";
    os << "smoothing = " << format_double(attributor.smoothing) << "\n";
    os << "threshold = " << format_double(attributor.threshold) << "\n";
    os << "x0_phi = " << format_double(attributor.x0_phi) << "\n";
    os << "x0_psi = " << format_double(attributor.x0_psi) << "\n";
    os << "x0_tv = " << format_double(attributor.x0_tv) << "\n";
    os << "\n[eval]\n";
    os << "bench_reps = " << eval.bench_reps << "\n";
    os << "iou_literal_le = " << (eval.iou_literal_le ? "true" : "false") << "\n";
    os << "iou_tau = " << format_double(eval.iou_tau) << "\n";
    os << "percentiles = " << join_ints(eval.percentiles) << "\n";
    os << "roc_runs = " << eval.roc_runs << "\n";
    os << "sanity_draws = " << eval.sanity_draws << "\n";
    os << "seed = " << eval.seed << "\n";
    return os.str();
}

std::string RunConfig::config_hash() const {
    std::string t = canonical_text();
    uint64_t h = fnv1a(t.data(), t.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace cfx
