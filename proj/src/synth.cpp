#include "cfx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cfx/errors.hpp"
#include "cfx/rng.hpp"

namespace cfx {

namespace {

// Low-frequency background: bilinear interpolation of a coarse random knot
// grid, cell size config.bg_cell pixels.
Grid random_background(Rng& rng, const SynthConfig& c) {
    int n = c.image_size;
    int cells = (n + c.bg_cell - 1) / c.bg_cell + 1;
    std::vector<double> knots(static_cast<size_t>(cells + 1) * (cells + 1));
    for (auto& k : knots) k = c.bg_base + c.bg_amp * (2.0 * rng.uniform() - 1.0);
    Grid g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double fy = static_cast<double>(i) / c.bg_cell;
            double fx = static_cast<double>(j) / c.bg_cell;
            int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
            double ay = fy - y0, ax = fx - x0;
            auto knot = [&](int y, int x) { return knots[static_cast<size_t>(y) * (cells + 1) + x]; };
            g.at(i, j) = (1 - ay) * ((1 - ax) * knot(y0, x0) + ax * knot(y0, x0 + 1)) +
                         ay * ((1 - ax) * knot(y0 + 1, x0) + ax * knot(y0 + 1, x0 + 1));
        }
    return g;
}

struct Lesion {
    double cy, cx;
    int radius;  // half-peak radius in pixels
};

// Compact bright blob: super-Gaussian profile exp(-(d/s)^4). The quartic
// falloff keeps the inside/outside intensity separation required of the
// dataset; a plain Gaussian tail is too slow for the 3-pixel ring contract.
constexpr double kHalfPeakScale = 0.91244;  // (ln 2)^(1/4); s = r / this

double lesion_field_at(const Lesion& l, int i, int j) {
    double dy = i - l.cy, dx = j - l.cx;
    double d2 = dy * dy + dx * dx;
    double s = l.radius / kHalfPeakScale;
    double u = d2 / (s * s);
    return std::exp(-u * u);
}

std::vector<Lesion> place_lesions(Rng& rng, const SynthConfig& c) {
    int n_lesions = static_cast<int>(rng.uniform_int(c.lesion_count_min, c.lesion_count_max));
    std::vector<Lesion> out;
    for (int k = 0; k < n_lesions; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
            Lesion l;
            l.radius = static_cast<int>(rng.uniform_int(c.lesion_radius_min, c.lesion_radius_max));
            int margin = l.radius + 6;
            l.cy = rng.uniform(margin, c.image_size - 1 - margin);
            l.cx = rng.uniform(margin, c.image_size - 1 - margin);
            placed = true;
            for (const auto& o : out) {
                double dy = l.cy - o.cy, dx = l.cx - o.cx;
                double min_sep = l.radius + o.radius + 8.0;
                if (dy * dy + dx * dx < min_sep * min_sep) {
                    placed = false;
                    break;
                }
            }
            if (placed) out.push_back(l);
        }
        if (!placed)
            throw ConfigError("could not place lesions without overlap; reduce count or radius");
    }
    return out;
}

}  // namespace

LabeledImage generate_sample(uint64_t seed, Label label, const SynthConfig& config) {
    config.validate();
    Rng rng(seed);
    LabeledImage s;
    s.seed = seed;
    s.label = label;
    s.pixels = random_background(rng, config);
    int n = config.image_size;
    for (auto& v : s.pixels.px) v += config.noise_amp * (2.0 * rng.uniform() - 1.0);
    s.gt_mask = BinaryMask(n, n);
    if (label == Label::pathological) {
        auto lesions = place_lesions(rng, config);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double f = 0.0;
                for (const auto& l : lesions) f += lesion_field_at(l, i, j);
                s.pixels.at(i, j) += config.contrast * f;
                // ground truth: lesion contribution above half its peak amplitude
                if (f >= 0.5) s.gt_mask.at(i, j) = 1;
            }
    }
    quantize16(s.pixels);
    return s;
}

std::vector<const SampleRecord*> DatasetManifest::select(Split s) const {
    std::vector<const SampleRecord*> out;
    for (auto& r : samples)
        if (r.split == s) out.push_back(&r);
    return out;
}

std::vector<const SampleRecord*> DatasetManifest::select(Split s, Label l) const {
    std::vector<const SampleRecord*> out;
    for (auto& r : samples)
        if (r.split == s && r.label == l) out.push_back(&r);
    return out;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
    std::ostringstream os;
    os << "cfx-dataset-manifest v1\n";
    os << "config_hash = " << config_hash << "\n";
    os << "image_size = " << config.image_size << "\n";
    os << "master_seed = " << config.master_seed << "\n";
    os << "n_healthy = " << config.n_healthy << "\n";
    os << "n_pathological = " << config.n_pathological << "\n";
    os << "n_train = " << config.n_train << "\n";
    os << "n_val = " << config.n_val << "\n";
    os << "n_test = " << config.n_test << "\n";
    os << "lesion_count_min = " << config.lesion_count_min << "\n";
    os << "lesion_count_max = " << config.lesion_count_max << "\n";
    os << "lesion_radius_min = " << config.lesion_radius_min << "\n";
    os << "lesion_radius_max = " << config.lesion_radius_max << "\n";
    os << "contrast = " << format_double(config.contrast) << "\n";
    os << "noise_amp = " << format_double(config.noise_amp) << "\n";
    os << "bg_base = " << format_double(config.bg_base) << "\n";
    os << "bg_amp = " << format_double(config.bg_amp) << "\n";
    os << "bg_cell = " << config.bg_cell << "\n";
    for (const auto& r : samples)
        os << "sample id=" << r.id << " split=" << split_name(r.split) << " label=" << label_name(r.label)
           << " seed=" << r.seed << " image=" << r.image_path << " mask=" << r.mask_path << "\n";
    write_text_file(path, os.str());
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw PersistenceError("cannot read manifest: " + path.string());
    DatasetManifest m;
    m.root = path.parent_path();
    std::string line;
    if (!std::getline(f, line) || line != "cfx-dataset-manifest v1")
        throw PersistenceError("bad manifest header: " + path.string());
    auto parse_kv = [](const std::string& l, std::string& k, std::string& v) {
        size_t eq = l.find(" = ");
        if (eq == std::string::npos) return false;
        k = l.substr(0, eq);
        v = l.substr(eq + 3);
        return true;
    };
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line.rfind("sample ", 0) == 0) {
            SampleRecord r;
            std::istringstream is(line.substr(7));
            std::string tok;
            while (is >> tok) {
                size_t eq = tok.find('=');
                if (eq == std::string::npos) throw PersistenceError("bad sample record: " + line);
                std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
                if (k == "id") r.id = v;
                else if (k == "split")
                    r.split = v == "train" ? Split::train : (v == "val" ? Split::val : Split::test);
                else if (k == "label")
                    r.label = v == "healthy" ? Label::healthy : Label::pathological;
                else if (k == "seed")
                    r.seed = std::stoull(v);
                else if (k == "image")
                    r.image_path = v;
                else if (k == "mask")
                    r.mask_path = v;
                else
                    throw PersistenceError("unknown sample field " + k);
            }
            m.samples.push_back(std::move(r));
            continue;
        }
        std::string k, v;
        if (!parse_kv(line, k, v)) throw PersistenceError("bad manifest line: " + line);
        if (k == "config_hash") m.config_hash = v;
        else if (k == "image_size") m.config.image_size = std::stoi(v);
        else if (k == "master_seed") m.config.master_seed = std::stoull(v);
        else if (k == "n_healthy") m.config.n_healthy = std::stoi(v);
        else if (k == "n_pathological") m.config.n_pathological = std::stoi(v);
        else if (k == "n_train") m.config.n_train = std::stoi(v);
        else if (k == "n_val") m.config.n_val = std::stoi(v);
        else if (k == "n_test") m.config.n_test = std::stoi(v);
        else if (k == "lesion_count_min") m.config.lesion_count_min = std::stoi(v);
        else if (k == "lesion_count_max") m.config.lesion_count_max = std::stoi(v);
        else if (k == "lesion_radius_min") m.config.lesion_radius_min = std::stoi(v);
        else if (k == "lesion_radius_max") m.config.lesion_radius_max = std::stoi(v);
        else if (k == "contrast") m.config.contrast = std::stod(v);
        else if (k == "noise_amp") m.config.noise_amp = std::stod(v);
        else if (k == "bg_base") m.config.bg_base = std::stod(v);
        else if (k == "bg_amp") m.config.bg_amp = std::stod(v);
        else if (k == "bg_cell") m.config.bg_cell = std::stoi(v);
        else
            throw PersistenceError("unknown manifest key " + k);
    }
    return m;
}

DatasetManifest generate_dataset(const SynthConfig& config, const std::filesystem::path& out_dir) {
    config.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    fs::create_directories(out_dir / "masks", ec);
    if (ec) throw PersistenceError("cannot create dataset directories under " + out_dir.string());

    // Deterministic split assignment, balanced per class: walk splits in
    // (train,val,test) order and hand each class its proportional share.
    int total = config.n_healthy + config.n_pathological;
    std::vector<std::pair<Label, Split>> assignment;
    assignment.reserve(static_cast<size_t>(total));
    auto class_share = [&](int split_n, int class_n) {
        return total == 0 ? 0 : (split_n * class_n + total / 2) / total;
    };
    int splits_n[3] = {config.n_train, config.n_val, config.n_test};
    int healthy_left = config.n_healthy, path_left = config.n_pathological;
    for (int si = 0; si < 3; ++si) {
        Split sp = si == 0 ? Split::train : (si == 1 ? Split::val : Split::test);
        int nh = std::min(healthy_left, class_share(splits_n[si], config.n_healthy));
        int np = splits_n[si] - nh;
        if (np > path_left) {
            nh += np - path_left;
            np = path_left;
        }
        if (si == 2) {  // last split absorbs rounding
            nh = healthy_left;
            np = path_left;
        }
        healthy_left -= nh;
        path_left -= np;
        for (int i = 0; i < nh; ++i) assignment.emplace_back(Label::healthy, sp);
        for (int i = 0; i < np; ++i) assignment.emplace_back(Label::pathological, sp);
    }

    DatasetManifest m;
    m.config = config;
    m.root = out_dir;
    uint64_t h = 0xcbf29ce484222325ULL;
    {
        std::ostringstream cs;
        cs << config.master_seed << "|" << config.image_size << "|" << config.n_healthy << "|"
           << config.n_pathological << "|" << config.n_train << "|" << config.n_val << "|" << config.n_test
           << "|" << config.lesion_count_min << "|" << config.lesion_count_max << "|"
           << config.lesion_radius_min << "|" << config.lesion_radius_max << "|"
           << format_double(config.contrast) << "|" << format_double(config.noise_amp) << "|"
           << format_double(config.bg_base) << "|" << format_double(config.bg_amp) << "|" << config.bg_cell;
        std::string t = cs.str();
        h = fnv1a(t.data(), t.size());
    }
    {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        m.config_hash = buf;
    }

    for (size_t idx = 0; idx < assignment.size(); ++idx) {
        auto [label, split] = assignment[idx];
        SampleRecord r;
        char id[16];
        std::snprintf(id, sizeof(id), "%05zu", idx);
        r.id = id;
        r.split = split;
        r.label = label;
        r.seed = mix_seed(config.master_seed, idx);
        r.image_path = std::string("images/") + id + ".png";
        r.mask_path = std::string("masks/") + id + ".png";
        LabeledImage s = generate_sample(r.seed, label, config);
        save_png16(out_dir / r.image_path, s.pixels);
        save_mask_png(out_dir / r.mask_path, s.gt_mask);
        m.samples.push_back(std::move(r));
    }
    m.save(out_dir / "manifest.txt");
    return m;
}

LabeledImage load_sample(const DatasetManifest& m, const SampleRecord& rec) {
    LabeledImage s;
    s.pixels = load_png16(m.root / rec.image_path);
    s.gt_mask = load_mask_png(m.root / rec.mask_path);
    s.label = rec.label;
    s.seed = rec.seed;
    return s;
}

}  // namespace cfx
