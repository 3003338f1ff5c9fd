#include "cfx/archive.hpp"

#include <cstring>
#include <fstream>

#include "cfx/errors.hpp"

namespace cfx {

namespace {

constexpr char kMagic[8] = {'C', 'F', 'X', 'T', 'A', 'R', '0', '1'};

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_str(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
uint32_t read_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::string read_str(std::istream& is) {
    uint32_t n = read_u32(is);
    if (n > (1u << 24)) throw PersistenceError("archive string too long");
    std::string s(n, '\0');
    is.read(s.data(), n);
    return s;
}

}  // namespace

const Tensor& TensorArchive::get(const std::string& name) const {
    for (auto& [n, t] : tensors)
        if (n == name) return t;
    throw PersistenceError("archive missing tensor: " + name);
}

bool TensorArchive::has(const std::string& name) const {
    for (auto& [n, t] : tensors)
        if (n == name) return true;
    return false;
}

std::string TensorArchive::meta_at(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw PersistenceError("archive missing metadata: " + key);
    return it->second;
}

double TensorArchive::meta_double(const std::string& key) const { return std::stod(meta_at(key)); }
int TensorArchive::meta_int(const std::string& key) const { return std::stoi(meta_at(key)); }

void TensorArchive::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw PersistenceError("cannot write archive: " + path.string());
    os.write(kMagic, 8);
    write_u32(os, static_cast<uint32_t>(meta.size()));
    for (auto& [k, v] : meta) {
        write_str(os, k);
        write_str(os, v);
    }
    write_u32(os, static_cast<uint32_t>(tensors.size()));
    for (auto& [name, t] : tensors) {
        write_str(os, name);
        write_u32(os, static_cast<uint32_t>(t.ndim()));
        for (int i = 0; i < t.ndim(); ++i) write_u32(os, static_cast<uint32_t>(t.dim(i)));
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    if (!os) throw PersistenceError("archive write failed: " + path.string());
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw PersistenceError("cannot read archive: " + path.string());
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw PersistenceError("not a tensor archive: " + path.string());
    TensorArchive a;
    uint32_t nmeta = read_u32(is);
    for (uint32_t i = 0; i < nmeta; ++i) {
        std::string k = read_str(is);
        a.meta[k] = read_str(is);
    }
    uint32_t nt = read_u32(is);
    for (uint32_t i = 0; i < nt; ++i) {
        std::string name = read_str(is);
        uint32_t nd = read_u32(is);
        if (nd > 8) throw PersistenceError("archive tensor rank too large");
        std::vector<int> shape(nd);
        for (auto& d : shape) d = static_cast<int>(read_u32(is));
        Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        a.tensors.emplace_back(name, std::move(t));
    }
    if (!is) throw PersistenceError("archive truncated: " + path.string());
    return a;
}

}  // namespace cfx
