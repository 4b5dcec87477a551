#include "prl/serialize.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "prl/errors.hpp"

namespace prl {

namespace {

constexpr char kMagic[4] = {'P', 'R', 'L', 'T'};

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw IoError("truncated PRLT stream");
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

}  // namespace

void write_prlt(std::ostream& out, const Tensor& t) {
    out.write(kMagic, 4);
    write_u32(out, static_cast<uint32_t>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) write_u32(out, static_cast<uint32_t>(t.dim(i)));
    for (Real v : t.values()) {
        const float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32(out, bits);
    }
    if (!out) throw IoError("short write of PRLT record");
}

Tensor read_prlt(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("bad PRLT magic");
    const uint32_t rank = read_u32(in);
    if (rank > 8) throw IoError("implausible PRLT rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(read_u32(in));
    std::vector<Real> data(numel(shape));
    for (auto& v : data) {
        const uint32_t bits = read_u32(in);
        float f;
        std::memcpy(&f, &bits, 4);
        v = f;
    }
    return Tensor::from_data(std::move(shape), std::move(data));
}

void write_prlt_file(const std::string& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_prlt(out, t);
}

Tensor read_prlt_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_prlt(in);
}

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    std::ostringstream manifest;
    for (const auto& [name, t] : tensors) {
        manifest << name << " ";
        for (int i = 0; i < t.rank(); ++i) manifest << (i ? "x" : "") << t.dim(i);
        manifest << " " << out.tellp() << "\n";
        write_prlt(out, t);
    }
    std::ofstream mf(path + ".manifest");
    if (!mf) throw IoError("cannot write " + path + ".manifest");
    mf << manifest.str();
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
    std::ifstream mf(path + ".manifest");
    if (!mf) throw IoError("cannot open " + path + ".manifest");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::pair<std::string, Tensor>> out;
    std::string name, shape;
    int64_t offset;
    while (mf >> name >> shape >> offset) {
        in.seekg(offset);
        out.emplace_back(name, read_prlt(in));
    }
    return out;
}

}  // namespace prl
