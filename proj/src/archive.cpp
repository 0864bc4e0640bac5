#include "regad/archive.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace regad {

namespace {

constexpr char kMagic[8] = {'R', 'E', 'G', 'A', 'D', 'A', 'R', '1'};

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

void write_str(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::istream& is) {
    uint32_t n = read_u32(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    return s;
}

}  // namespace

void Archive::put(const std::string& name, std::vector<int> shape, std::vector<float> data) {
    Entry e;
    e.shape = std::move(shape);
    e.f32 = std::move(data);
    e.kind = Entry::Kind::Float32;
    int64_t n = 1;
    for (int d : e.shape) n *= d;
    if (n != static_cast<int64_t>(e.f32.size()))
        throw std::invalid_argument("archive entry '" + name + "': shape/data size mismatch");
    entries_[name] = std::move(e);
}

void Archive::put(const std::string& name, std::vector<int> shape, std::vector<int32_t> data) {
    Entry e;
    e.shape = std::move(shape);
    e.i32 = std::move(data);
    e.kind = Entry::Kind::Int32;
    int64_t n = 1;
    for (int d : e.shape) n *= d;
    if (n != static_cast<int64_t>(e.i32.size()))
        throw std::invalid_argument("archive entry '" + name + "': shape/data size mismatch");
    entries_[name] = std::move(e);
}

const Archive::Entry& Archive::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("archive: no entry named '" + name + "'");
    return it->second;
}

std::vector<std::string> Archive::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

std::string Archive::meta_or(const std::string& key, const std::string& fallback) const {
    auto it = meta_.find(key);
    return it == meta_.end() ? fallback : it->second;
}

void Archive::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("archive: cannot open for write: " + path);
    os.write(kMagic, sizeof(kMagic));
    write_u32(os, static_cast<uint32_t>(entries_.size()));
    for (const auto& [name, e] : entries_) {
        write_str(os, name);
        write_u32(os, e.kind == Entry::Kind::Float32 ? 0u : 1u);
        write_u32(os, static_cast<uint32_t>(e.shape.size()));
        for (int d : e.shape) write_u32(os, static_cast<uint32_t>(d));
        if (e.kind == Entry::Kind::Float32) {
            write_u32(os, static_cast<uint32_t>(e.f32.size()));
            os.write(reinterpret_cast<const char*>(e.f32.data()),
                     static_cast<std::streamsize>(e.f32.size() * sizeof(float)));
        } else {
            write_u32(os, static_cast<uint32_t>(e.i32.size()));
            os.write(reinterpret_cast<const char*>(e.i32.data()),
                     static_cast<std::streamsize>(e.i32.size() * sizeof(int32_t)));
        }
    }
    write_u32(os, static_cast<uint32_t>(meta_.size()));
    for (const auto& [k, v] : meta_) {
        write_str(os, k);
        write_str(os, v);
    }
    if (!os) throw std::runtime_error("archive: write failed: " + path);
}

Archive Archive::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("archive: cannot open: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("archive: bad magic in " + path);
    Archive a;
    uint32_t n_entries = read_u32(is);
    for (uint32_t i = 0; i < n_entries; ++i) {
        std::string name = read_str(is);
        uint32_t kind = read_u32(is);
        uint32_t ndim = read_u32(is);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(read_u32(is));
        uint32_t count = read_u32(is);
        if (kind == 0) {
            std::vector<float> data(count);
            is.read(reinterpret_cast<char*>(data.data()),
                    static_cast<std::streamsize>(count * sizeof(float)));
            a.put(name, std::move(shape), std::move(data));
        } else {
            std::vector<int32_t> data(count);
            is.read(reinterpret_cast<char*>(data.data()),
                    static_cast<std::streamsize>(count * sizeof(int32_t)));
            a.put(name, std::move(shape), std::move(data));
        }
        if (!is) throw std::runtime_error("archive: truncated entry in " + path);
    }
    uint32_t n_meta = read_u32(is);
    for (uint32_t i = 0; i < n_meta; ++i) {
        std::string k = read_str(is);
        a.meta_[k] = read_str(is);
    }
    if (!is) throw std::runtime_error("archive: truncated metadata in " + path);
    return a;
}

}  // namespace regad
