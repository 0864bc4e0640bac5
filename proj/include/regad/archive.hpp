#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace regad {

/// Flat binary container of named arrays plus text metadata. Used for model
/// checkpoints and distribution statistics. Float arrays are stored as raw
/// little-endian float32 so save/load round-trips are bit-exact.
class Archive {
public:
    struct Entry {
        std::vector<int> shape;
        std::vector<float> f32;   // populated when kind == Float32
        std::vector<int32_t> i32; // populated when kind == Int32
        enum class Kind { Float32, Int32 } kind = Kind::Float32;
    };

    void put(const std::string& name, std::vector<int> shape, std::vector<float> data);
    void put(const std::string& name, std::vector<int> shape, std::vector<int32_t> data);

    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    const Entry& get(const std::string& name) const;
    std::vector<std::string> names() const;

    std::map<std::string, std::string>& meta() { return meta_; }
    const std::map<std::string, std::string>& meta() const { return meta_; }
    std::string meta_or(const std::string& key, const std::string& fallback) const;

    void save(const std::string& path) const;
    static Archive load(const std::string& path);

private:
    std::map<std::string, Entry> entries_;
    std::map<std::string, std::string> meta_;
};

}  // namespace regad
