#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "digit/common.hpp"

namespace digit {

/// Little-endian binary writer. All artifact file formats go through this so
/// the byte layout is the same on every host.
class BinWriter {
public:
    explicit BinWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open for writing: " + path);
    }

    void magic(const char m[4]) { out_.write(m, 4); }
    void u32(uint32_t v) { put(v); }
    void u64(uint64_t v) { put(v); }
    void f32(float v) { put(v); }
    void f64(double v) { put(v); }

    void f32_array(const float* p, size_t n) {
        for (size_t i = 0; i < n; ++i) f32(p[i]);
    }
    void u32_array(const uint32_t* p, size_t n) {
        for (size_t i = 0; i < n; ++i) u32(p[i]);
    }

    void text(const std::string& s) {  // length-prefixed UTF-8
        u32(static_cast<uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    void close() {
        out_.close();
        if (!out_) throw IoError("write failed: " + path_);
    }

private:
    template <typename T>
    void put(T v) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        // hosts here are little-endian; keep the copy explicit anyway
        out_.write(reinterpret_cast<const char*>(b), sizeof(T));
    }

    std::string path_;
    std::ofstream out_;
};

class BinReader {
public:
    explicit BinReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open for reading: " + path);
    }

    void expect_magic(const char m[4]) {
        char got[4] = {};
        in_.read(got, 4);
        if (!in_ || std::memcmp(got, m, 4) != 0)
            throw IoError("bad magic in " + path_ + ": expected " + std::string(m, 4));
    }

    uint32_t u32() { return get<uint32_t>(); }
    uint64_t u64() { return get<uint64_t>(); }
    float f32() { return get<float>(); }
    double f64() { return get<double>(); }

    std::vector<float> f32_array(size_t n) {
        std::vector<float> v(n);
        for (size_t i = 0; i < n; ++i) v[i] = f32();
        return v;
    }
    std::vector<uint32_t> u32_array(size_t n) {
        std::vector<uint32_t> v(n);
        for (size_t i = 0; i < n; ++i) v[i] = u32();
        return v;
    }

    std::string text() {
        uint32_t n = u32();
        std::string s(n, '\0');
        in_.read(s.data(), n);
        check("text payload");
        return s;
    }

    const std::string& path() const { return path_; }

private:
    template <typename T>
    T get() {
        unsigned char b[sizeof(T)];
        in_.read(reinterpret_cast<char*>(b), sizeof(T));
        check("field");
        T v;
        std::memcpy(&v, b, sizeof(T));
        return v;
    }

    void check(const char* what) {
        if (!in_)
            throw IoError("truncated file " + path_ + " while reading " + what +
                          " (expected more bytes than present)");
    }

    std::string path_;
    std::ifstream in_;
};

}  // namespace digit
