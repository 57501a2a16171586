#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eosedit/errors.hpp"

// Named-tensor archive: 8-byte little-endian header length, UTF-8 JSON header
// mapping tensor names to {dtype, shape, data_offsets}, then raw
// little-endian buffers. Compatible with the safetensors file layout.

namespace eosedit::archive {

enum class Dtype { f32, f16, f64 };

inline Dtype dtype_from_string(const std::string& s) {
    if (s == "F32") return Dtype::f32;
    if (s == "F16") return Dtype::f16;
    if (s == "F64") return Dtype::f64;
    throw parse_error("archive: unsupported dtype '" + s + "'");
}

inline size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::f16: return 2;
        case Dtype::f32: return 4;
        default: return 8;
    }
}

inline float half_to_float(uint16_t h) {
    uint32_t sign = (h & 0x8000u) << 16;
    uint32_t exp = (h >> 10) & 0x1F;
    uint32_t frac = h & 0x3FF;
    uint32_t bits;
    if (exp == 0) {
        if (frac == 0) {
            bits = sign;
        } else {
            // subnormal: renormalize
            int shift = 0;
            while ((frac & 0x400) == 0) {
                frac <<= 1;
                ++shift;
            }
            frac &= 0x3FF;
            bits = sign | ((127 - 15 - shift + 1) << 23) | (frac << 13);
        }
    } else if (exp == 0x1F) {
        bits = sign | 0x7F800000u | (frac << 13);
    } else {
        bits = sign | ((exp - 15 + 127) << 23) | (frac << 13);
    }
    float out;
    std::memcpy(&out, &bits, sizeof(out));
    return out;
}

struct TensorView {
    Dtype dtype = Dtype::f32;
    std::vector<int64_t> shape;
    size_t begin = 0;  // offsets into the data section
    size_t end = 0;

    int64_t numel() const {
        int64_t n = 1;
        for (int64_t d : shape) n *= d;
        return n;
    }
};

class Reader {
public:
    explicit Reader(std::vector<uint8_t> bytes) : bytes_(std::move(bytes)) { parse(); }

    static Reader from_file(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw io_error("cannot open archive: " + path);
        std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
        return Reader(std::move(bytes));
    }

    bool has(const std::string& name) const { return tensors_.count(name) != 0; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(tensors_.size());
        for (const auto& [name, view] : tensors_) out.push_back(name);
        return out;
    }

    const TensorView& view(const std::string& name) const {
        auto it = tensors_.find(name);
        if (it == tensors_.end()) {
            throw load_error("archive: missing tensor '" + name + "'");
        }
        return it->second;
    }

    // Fetch as 32-bit floats regardless of on-disk precision.
    std::vector<float> tensor_f32(const std::string& name) const {
        const TensorView& t = view(name);
        const uint8_t* p = data_ + t.begin;
        size_t n = static_cast<size_t>(t.numel());
        std::vector<float> out(n);
        switch (t.dtype) {
            case Dtype::f32:
                std::memcpy(out.data(), p, n * 4);
                break;
            case Dtype::f16:
                for (size_t i = 0; i < n; ++i) {
                    uint16_t h;
                    std::memcpy(&h, p + 2 * i, 2);
                    out[i] = half_to_float(h);
                }
                break;
            case Dtype::f64:
                for (size_t i = 0; i < n; ++i) {
                    double d;
                    std::memcpy(&d, p + 8 * i, 8);
                    out[i] = static_cast<float>(d);
                }
                break;
        }
        return out;
    }

private:
    void parse() {
        if (bytes_.size() < 8) throw parse_error("archive: truncated header length");
        uint64_t header_len = 0;
        for (int i = 7; i >= 0; --i) header_len = (header_len << 8) | bytes_[static_cast<size_t>(i)];
        if (8 + header_len > bytes_.size()) {
            throw parse_error("archive: header length exceeds file size");
        }
        nlohmann::json header;
        try {
            header = nlohmann::json::parse(bytes_.begin() + 8, bytes_.begin() + 8 + static_cast<long>(header_len));
        } catch (const nlohmann::json::parse_error& e) {
            throw parse_error(std::string("archive header: ") + e.what());
        }
        data_ = bytes_.data() + 8 + header_len;
        data_size_ = bytes_.size() - 8 - header_len;

        for (const auto& [name, meta] : header.items()) {
            if (name == "__metadata__") continue;
            TensorView t;
            t.dtype = dtype_from_string(meta.at("dtype").get<std::string>());
            t.shape = meta.at("shape").get<std::vector<int64_t>>();
            auto off = meta.at("data_offsets").get<std::vector<size_t>>();
            if (off.size() != 2 || off[1] < off[0]) {
                throw parse_error("archive: bad data_offsets for '" + name + "'");
            }
            t.begin = off[0];
            t.end = off[1];
            if (t.end > data_size_) {
                throw integrity_error("archive: tensor '" + name + "' exceeds data section");
            }
            if (t.end - t.begin != static_cast<size_t>(t.numel()) * dtype_size(t.dtype)) {
                throw integrity_error("archive: tensor '" + name + "' size does not match shape");
            }
            tensors_.emplace(name, std::move(t));
        }
    }

    std::vector<uint8_t> bytes_;
    const uint8_t* data_ = nullptr;
    size_t data_size_ = 0;
    std::map<std::string, TensorView> tensors_;
};

class Writer {
public:
    void add(const std::string& name, std::vector<int64_t> shape, const float* data, size_t n) {
        int64_t expect = 1;
        for (int64_t d : shape) expect *= d;
        if (expect != static_cast<int64_t>(n)) {
            throw shape_error("archive: shape does not match element count for '" + name + "'");
        }
        Entry e;
        e.shape = std::move(shape);
        e.bytes.resize(n * 4);
        std::memcpy(e.bytes.data(), data, n * 4);
        if (!entries_.emplace(name, std::move(e)).second) {
            throw integrity_error("archive: duplicate tensor '" + name + "'");
        }
    }

    void set_metadata(const std::string& key, const std::string& value) {
        metadata_[key] = value;
    }

    // Serialized file bytes; entries are laid out in name order.
    std::vector<uint8_t> bytes() const {
        nlohmann::ordered_json header;
        if (!metadata_.empty()) {
            header["__metadata__"] = metadata_;
        }
        size_t offset = 0;
        for (const auto& [name, e] : entries_) {
            nlohmann::ordered_json meta;
            meta["dtype"] = "F32";
            meta["shape"] = e.shape;
            meta["data_offsets"] = {offset, offset + e.bytes.size()};
            header[name] = meta;
            offset += e.bytes.size();
        }
        std::string hs = header.dump();
        std::vector<uint8_t> out;
        out.reserve(8 + hs.size() + offset);
        uint64_t hl = hs.size();
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((hl >> (8 * i)) & 0xFF));
        out.insert(out.end(), hs.begin(), hs.end());
        for (const auto& [name, e] : entries_) {
            out.insert(out.end(), e.bytes.begin(), e.bytes.end());
        }
        return out;
    }

private:
    struct Entry {
        std::vector<int64_t> shape;
        std::vector<uint8_t> bytes;
    };
    std::map<std::string, Entry> entries_;
    std::map<std::string, std::string> metadata_;
};

}  // namespace eosedit::archive
