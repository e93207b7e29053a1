// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmm/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace mmm::io {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const uint8_t* p;
    size_t len;
    size_t pos = 0;
    size_t base = 0;  // offset of p[0] within the containing file, for messages

    void need(size_t n, const char* what) {
        if (pos + n > len)
            throw FormatError("truncated " + std::string(what) + " at byte offset " + std::to_string(base + pos));
    }
    uint8_t u8(const char* what) {
        need(1, what);
        return p[pos++];
    }
    uint16_t u16(const char* what) {
        need(2, what);
        uint16_t v = static_cast<uint16_t>(p[pos] | (p[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64(const char* what) {
        need(8, what);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
};

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open file: " + path);
    f.seekg(0, std::ios::end);
    std::streamoff n = f.tellg();
    f.seekg(0, std::ios::beg);
    std::vector<uint8_t> bytes(static_cast<size_t>(n));
    if (n > 0) f.read(reinterpret_cast<char*>(bytes.data()), n);
    if (!f) throw FormatError("read failed: " + path);
    return bytes;
}

void write_file_bytes(const std::string& path, const uint8_t* data, size_t n) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open file for writing: " + path);
    if (n > 0) f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!f) throw FormatError("write failed: " + path);
}

}  // namespace

Tensor Tensor::from_f64(const std::vector<double>& values, std::vector<uint64_t> dims) {
    Tensor t;
    t.dtype = Dtype::F64;
    t.dims = std::move(dims);
    if (t.numel() != values.size()) throw ValidationError("tensor dims do not match value count");
    t.payload.resize(values.size() * 8);
    std::memcpy(t.payload.data(), values.data(), t.payload.size());
    return t;
}

Tensor Tensor::from_f32(const std::vector<float>& values, std::vector<uint64_t> dims) {
    Tensor t;
    t.dtype = Dtype::F32;
    t.dims = std::move(dims);
    if (t.numel() != values.size()) throw ValidationError("tensor dims do not match value count");
    t.payload.resize(values.size() * 4);
    std::memcpy(t.payload.data(), values.data(), t.payload.size());
    return t;
}

Tensor Tensor::from_u8(const std::vector<uint8_t>& values, std::vector<uint64_t> dims) {
    Tensor t;
    t.dtype = Dtype::U8;
    t.dims = std::move(dims);
    if (t.numel() != values.size()) throw ValidationError("tensor dims do not match value count");
    t.payload = values;
    return t;
}

std::vector<double> Tensor::to_f64() const {
    std::vector<double> out(numel());
    if (dtype == Dtype::F64) {
        std::memcpy(out.data(), payload.data(), payload.size());
    } else if (dtype == Dtype::F32) {
        const float* src = reinterpret_cast<const float*>(payload.data());
        for (size_t i = 0; i < out.size(); ++i) out[i] = src[i];
    } else {
        for (size_t i = 0; i < out.size(); ++i) out[i] = payload[i];
    }
    return out;
}

std::vector<float> Tensor::to_f32() const {
    std::vector<float> out(numel());
    if (dtype == Dtype::F32) {
        std::memcpy(out.data(), payload.data(), payload.size());
    } else if (dtype == Dtype::F64) {
        const double* src = reinterpret_cast<const double*>(payload.data());
        for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(src[i]);
    } else {
        for (size_t i = 0; i < out.size(); ++i) out[i] = payload[i];
    }
    return out;
}

std::vector<uint8_t> Tensor::to_u8() const {
    if (dtype != Dtype::U8) throw ValidationError("tensor is not u8");
    return payload;
}

std::vector<uint8_t> encode_tensor(const Tensor& t) {
    if (t.dims.empty()) throw ValidationError("tensor must have ndim >= 1");
    if (t.dims.size() > 255) throw ValidationError("tensor ndim exceeds 255");
    for (uint64_t d : t.dims)
        if (d == 0) throw ValidationError("tensor dims must all be >= 1");
    if (t.payload.size() != t.numel() * dtype_size(t.dtype))
        throw ValidationError("tensor payload length does not match dims");
    std::vector<uint8_t> out;
    out.reserve(8 + 8 * t.dims.size() + t.payload.size());
    out.insert(out.end(), {'M', 'M', 'T', '1'});
    out.push_back(static_cast<uint8_t>(t.dtype));
    out.push_back(static_cast<uint8_t>(t.dims.size()));
    out.push_back(0);
    out.push_back(0);
    for (uint64_t d : t.dims) put_u64(out, d);
    out.insert(out.end(), t.payload.begin(), t.payload.end());
    return out;
}

Tensor decode_tensor(const uint8_t* bytes, size_t len, size_t base_offset) {
    Reader r{bytes, len, 0, base_offset};
    r.need(4, "magic");
    if (std::memcmp(bytes, "MMT1", 4) != 0)
        throw FormatError("bad tensor magic at byte offset " + std::to_string(base_offset));
    r.pos = 4;
    uint8_t dcode = r.u8("dtype");
    if (dcode > 2)
        throw FormatError("unknown dtype code " + std::to_string(dcode) + " at byte offset " +
                          std::to_string(base_offset + 4));
    uint8_t ndim = r.u8("ndim");
    if (ndim == 0) throw FormatError("tensor ndim must be >= 1 at byte offset " + std::to_string(base_offset + 5));
    r.u16("reserved bytes");
    Tensor t;
    t.dtype = static_cast<Dtype>(dcode);
    t.dims.resize(ndim);
    for (int i = 0; i < ndim; ++i) {
        t.dims[i] = r.u64("dims");
        if (t.dims[i] == 0)
            throw FormatError("zero extent in dims at byte offset " + std::to_string(base_offset + r.pos - 8));
    }
    size_t want = t.numel() * dtype_size(t.dtype);
    r.need(want, "payload");
    t.payload.assign(bytes + r.pos, bytes + r.pos + want);
    return t;
}

void write_tensor(const std::string& path, const Tensor& t) {
    auto bytes = encode_tensor(t);
    write_file_bytes(path, bytes.data(), bytes.size());
}

Tensor read_tensor(const std::string& path) {
    auto bytes = read_file_bytes(path);
    return decode_tensor(bytes.data(), bytes.size());
}

void write_model(const std::string& path, const ModelArchive& archive) {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'M', 'M', 'A', '1'});
    if (archive.config.size() > UINT32_MAX) throw ValidationError("config block too large");
    put_u32(out, static_cast<uint32_t>(archive.config.size()));
    out.insert(out.end(), archive.config.begin(), archive.config.end());
    put_u32(out, static_cast<uint32_t>(archive.entries.size()));
    for (const auto& [name, tensor] : archive.entries) {  // std::map iterates sorted by name
        if (name.size() > UINT16_MAX) throw ValidationError("entry name too long: " + name);
        put_u16(out, static_cast<uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        auto body = encode_tensor(tensor);
        out.insert(out.end(), body.begin(), body.end());
    }
    write_file_bytes(path, out.data(), out.size());
}

ModelArchive read_model(const std::string& path) {
    auto bytes = read_file_bytes(path);
    Reader r{bytes.data(), bytes.size(), 0, 0};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), "MMA1", 4) != 0) throw FormatError("bad model archive magic at byte offset 0");
    r.pos = 4;
    uint32_t clen = r.u32("config length");
    r.need(clen, "config block");
    ModelArchive a;
    a.config.assign(reinterpret_cast<const char*>(bytes.data() + r.pos), clen);
    r.pos += clen;
    uint32_t count = r.u32("entry count");
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t nlen = r.u16("entry name length");
        r.need(nlen, "entry name");
        std::string name(reinterpret_cast<const char*>(bytes.data() + r.pos), nlen);
        r.pos += nlen;
        Tensor t = decode_tensor(bytes.data() + r.pos, bytes.size() - r.pos, r.pos);
        size_t body = encode_tensor(t).size();  // dims are small; re-encoding is cheap bookkeeping
        r.pos += body;
        if (!a.entries.emplace(std::move(name), std::move(t)).second)
            throw FormatError("duplicate archive entry name");
    }
    return a;
}

void export_pgm(const Grid2D<double>& field, const std::string& path, PgmScaling scaling) {
    const size_t n = field.size();
    if (n == 0) throw ValidationError("cannot export empty field");
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(field.data()[i]))
            throw ValidationError("non-finite value in field at index " + std::to_string(i));
    }
    std::vector<double> vals(field.data(), field.data() + n);
    if (scaling == PgmScaling::Log1p) {
        std::vector<double> pos;
        pos.reserve(n);
        for (double v : vals)
            if (v > 0.0) pos.push_back(v);
        double s = 1.0;
        if (!pos.empty()) {
            size_t mid = pos.size() / 2;
            std::nth_element(pos.begin(), pos.begin() + mid, pos.end());
            s = pos[mid];
            if (s <= 0.0) s = 1.0;
        }
        for (double& v : vals) v = std::log1p(v / s);
    }
    double mn = vals[0], mx = vals[0];
    for (double v : vals) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    std::vector<uint8_t> pixels(n);
    if (mx == mn) {
        std::fill(pixels.begin(), pixels.end(), static_cast<uint8_t>(127));
    } else {
        const double scale = 255.0 / (mx - mn);
        for (size_t i = 0; i < n; ++i)
            pixels[i] = static_cast<uint8_t>(std::lround((vals[i] - mn) * scale));
    }
    std::string header = "P5\n" + std::to_string(field.cols()) + " " + std::to_string(field.rows()) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), pixels.begin(), pixels.end());
    write_file_bytes(path, out.data(), out.size());
}

std::string format_double(double v) {
    char buf[40];
    // %.17g always round-trips; trim to the shortest representation that does.
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw ValidationError("csv row width does not match header");
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

std::string read_text_file(const std::string& path) {
    auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_text_file(const std::string& path, const std::string& text) {
    write_file_bytes(path, reinterpret_cast<const uint8_t*>(text.data()), text.size());
}

void write_text_file_atomic(const std::string& path, const std::string& text) {
    std::string tmp = path + ".tmp";
    write_text_file(tmp, text);
    std::filesystem::rename(tmp, path);
}

}  // namespace mmm::io
