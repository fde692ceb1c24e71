#include "legopet/npy.hpp"

#include <cstring>
#include <fstream>

#include "legopet/errors.hpp"

namespace legopet::npy {

namespace {

std::string shape_tuple(const std::vector<int64_t>& shape) {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        s += std::to_string(shape[i]);
        if (i + 1 < shape.size()) s += ", ";
    }
    if (shape.size() == 1) s += ",";
    s += ")";
    return s;
}

void write_with_descr(const std::string& path, const std::vector<int64_t>& shape,
                      const char* descr, const void* data, size_t elem_size) {
    std::string header = "{'descr': '";
    header += descr;
    header += "', 'fortran_order': False, 'shape': ";
    header += shape_tuple(shape);
    header += ", }";
    // pad so magic+version+len+header is a multiple of 64, newline-terminated
    size_t unpadded = 6 + 2 + 2 + header.size() + 1;
    size_t pad = (64 - unpadded % 64) % 64;
    header += std::string(pad, ' ');
    header += '\n';

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("npy: cannot open for write: " + path);
    f.write("\x93NUMPY", 6);
    f.put(1);
    f.put(0);
    uint16_t hlen = static_cast<uint16_t>(header.size());
    f.write(reinterpret_cast<const char*>(&hlen), 2);
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    size_t n = 1;
    for (auto d : shape) n *= static_cast<size_t>(d);
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * elem_size));
    if (!f) throw IoError("npy: short write: " + path);
}

}  // namespace

void save(const std::string& path, const std::vector<int64_t>& shape, const double* data) {
    write_with_descr(path, shape, "<f8", data, 8);
}

void save_f32(const std::string& path, const std::vector<int64_t>& shape, const float* data) {
    write_with_descr(path, shape, "<f4", data, 4);
}

Loaded load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("npy: cannot open: " + path);
    char magic[6];
    f.read(magic, 6);
    if (!f || std::memcmp(magic, "\x93NUMPY", 6) != 0) throw IoError("npy: bad magic: " + path);
    char ver[2];
    f.read(ver, 2);
    uint16_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 2);
    std::string header(hlen, '\0');
    f.read(header.data(), hlen);
    if (!f) throw IoError("npy: truncated header: " + path);

    auto find_value = [&](const std::string& key) -> std::string {
        auto p = header.find(key);
        if (p == std::string::npos) throw IoError("npy: header missing " + key);
        return header.substr(p + key.size());
    };
    std::string descr_tail = find_value("'descr':");
    auto q0 = descr_tail.find('\'');
    auto q1 = descr_tail.find('\'', q0 + 1);
    std::string descr = descr_tail.substr(q0 + 1, q1 - q0 - 1);
    if (find_value("'fortran_order':").find("False") > 8)
        throw IoError("npy: fortran order unsupported: " + path);

    std::string shape_tail = find_value("'shape':");
    auto p0 = shape_tail.find('(');
    auto p1 = shape_tail.find(')');
    std::string inner = shape_tail.substr(p0 + 1, p1 - p0 - 1);
    Loaded out;
    size_t pos = 0;
    while (pos < inner.size()) {
        while (pos < inner.size() && !isdigit(inner[pos])) ++pos;
        if (pos >= inner.size()) break;
        size_t end = pos;
        while (end < inner.size() && isdigit(inner[end])) ++end;
        out.shape.push_back(std::stoll(inner.substr(pos, end - pos)));
        pos = end;
    }
    size_t n = 1;
    for (auto d : out.shape) n *= static_cast<size_t>(d);
    out.data.resize(n);
    if (descr == "<f8") {
        f.read(reinterpret_cast<char*>(out.data.data()), static_cast<std::streamsize>(n * 8));
    } else if (descr == "<f4") {
        std::vector<float> tmp(n);
        f.read(reinterpret_cast<char*>(tmp.data()), static_cast<std::streamsize>(n * 4));
        for (size_t i = 0; i < n; ++i) out.data[i] = tmp[i];
    } else {
        throw IoError("npy: unsupported dtype '" + descr + "': " + path);
    }
    if (!f) throw IoError("npy: truncated data: " + path);
    return out;
}

void save(const std::string& path, const Array2D& a) {
    save(path, {a.rows, a.cols}, a.data.data());
}

void save_f32(const std::string& path, const Array2D& a) {
    std::vector<float> tmp(a.data.begin(), a.data.end());
    save_f32(path, {a.rows, a.cols}, tmp.data());
}

Array2D load_2d(const std::string& path) {
    Loaded l = load(path);
    if (l.shape.size() != 2) throw IoError("npy: expected 2D array: " + path);
    Array2D a(static_cast<int>(l.shape[0]), static_cast<int>(l.shape[1]));
    a.data = std::move(l.data);
    return a;
}

}  // namespace legopet::npy
