#include "mkrem/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mkrem {

namespace {

namespace fs = std::filesystem;

void rename_over(const fs::path& tmp, const fs::path& path) {
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("atomic write failed for " + path.string() + ": " + ec.message());
    }
}

fs::path temp_name(const fs::path& path) {
    return path.parent_path() / (path.filename().string() + ".tmp");
}

void write_binary(const fs::path& path, const std::string& header, const void* data,
                  std::size_t bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = temp_name(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << header << '\n';
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    rename_over(tmp, path);
}

std::ifstream open_binary(const fs::path& path, std::string& header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::getline(in, header);
    return in;
}

void read_exact(std::ifstream& in, void* dst, std::size_t bytes, const fs::path& path) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes)
        throw std::runtime_error("truncated file: " + path.string());
}

}  // namespace

void write_image(const std::filesystem::path& path, const DenseVector& data, int width,
                 int height) {
    if (data.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("write_image: size mismatch");
    write_binary(path, std::to_string(width) + " " + std::to_string(height), data.data(),
                 data.size() * sizeof(double));
}

DenseVector read_image(const std::filesystem::path& path, int* width, int* height) {
    std::string header;
    std::ifstream in = open_binary(path, header);
    int w = 0, h = 0;
    if (std::sscanf(header.c_str(), "%d %d", &w, &h) != 2 || w < 1 || h < 1)
        throw std::runtime_error("bad image header in " + path.string());
    DenseVector data(static_cast<std::size_t>(w) * h);
    read_exact(in, data.data(), data.size() * sizeof(double), path);
    if (width) *width = w;
    if (height) *height = h;
    return data;
}

void write_stack(const std::filesystem::path& path, const std::vector<DenseVector>& stack) {
    if (stack.empty()) throw std::invalid_argument("write_stack: empty stack");
    const std::size_t len = stack[0].size();
    std::string buf;
    buf.reserve(stack.size() * len * sizeof(double));
    for (const auto& v : stack) {
        if (v.size() != len) throw std::invalid_argument("write_stack: ragged stack");
        buf.append(reinterpret_cast<const char*>(v.data()), len * sizeof(double));
    }
    write_binary(path, std::to_string(len) + " " + std::to_string(stack.size()), buf.data(),
                 buf.size());
}

std::vector<DenseVector> read_stack(const std::filesystem::path& path) {
    std::string header;
    std::ifstream in = open_binary(path, header);
    long long len = 0, count = 0;
    if (std::sscanf(header.c_str(), "%lld %lld", &len, &count) != 2 || len < 1 || count < 1)
        throw std::runtime_error("bad stack header in " + path.string());
    std::vector<DenseVector> stack(static_cast<std::size_t>(count));
    for (auto& v : stack) {
        v.resize(static_cast<std::size_t>(len));
        read_exact(in, v.data(), v.size() * sizeof(double), path);
    }
    return stack;
}

void write_sparse(const std::filesystem::path& path, const SparseMatrix& m) {
    std::string buf;
    const auto& ptr = m.row_ptr();
    const auto& idx = m.col_idx();
    const auto& val = m.values();
    buf.reserve(ptr.size() * 8 + idx.size() * 4 + val.size() * 8);
    buf.append(reinterpret_cast<const char*>(ptr.data()), ptr.size() * sizeof(std::int64_t));
    buf.append(reinterpret_cast<const char*>(idx.data()), idx.size() * sizeof(std::int32_t));
    buf.append(reinterpret_cast<const char*>(val.data()), val.size() * sizeof(double));
    write_binary(path,
                 std::to_string(m.rows()) + " " + std::to_string(m.cols()) + " " +
                     std::to_string(m.nnz()),
                 buf.data(), buf.size());
}

SparseMatrix read_sparse(const std::filesystem::path& path) {
    std::string header;
    std::ifstream in = open_binary(path, header);
    long long rows = 0, cols = 0, nnz = 0;
    if (std::sscanf(header.c_str(), "%lld %lld %lld", &rows, &cols, &nnz) != 3 || rows < 0 ||
        cols < 0 || nnz < 0)
        throw std::runtime_error("bad sparse header in " + path.string());
    std::vector<std::int64_t> ptr(static_cast<std::size_t>(rows) + 1);
    std::vector<std::int32_t> idx(static_cast<std::size_t>(nnz));
    std::vector<double> val(static_cast<std::size_t>(nnz));
    read_exact(in, ptr.data(), ptr.size() * sizeof(std::int64_t), path);
    read_exact(in, idx.data(), idx.size() * sizeof(std::int32_t), path);
    read_exact(in, val.data(), val.size() * sizeof(double), path);

    std::vector<Triplet> ts;
    ts.reserve(static_cast<std::size_t>(nnz));
    for (int r = 0; r < rows; ++r)
        for (std::int64_t k = ptr[r]; k < ptr[r + 1]; ++k)
            ts.push_back({r, idx[static_cast<std::size_t>(k)], val[static_cast<std::size_t>(k)]});
    return SparseMatrix::from_triplets(static_cast<int>(rows), static_cast<int>(cols),
                                       std::move(ts));
}

void write_dictionary(const std::filesystem::path& path, const Dictionary& d) {
    write_binary(path,
                 std::to_string(d.atoms.rows()) + " " + std::to_string(d.atoms.cols()) + " " +
                     std::to_string(d.patch_w),
                 d.atoms.data(), static_cast<std::size_t>(d.atoms.size()) * sizeof(double));
}

Dictionary read_dictionary(const std::filesystem::path& path) {
    std::string header;
    std::ifstream in = open_binary(path, header);
    int rows = 0, cols = 0, pw = 0;
    if (std::sscanf(header.c_str(), "%d %d %d", &rows, &cols, &pw) != 3 || rows < 1 || cols < 1)
        throw std::runtime_error("bad dictionary header in " + path.string());
    Dictionary d;
    d.patch_w = pw;
    d.atoms.resize(rows, cols);
    read_exact(in, d.atoms.data(), static_cast<std::size_t>(rows) * cols * sizeof(double), path);
    return d;
}

void write_pgm(const std::filesystem::path& path, const DenseVector& data, int width, int height,
               double lo, double hi) {
    if (data.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("write_pgm: size mismatch");
    if (lo == hi) {
        lo = *std::min_element(data.begin(), data.end());
        hi = *std::max_element(data.begin(), data.end());
        if (lo == hi) hi = lo + 1.0;
    }
    std::string buf(data.size(), '\0');
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double t = std::clamp((data[i] - lo) / (hi - lo), 0.0, 1.0);
        buf[i] = static_cast<char>(static_cast<unsigned char>(t * 255.0 + 0.5));
    }
    write_binary(path, "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255",
                 buf.data(), buf.size());
}

void atomic_write(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = temp_name(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << contents;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    rename_over(tmp, path);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h) { return fnv1a(s.data(), s.size(), h); }

std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
}

}  // namespace mkrem
