#pragma once

#include "mkrem/dictionary.hpp"
#include "mkrem/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mkrem {

// Flat little-endian float64 arrays with a one-line text header. Images
// carry "width height"; sinograms reuse the format with width = n_radial
// and height = n_angles.
void write_image(const std::filesystem::path& path, const DenseVector& data, int width,
                 int height);
DenseVector read_image(const std::filesystem::path& path, int* width, int* height);

// Stack of equally sized vectors, header "length count".
void write_stack(const std::filesystem::path& path, const std::vector<DenseVector>& stack);
std::vector<DenseVector> read_stack(const std::filesystem::path& path);

// Row-compressed matrix, header "rows cols nnz" then raw row_ptr/col_idx/values.
void write_sparse(const std::filesystem::path& path, const SparseMatrix& m);
SparseMatrix read_sparse(const std::filesystem::path& path);

// Dense atom matrix, header "patch_dim n_atoms patch_w", column-major values.
void write_dictionary(const std::filesystem::path& path, const Dictionary& d);
Dictionary read_dictionary(const std::filesystem::path& path);

// 8-bit grayscale render (binary PGM), linearly mapped over [lo, hi];
// lo == hi autoscales to the data range.
void write_pgm(const std::filesystem::path& path, const DenseVector& data, int width, int height,
               double lo = 0.0, double hi = 0.0);

// All writes go through a temp file in the same directory followed by a
// rename, so partially written artifacts never appear under their final
// name.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

std::string format_double(double v);  // stable shortest-ish formatting for CSV

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace mkrem
