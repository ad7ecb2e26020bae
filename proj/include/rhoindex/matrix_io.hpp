#pragma once

// Dense matrix files.
//
// CSV: one row per line, comma-separated decimal floats; lines beginning with
// '#' are ignored. NPY: format version 1.0 only, little-endian '<f4' or '<f8',
// C order, 2-D shape. IDX: big-endian header, unsigned-byte payload
// (magic 0x00000803 for images, 0x00000801 for labels).
//
// All values are widened to binary64 on read.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rhoindex/estimator.hpp"

namespace rhoindex {

enum class MatrixFormat { Csv, Npy };
enum class ElementWidth { F32, F64 };

MatrixFormat matrix_format_from_string(std::string_view name);

/// Any rectangular matrix.
Matrix read_matrix(const std::filesystem::path& path, MatrixFormat format);

/// Square, finite, dim >= 2.
Matrix read_coupling_matrix(const std::filesystem::path& path, MatrixFormat format);

void write_matrix_csv(const Matrix& matrix, const std::filesystem::path& path);
void write_matrix_npy(const Matrix& matrix, const std::filesystem::path& path, ElementWidth width = ElementWidth::F64);

/// Parses an in-memory CSV document.
Matrix parse_matrix_csv(std::string_view text);

/// Parses an in-memory NPY document.
Matrix parse_matrix_npy(std::string_view bytes);

/// One flattened image per row, byte v mapped to v / 255.
Matrix read_idx_images(const std::filesystem::path& path);
Matrix parse_idx_images(std::string_view bytes);

std::vector<int> read_idx_labels(const std::filesystem::path& path);
std::vector<int> parse_idx_labels(std::string_view bytes);

/// Whole-file read; throws IoError.
std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace rhoindex
