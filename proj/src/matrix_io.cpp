#include "rhoindex/matrix_io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace rhoindex {

static_assert(std::endian::native == std::endian::little, "NPY payload handling assumes a little-endian host");

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view token, std::size_t line) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": cannot parse '" + std::string(token) + "'");
  }
  return value;
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

std::string format_double(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

// Value text following `'key':` in an NPY header dictionary.
std::string_view npy_header_value(std::string_view header, std::string_view key) {
  const std::string quoted = "'" + std::string(key) + "'";
  auto pos = header.find(quoted);
  if (pos == std::string_view::npos) throw Error(ErrorCode::ParseError, "NPY header lacks " + quoted);
  pos = header.find(':', pos + quoted.size());
  if (pos == std::string_view::npos) throw Error(ErrorCode::ParseError, "NPY header malformed near " + quoted);
  return trim(header.substr(pos + 1));
}

std::uint32_t read_be32(std::string_view bytes, std::size_t offset) {
  const auto b = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])); };
  return (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
}

struct IdxHeader {
  std::vector<std::uint32_t> dims;
  std::size_t payload_offset = 0;
};

IdxHeader parse_idx_header(std::string_view bytes, std::uint32_t expected_magic) {
  if (bytes.size() < 4) throw Error(ErrorCode::TruncatedFile, "IDX file shorter than its magic number");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != expected_magic) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "expected IDX magic 0x%08X, found 0x%08X", expected_magic, magic);
    throw Error(ErrorCode::BadMagic, buf);
  }
  IdxHeader header;
  const std::size_t ndims = magic & 0xFFu;
  header.payload_offset = 4 + 4 * ndims;
  if (bytes.size() < header.payload_offset) throw Error(ErrorCode::TruncatedFile, "IDX header is truncated");
  for (std::size_t i = 0; i < ndims; ++i) header.dims.push_back(read_be32(bytes, 4 + 4 * i));
  return header;
}

}  // namespace

MatrixFormat matrix_format_from_string(std::string_view name) {
  if (name == "csv") return MatrixFormat::Csv;
  if (name == "npy") return MatrixFormat::Npy;
  throw Error(ErrorCode::InvalidArgument, "unknown matrix format '" + std::string(name) + "'");
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "read from '" + path.string() + "' failed");
  return std::move(buffer).str();
}

Matrix parse_matrix_csv(std::string_view text) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;

  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;

    std::size_t count = 0;
    while (true) {
      const auto comma = line.find(',');
      values.push_back(parse_double(line.substr(0, comma), line_no));
      ++count;
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw Error(ErrorCode::RaggedRows, "line " + std::to_string(line_no) + " has " + std::to_string(count) +
                                             " fields, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::ParseError, "CSV contains no data rows");

  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * cols + c];
    }
  }
  return out;
}

Matrix parse_matrix_npy(std::string_view bytes) {
  constexpr std::string_view kMagic = "\x93NUMPY";
  if (bytes.size() < 10 || bytes.substr(0, 6) != kMagic) throw Error(ErrorCode::ParseError, "missing NPY magic");
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  if (major != 1 || minor != 0) {
    throw Error(ErrorCode::UnsupportedNpyVersion,
                "NPY version " + std::to_string(major) + "." + std::to_string(minor) + " (only 1.0 is supported)");
  }
  const std::size_t header_len =
      static_cast<unsigned char>(bytes[8]) | (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < 10 + header_len) throw Error(ErrorCode::TruncatedFile, "NPY header is truncated");
  const std::string_view header = bytes.substr(10, header_len);

  const std::string_view descr_field = npy_header_value(header, "descr");
  std::size_t width = 0;
  if (descr_field.starts_with("'<f8'")) {
    width = 8;
  } else if (descr_field.starts_with("'<f4'")) {
    width = 4;
  } else {
    const auto end = descr_field.find(',');
    throw Error(ErrorCode::UnsupportedDtype, "NPY descr " + std::string(descr_field.substr(0, end)) +
                                                 " (only '<f4' and '<f8' are supported)");
  }

  if (!npy_header_value(header, "fortran_order").starts_with("False")) {
    throw Error(ErrorCode::ParseError, "fortran_order arrays are not supported");
  }

  std::string_view shape = npy_header_value(header, "shape");
  if (shape.empty() || shape.front() != '(') throw Error(ErrorCode::ParseError, "NPY shape is not a tuple");
  shape = shape.substr(1, shape.find(')') - 1);
  std::vector<std::size_t> dims;
  while (!trim(shape).empty()) {
    const auto comma = shape.find(',');
    const std::string_view token = trim(shape.substr(0, comma));
    if (!token.empty()) {
      std::size_t dim = 0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), dim);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw Error(ErrorCode::ParseError, "bad NPY shape entry '" + std::string(token) + "'");
      }
      dims.push_back(dim);
    }
    if (comma == std::string_view::npos) break;
    shape = shape.substr(comma + 1);
  }
  if (dims.size() != 2) throw Error(ErrorCode::ParseError, "NPY array must be 2-D");

  const std::size_t rows = dims[0];
  const std::size_t cols = dims[1];
  const std::size_t payload = 10 + header_len;
  if (bytes.size() < payload + rows * cols * width) {
    throw Error(ErrorCode::TruncatedFile, "NPY payload shorter than its shape requires");
  }

  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const char* data = bytes.data() + payload;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t offset = (r * cols + c) * width;
      double value = 0.0;
      if (width == 8) {
        std::memcpy(&value, data + offset, 8);
      } else {
        float f = 0.0f;
        std::memcpy(&f, data + offset, 4);
        value = static_cast<double>(f);
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = value;
    }
  }
  return out;
}

Matrix read_matrix(const std::filesystem::path& path, MatrixFormat format) {
  const std::string bytes = read_file_bytes(path);
  return format == MatrixFormat::Csv ? parse_matrix_csv(bytes) : parse_matrix_npy(bytes);
}

Matrix read_coupling_matrix(const std::filesystem::path& path, MatrixFormat format) {
  Matrix m = read_matrix(path, format);
  validate_coupling_matrix(m);
  return m;
}

void write_matrix_csv(const Matrix& matrix, const std::filesystem::path& path) {
  std::string out;
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      if (c > 0) out += ',';
      out += format_double(matrix(r, c));
    }
    out += '\n';
  }
  write_file_bytes(path, out);
}

void write_matrix_npy(const Matrix& matrix, const std::filesystem::path& path, ElementWidth width) {
  const bool f64 = width == ElementWidth::F64;
  std::string header = std::string("{'descr': '") + (f64 ? "<f8" : "<f4") + "', 'fortran_order': False, 'shape': (" +
                       std::to_string(matrix.rows()) + ", " + std::to_string(matrix.cols()) + "), }";
  // Pad with spaces so the payload starts on a 64-byte boundary.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header += '\n';

  std::string out = "\x93NUMPY";
  out += '\x01';
  out += '\x00';
  out += static_cast<char>(header.size() & 0xFF);
  out += static_cast<char>((header.size() >> 8) & 0xFF);
  out += header;
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      char buf[8];
      if (f64) {
        const double v = matrix(r, c);
        std::memcpy(buf, &v, 8);
        out.append(buf, 8);
      } else {
        const auto v = static_cast<float>(matrix(r, c));
        std::memcpy(buf, &v, 4);
        out.append(buf, 4);
      }
    }
  }
  write_file_bytes(path, out);
}

Matrix parse_idx_images(std::string_view bytes) {
  const IdxHeader header = parse_idx_header(bytes, 0x00000803u);
  const std::size_t count = header.dims[0];
  const std::size_t pixels = std::size_t{header.dims[1]} * header.dims[2];
  if (bytes.size() < header.payload_offset + count * pixels) {
    throw Error(ErrorCode::TruncatedFile, "IDX image payload shorter than its header claims");
  }
  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + header.payload_offset);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = data[i * pixels + p] / 255.0;
    }
  }
  return out;
}

std::vector<int> parse_idx_labels(std::string_view bytes) {
  const IdxHeader header = parse_idx_header(bytes, 0x00000801u);
  const std::size_t count = header.dims[0];
  if (bytes.size() < header.payload_offset + count) {
    throw Error(ErrorCode::TruncatedFile, "IDX label payload shorter than its header claims");
  }
  std::vector<int> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = static_cast<unsigned char>(bytes[header.payload_offset + i]);
  return out;
}

Matrix read_idx_images(const std::filesystem::path& path) { return parse_idx_images(read_file_bytes(path)); }

std::vector<int> read_idx_labels(const std::filesystem::path& path) { return parse_idx_labels(read_file_bytes(path)); }

}  // namespace rhoindex
