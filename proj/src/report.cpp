#include "rhoindex/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "rhoindex/matrix_io.hpp"

namespace rhoindex {

namespace {

using ojson = nlohmann::ordered_json;

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

std::string quote_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Splits one CSV line honouring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

template <class T>
T parse_number(const std::string& s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError, "cannot parse report field '" + s + "'");
  }
  return v;
}

Cell parse_cell(const std::string& s, CellKind kind) {
  switch (kind) {
    case CellKind::Int: return parse_number<std::int64_t>(s);
    case CellKind::UInt: return parse_number<std::uint64_t>(s);
    case CellKind::Real:
      if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
      if (s == "inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
      return parse_number<double>(s);
    case CellKind::Text: return s;
  }
  return s;
}

std::string render_cell_csv(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_real(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return quote_text(v);
        } else {
          return std::to_string(v);
        }
      },
      cell);
}

ojson cell_to_json(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> ojson {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return nullptr;
          return v;
        } else {
          return v;
        }
      },
      cell);
}

Cell cell_from_json(const ojson& j, CellKind kind) {
  try {
    switch (kind) {
      case CellKind::Int: return j.get<std::int64_t>();
      case CellKind::UInt: return j.get<std::uint64_t>();
      case CellKind::Real:
        if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
        return j.get<double>();
      case CellKind::Text: return j.get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad JSON field: ") + e.what());
  }
  return {};
}

double real(const Cell& c) { return std::get<double>(c); }
std::int64_t integer(const Cell& c) { return std::get<std::int64_t>(c); }
std::uint64_t uinteger(const Cell& c) { return std::get<std::uint64_t>(c); }
const std::string& text(const Cell& c) { return std::get<std::string>(c); }
std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }
std::size_t as_size(const Cell& c) { return static_cast<std::size_t>(integer(c)); }

void require_columns(const Table& table, const std::vector<Column>& columns) {
  if (table.columns.size() != columns.size()) throw Error(ErrorCode::ParseError, "unexpected report columns");
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (table.columns[i].name != columns[i].name) {
      throw Error(ErrorCode::ParseError, "unexpected report column '" + table.columns[i].name + "'");
    }
  }
}

}  // namespace

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw Error(ErrorCode::InvalidArgument, "unknown report format '" + std::string(name) + "'");
}

std::string render_table(const Table& table, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if (i > 0) out += ',';
      out += table.columns[i].name;
    }
    out += '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i > 0) out += ',';
        out += render_cell_csv(row[i]);
      }
      out += '\n';
    }
    return out;
  }

  ojson array = ojson::array();
  for (const auto& row : table.rows) {
    ojson object = ojson::object();
    for (std::size_t i = 0; i < row.size(); ++i) object[table.columns[i].name] = cell_to_json(row[i]);
    array.push_back(std::move(object));
  }
  return array.dump(2) + "\n";
}

Table parse_table(std::string_view text_in, ReportFormat format, const std::vector<Column>& columns) {
  Table table;
  table.columns = columns;

  if (format == ReportFormat::Csv) {
    bool header_seen = false;
    while (!text_in.empty()) {
      const auto eol = text_in.find('\n');
      const std::string_view line = text_in.substr(0, eol);
      text_in = eol == std::string_view::npos ? std::string_view{} : text_in.substr(eol + 1);
      if (line.empty() || line == "\r") continue;
      const std::vector<std::string> fields = split_csv_line(line);
      if (fields.size() != columns.size()) throw Error(ErrorCode::RaggedRows, "report row has wrong field count");
      if (!header_seen) {
        for (std::size_t i = 0; i < columns.size(); ++i) {
          if (fields[i] != columns[i].name) throw Error(ErrorCode::ParseError, "unexpected column '" + fields[i] + "'");
        }
        header_seen = true;
        continue;
      }
      std::vector<Cell> row;
      row.reserve(columns.size());
      for (std::size_t i = 0; i < columns.size(); ++i) row.push_back(parse_cell(fields[i], columns[i].kind));
      table.rows.push_back(std::move(row));
    }
    if (!header_seen) throw Error(ErrorCode::ParseError, "report has no header line");
    return table;
  }

  ojson doc;
  try {
    doc = ojson::parse(text_in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid JSON report: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::ParseError, "JSON report must be an array");
  for (const auto& object : doc) {
    if (!object.is_object() || object.size() != columns.size()) {
      throw Error(ErrorCode::ParseError, "JSON report entries must be flat objects with the expected fields");
    }
    std::vector<Cell> row;
    for (const Column& col : columns) {
      const auto it = object.find(col.name);
      if (it == object.end()) throw Error(ErrorCode::ParseError, "JSON report entry lacks '" + col.name + "'");
      row.push_back(cell_from_json(*it, col.kind));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// --- RhoEstimate -----------------------------------------------------------

const std::vector<Column>& rho_estimate_columns() {
  static const std::vector<Column> cols = {{"rho_hat", CellKind::Real},    {"rho_hat_plus", CellKind::Real},
                                           {"mixed_term", CellKind::Real}, {"self_term", CellKind::Real},
                                           {"gaussian_constant", CellKind::Real}, {"m", CellKind::Int}};
  return cols;
}

Table to_table(std::span<const RhoEstimate> records) {
  Table t{rho_estimate_columns(), {}};
  for (const auto& r : records) {
    t.rows.push_back({r.rho_hat, r.rho_hat_plus, r.mixed_term, r.self_term, r.gaussian_constant, as_int(r.m)});
  }
  return t;
}

std::vector<RhoEstimate> rho_estimates_from_table(const Table& table) {
  require_columns(table, rho_estimate_columns());
  std::vector<RhoEstimate> out;
  for (const auto& row : table.rows) {
    RhoEstimate r;
    r.rho_hat = real(row[0]);
    r.rho_hat_plus = real(row[1]);
    r.mixed_term = real(row[2]);
    r.self_term = real(row[3]);
    r.gaussian_constant = real(row[4]);
    r.m = as_size(row[5]);
    out.push_back(r);
  }
  return out;
}

// --- DivergenceReport ------------------------------------------------------

const std::vector<Column>& divergence_columns() {
  static const std::vector<Column> cols = {
      {"distribution", CellKind::Text},   {"energy_distance", CellKind::Real}, {"mmd_rbf", CellKind::Real},
      {"mardia_skew2", CellKind::Real},   {"mardia_excess2", CellKind::Real},  {"mardia_combined", CellKind::Real},
      {"wasserstein2", CellKind::Real},   {"n", CellKind::Int},                {"seed", CellKind::UInt}};
  return cols;
}

Table to_table(std::span<const DivergenceReport> records) {
  Table t{divergence_columns(), {}};
  for (const auto& r : records) {
    t.rows.push_back({std::string(to_string(r.distribution)), r.energy_distance, r.mmd_rbf, r.mardia_skew2,
                      r.mardia_excess2, r.mardia_combined, r.wasserstein2, as_int(r.sample_size), r.seed});
  }
  return t;
}

std::vector<DivergenceReport> divergence_reports_from_table(const Table& table) {
  require_columns(table, divergence_columns());
  std::vector<DivergenceReport> out;
  for (const auto& row : table.rows) {
    DivergenceReport r;
    r.distribution = distribution_from_string(text(row[0]));
    r.energy_distance = real(row[1]);
    r.mmd_rbf = real(row[2]);
    r.mardia_skew2 = real(row[3]);
    r.mardia_excess2 = real(row[4]);
    r.mardia_combined = real(row[5]);
    r.wasserstein2 = real(row[6]);
    r.sample_size = as_size(row[7]);
    r.seed = uinteger(row[8]);
    out.push_back(r);
  }
  return out;
}

// --- TrainingTrace ---------------------------------------------------------

std::vector<TraceRow> flatten_trace(std::span<const TraceEpoch> epochs) {
  std::vector<TraceRow> rows;
  for (const TraceEpoch& e : epochs) {
    for (std::size_t l = 0; l < e.layers.size(); ++l) {
      rows.push_back(TraceRow{e.epoch, e.loss, e.metric, l, e.layers[l].rho_weight, e.layers[l].rho_fisher,
                              e.rho_mean, e.layers[l].error_flag});
    }
  }
  return rows;
}

std::vector<TraceEpoch> unflatten_trace(std::span<const TraceRow> rows) {
  std::vector<TraceEpoch> epochs;
  for (const TraceRow& r : rows) {
    if (epochs.empty() || epochs.back().epoch != r.epoch || r.layer_index == 0) {
      TraceEpoch e;
      e.epoch = r.epoch;
      e.loss = r.loss;
      e.metric = r.metric;
      e.rho_mean = r.rho_mean;
      epochs.push_back(std::move(e));
    }
    if (r.layer_index != epochs.back().layers.size()) {
      throw Error(ErrorCode::ParseError, "trace rows for epoch " + std::to_string(r.epoch) + " are out of order");
    }
    epochs.back().layers.push_back(LayerMeasurement{r.rho_weight, r.rho_fisher, r.error_flag});
  }
  return epochs;
}

const std::vector<Column>& trace_columns() {
  static const std::vector<Column> cols = {
      {"epoch", CellKind::Int},       {"loss", CellKind::Real},       {"metric", CellKind::Real},
      {"layer_index", CellKind::Int}, {"rho_weight", CellKind::Real}, {"rho_fisher", CellKind::Real},
      {"rho_mean", CellKind::Real},   {"error_flag", CellKind::Text}};
  return cols;
}

Table to_table(std::span<const TraceRow> records) {
  Table t{trace_columns(), {}};
  for (const auto& r : records) {
    t.rows.push_back({as_int(r.epoch), r.loss, r.metric, as_int(r.layer_index), r.rho_weight, r.rho_fisher,
                      r.rho_mean, r.error_flag});
  }
  return t;
}

std::vector<TraceRow> trace_rows_from_table(const Table& table) {
  require_columns(table, trace_columns());
  std::vector<TraceRow> out;
  for (const auto& row : table.rows) {
    out.push_back(TraceRow{as_size(row[0]), real(row[1]), real(row[2]), as_size(row[3]), real(row[4]),
                           real(row[5]), real(row[6]), text(row[7])});
  }
  return out;
}

// --- dimension study -------------------------------------------------------

const std::vector<Column>& dimscan_columns() {
  static const std::vector<Column> cols = {{"n", CellKind::Int},         {"trial", CellKind::Int},
                                           {"symmetric", CellKind::Int}, {"rho_hat", CellKind::Real},
                                           {"m_used", CellKind::Int},    {"error_flag", CellKind::Text}};
  return cols;
}

Table to_table(std::span<const DimScanRecord> records) {
  Table t{dimscan_columns(), {}};
  for (const auto& r : records) {
    t.rows.push_back({as_int(r.n), as_int(r.trial), std::int64_t{r.symmetric ? 1 : 0}, r.rho_hat, as_int(r.m_used),
                      r.error_flag});
  }
  return t;
}

std::vector<DimScanRecord> dimscan_records_from_table(const Table& table) {
  require_columns(table, dimscan_columns());
  std::vector<DimScanRecord> out;
  for (const auto& row : table.rows) {
    out.push_back(DimScanRecord{as_size(row[0]), as_size(row[1]), integer(row[2]) != 0, real(row[3]),
                                as_size(row[4]), text(row[5])});
  }
  return out;
}

const std::vector<Column>& dimscan_summary_columns() {
  static const std::vector<Column> cols = {
      {"n", CellKind::Int},     {"symmetric", CellKind::Int}, {"count", CellKind::Int}, {"m_used", CellKind::Int},
      {"mean", CellKind::Real}, {"std", CellKind::Real},      {"q05", CellKind::Real},  {"q95", CellKind::Real}};
  return cols;
}

Table to_table(std::span<const DimScanSummary> records) {
  Table t{dimscan_summary_columns(), {}};
  for (const auto& s : records) {
    t.rows.push_back({as_int(s.n), std::int64_t{s.symmetric ? 1 : 0}, as_int(s.count), as_int(s.m_used), s.mean,
                      s.stddev, s.q05, s.q95});
  }
  return t;
}

// --- sweep -----------------------------------------------------------------

Table to_table(std::span<const SweepRow> records) {
  Table t;
  t.columns = {{"trial", CellKind::Int},         {"digest", CellKind::Text},     {"task", CellKind::Text},
               {"coupling", CellKind::Text},     {"hidden", CellKind::Text},     {"activation", CellKind::Text},
               {"init", CellKind::Text},         {"learning_rate", CellKind::Real}, {"batch_size", CellKind::Int},
               {"epochs", CellKind::Int},        {"l2", CellKind::Real},         {"seed", CellKind::UInt},
               {"metric", CellKind::Real},       {"rho_mean", CellKind::Real},   {"rho_layer1", CellKind::Real},
               {"rho_layer2", CellKind::Real},   {"rho_layer3", CellKind::Real}, {"error_flag", CellKind::Text}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : records) {
    std::string hidden;
    for (std::size_t i = 0; i < r.config.hidden_dims.size(); ++i) {
      if (i > 0) hidden += 'x';
      hidden += std::to_string(r.config.hidden_dims[i]);
    }
    const auto layer = [&](std::size_t i) { return i < r.layer_rho.size() ? r.layer_rho[i] : nan; };
    t.rows.push_back({as_int(r.trial), r.digest, std::string(to_string(r.config.task)),
                      std::string(to_string(r.config.coupling)), hidden, std::string(to_string(r.config.activation)),
                      std::string(to_string(r.config.init)), r.config.learning_rate, as_int(r.config.batch_size),
                      as_int(r.config.epochs), r.config.l2, r.config.seed, r.metric, r.rho_mean, layer(0), layer(1),
                      layer(2), r.error_flag});
  }
  return t;
}

// --- files -----------------------------------------------------------------

void write_text_file(const std::filesystem::path& path, std::string_view text_out) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(text_out.data(), static_cast<std::streamsize>(text_out.size()));
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

void write_report(const Table& table, const std::filesystem::path& path, ReportFormat format) {
  write_text_file(path, render_table(table, format));
}

std::vector<RhoEstimate> read_rho_report(const std::filesystem::path& path, ReportFormat format) {
  return rho_estimates_from_table(parse_table(read_file_bytes(path), format, rho_estimate_columns()));
}

std::vector<DivergenceReport> read_divergence_report(const std::filesystem::path& path, ReportFormat format) {
  return divergence_reports_from_table(parse_table(read_file_bytes(path), format, divergence_columns()));
}

std::vector<TraceEpoch> read_trace_report(const std::filesystem::path& path, ReportFormat format) {
  return unflatten_trace(trace_rows_from_table(parse_table(read_file_bytes(path), format, trace_columns())));
}

}  // namespace rhoindex
