#pragma once

// Report serialization.
//
// Every record type maps to a fixed, ordered column list. CSV output has a
// header line followed by one line per row, doubles printed with 17
// significant digits ("nan" for missing values). JSON output is an array of
// flat objects with the same field names (NaN written as null).

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rhoindex/dimension_study.hpp"
#include "rhoindex/divergence.hpp"
#include "rhoindex/estimator.hpp"
#include "rhoindex/probe.hpp"
#include "rhoindex/sweep.hpp"

namespace rhoindex {

enum class ReportFormat { Csv, Json };
ReportFormat report_format_from_string(std::string_view name);

enum class CellKind { Int, UInt, Real, Text };
using Cell = std::variant<std::int64_t, std::uint64_t, double, std::string>;

struct Column {
  std::string name;
  CellKind kind;
};

struct Table {
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string render_table(const Table& table, ReportFormat format);

/// Parses a rendered table; `columns` must match the file's header/fields.
Table parse_table(std::string_view text, ReportFormat format, const std::vector<Column>& columns);

// --- record schemas --------------------------------------------------------

/// One flattened row of a training trace (one per epoch and layer).
struct TraceRow {
  std::size_t epoch = 0;
  double loss = 0.0;
  double metric = 0.0;
  std::size_t layer_index = 0;
  double rho_weight = 0.0;
  double rho_fisher = 0.0;
  double rho_mean = 0.0;
  std::string error_flag;
};

std::vector<TraceRow> flatten_trace(std::span<const TraceEpoch> epochs);
std::vector<TraceEpoch> unflatten_trace(std::span<const TraceRow> rows);

Table to_table(std::span<const RhoEstimate> records);
Table to_table(std::span<const DivergenceReport> records);
Table to_table(std::span<const TraceRow> records);
Table to_table(std::span<const DimScanRecord> records);
Table to_table(std::span<const DimScanSummary> records);
Table to_table(std::span<const SweepRow> records);

const std::vector<Column>& rho_estimate_columns();
const std::vector<Column>& divergence_columns();
const std::vector<Column>& trace_columns();
const std::vector<Column>& dimscan_columns();
const std::vector<Column>& dimscan_summary_columns();

std::vector<RhoEstimate> rho_estimates_from_table(const Table& table);
std::vector<DivergenceReport> divergence_reports_from_table(const Table& table);
std::vector<TraceRow> trace_rows_from_table(const Table& table);
std::vector<DimScanRecord> dimscan_records_from_table(const Table& table);

/// Renders and writes; throws IoError.
void write_report(const Table& table, const std::filesystem::path& path, ReportFormat format);

template <class Record>
void write_report(std::span<const Record> records, const std::filesystem::path& path, ReportFormat format) {
  write_report(to_table(records), path, format);
}

std::vector<RhoEstimate> read_rho_report(const std::filesystem::path& path, ReportFormat format);
std::vector<DivergenceReport> read_divergence_report(const std::filesystem::path& path, ReportFormat format);
std::vector<TraceEpoch> read_trace_report(const std::filesystem::path& path, ReportFormat format);

/// Writes `text` to `path`; throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace rhoindex
