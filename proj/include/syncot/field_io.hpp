#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "syncot/array.hpp"
#include "syncot/solver.hpp"

namespace syncot {

// SOT1 field file: "SOT1", u32 version = 1, u8 rank, rank x u32 dims, then
// row-major f64 payload. Every integer and float is little-endian.
struct FieldArray {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;

  std::size_t count() const;
  static FieldArray from(const Array3& a);
  static FieldArray from(const Array2& a);
  Array3 to_array3() const;
};

std::string encode_field(const FieldArray& f);
FieldArray decode_field(std::string_view bytes);
void write_field(const std::string& path, const FieldArray& f);
FieldArray read_field(const std::string& path);

// Shortest representation that reads back to the same double.
std::string format_double(double v);
// 17 significant digits, as used by the slice CSV export.
std::string format_double17(double v);

// One (rows x cols) slice as CSV, row-major, no header.
void write_slice_csv(const std::string& path, const double* data, std::size_t rows,
                     std::size_t cols);
std::vector<std::vector<double>> read_csv_numbers(const std::string& path);

inline constexpr const char* kLogHeader =
    "iter,cost_total,cost_primary,cost_secondary,h_value,div_residual_max,rel_change";

void write_convergence_log(std::ostream& os, const ConvergenceReport& report);
void write_convergence_log(const std::string& path, const ConvergenceReport& report);
// Rows of a convergence CSV; throws FormatError on a bad header or cell.
std::vector<ReportRow> read_convergence_log(const std::string& path);

}  // namespace syncot
