#include "syncot/field_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "syncot/error.hpp"

namespace syncot {

namespace {

constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

std::uint64_t get_le(std::string_view s, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[at + static_cast<std::size_t>(b)]))
         << (8 * b);
  }
  return v;
}

}  // namespace

std::size_t FieldArray::count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

FieldArray FieldArray::from(const Array3& a) {
  FieldArray f;
  f.dims = {static_cast<std::uint32_t>(a.nx()), static_cast<std::uint32_t>(a.ny()),
            static_cast<std::uint32_t>(a.nz())};
  f.data = a.values();
  return f;
}

FieldArray FieldArray::from(const Array2& a) {
  FieldArray f;
  f.dims = {static_cast<std::uint32_t>(a.nx()), static_cast<std::uint32_t>(a.ny())};
  f.data = a.values();
  return f;
}

Array3 FieldArray::to_array3() const {
  if (dims.size() != 3) throw FormatError("expected a rank-3 field");
  Array3 a(dims[0], dims[1], dims[2]);
  a.values() = data;
  return a;
}

std::string encode_field(const FieldArray& f) {
  if (f.dims.empty()) throw FormatError("field rank must be at least 1");
  if (f.dims.size() > 255) throw FormatError("field rank exceeds 255");
  if (f.count() != f.data.size()) throw FormatError("field payload does not match its dims");
  std::string out = "SOT1";
  put_u32(out, kVersion);
  out.push_back(static_cast<char>(f.dims.size()));
  for (auto d : f.dims) put_u32(out, d);
  out.reserve(out.size() + 8 * f.data.size());
  for (double v : f.data) {
    if (!std::isfinite(v)) throw FormatError("refusing to write a non-finite value");
    put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

FieldArray decode_field(std::string_view s) {
  if (s.size() < 9 || s.substr(0, 4) != "SOT1") throw FormatError("bad magic, not an SOT1 file");
  if (get_le(s, 4, 4) != kVersion) throw FormatError("unsupported SOT1 version");
  const std::size_t rank = static_cast<unsigned char>(s[8]);
  if (rank == 0) throw FormatError("SOT1 rank must be at least 1");
  std::size_t at = 9;
  if (s.size() < at + 4 * rank) throw FormatError("truncated SOT1 header");
  FieldArray f;
  for (std::size_t r = 0; r < rank; ++r, at += 4) {
    f.dims.push_back(static_cast<std::uint32_t>(get_le(s, at, 4)));
  }
  const std::size_t n = f.count();
  if (s.size() != at + 8 * n) throw FormatError("SOT1 payload length does not match dims");
  f.data.resize(n);
  for (std::size_t i = 0; i < n; ++i, at += 8) f.data[i] = std::bit_cast<double>(get_le(s, at, 8));
  return f;
}

void write_field(const std::string& path, const FieldArray& f) {
  const std::string bytes = encode_field(f);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw InputError("failed writing " + path);
}

FieldArray read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return decode_field(ss.str());
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string format_double17(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return {buf, r.ptr};
}

void write_slice_csv(const std::string& path, const double* data, std::size_t rows,
                     std::size_t cols) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open " + path + " for writing");
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) os << ',';
      os << format_double17(data[r * cols + c]);
    }
    os << '\n';
  }
  if (!os) throw InputError("failed writing " + path);
}

namespace {

double parse_number(std::string_view cell, std::size_t line) {
  double v = 0.0;
  const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (r.ec != std::errc() || r.ptr != cell.data() + cell.size()) {
    throw FormatError("line " + std::to_string(line) + ": '" + std::string(cell) +
                      "' is not a number");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> read_csv_numbers(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<double> row;
    for (auto cell : split(line)) row.push_back(parse_number(cell, n));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_convergence_log(std::ostream& os, const ConvergenceReport& report) {
  os << kLogHeader << '\n';
  for (const ReportRow& r : report.rows) {
    os << r.iter << ',' << format_double(r.cost_total) << ',' << format_double(r.cost_primary)
       << ',' << format_double(r.cost_secondary) << ',';
    if (r.h_value) os << format_double(*r.h_value);
    os << ',' << format_double(r.div_residual_max) << ',' << format_double(r.rel_change) << '\n';
  }
}

void write_convergence_log(const std::string& path, const ConvergenceReport& report) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open " + path + " for writing");
  write_convergence_log(os, report);
  if (!os) throw InputError("failed writing " + path);
}

std::vector<ReportRow> read_convergence_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != kLogHeader) {
    throw FormatError(path + ": missing or unexpected convergence log header");
  }
  std::vector<ReportRow> rows;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 7) throw FormatError("line " + std::to_string(n) + ": expected 7 columns");
    ReportRow r;
    r.iter = static_cast<int>(parse_number(cells[0], n));
    r.cost_total = parse_number(cells[1], n);
    r.cost_primary = parse_number(cells[2], n);
    r.cost_secondary = parse_number(cells[3], n);
    if (!cells[4].empty()) r.h_value = parse_number(cells[4], n);
    r.div_residual_max = parse_number(cells[5], n);
    r.rel_change = parse_number(cells[6], n);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace syncot
