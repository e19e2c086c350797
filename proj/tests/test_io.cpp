#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "syncot/config.hpp"
#include "syncot/error.hpp"
#include "syncot/field_io.hpp"

using namespace syncot;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("syncot_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string le_u32(std::uint32_t v) {
  std::string s(4, '\0');
  for (int i = 0; i < 4; ++i) s[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  return s;
}

std::string le_f64(double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  std::string s(8, '\0');
  for (int i = 0; i < 8; ++i) s[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  return s;
}

// Random but valid edits of a preset, for the canonical-dump fixpoint.
RunConfig random_config(oracle::Rng& r) {
  const auto& ids = preset_ids();
  RunConfig c = load_preset(ids[r.index(ids.size())]);
  c.problem.M = 4 + r.index(40);
  if (c.problem.d_spatial == 2) c.problem.N = 4 + r.index(40);
  c.problem.Q = 2 + r.index(30);
  const double a2 = r.uniform(0.0, 0.9);
  c.problem.alpha = {1.0 - a2, a2};
  c.problem.source.x0 = r.uniform();
  c.problem.source.sigma = r.uniform(0.01, 0.3);
  c.problem.target.y0 = r.normal();
  c.solver.max_iters = 1 + static_cast<int>(r.index(100000));
  c.solver.stop_tol = std::pow(10.0, r.uniform(-12.0, -2.0));
  c.solver.tau = r.index(2) ? 0.0 : r.uniform(0.01, 2.0);
  c.solver.seed = r.index(1000000);
  c.solver.sinkhorn.epsilon_rel = r.uniform(1e-4, 1e-1);
  c.solver.sinkhorn.debias = r.index(2) == 1;
  c.output.dir = "out dir/" + std::to_string(r.index(1000));
  c.output.snapshot_stride = static_cast<int>(r.index(50));
  return c;
}

}  // namespace

TEST_CASE("SOT1 round trip is bit-exact") {
  oracle::Rng r(71);
  FieldArray f;
  f.dims = {5, 4, 3};
  for (int i = 0; i < 60; ++i) f.data.push_back(r.normal() * std::pow(10.0, r.uniform(-300.0, 300.0)));
  f.data[7] = -0.0;
  f.data[8] = std::numeric_limits<double>::denorm_min();
  const fs::path dir = scratch_dir("roundtrip");
  write_field((dir / "a.sot").string(), f);
  const FieldArray g = read_field((dir / "a.sot").string());
  CHECK(g.dims == f.dims);
  REQUIRE(g.data.size() == f.data.size());
  CHECK(std::memcmp(g.data.data(), f.data.data(), f.data.size() * sizeof(double)) == 0);
  CHECK(encode_field(g) == slurp(dir / "a.sot"));
  CHECK(slurp(dir / "a.sot").size() == 4 + 4 + 1 + 12 + 480);

  Array3 a(2, 3, 4);
  oracle::fill_normal(a, r);
  CHECK(FieldArray::from(a).to_array3() == a);
  fs::remove_all(dir);
}

TEST_CASE("SOT1 bytes are explicitly little-endian") {
  FieldArray f;
  f.dims = {2};
  f.data = {1.0, -2.0};
  const std::string want = std::string("SOT1") + le_u32(1) + std::string(1, '\x01') + le_u32(2) +
                           le_f64(1.0) + le_f64(-2.0);
  CHECK(encode_field(f) == want);
  CHECK(want.substr(13, 8) == std::string("\0\0\0\0\0\0\xF0\x3F", 8));
}

TEST_CASE("SOT1 rejects malformed input") {
  FieldArray f;
  f.dims = {3};
  f.data = {1.0, 2.0, 3.0};
  const std::string good = encode_field(f);
  CHECK_NOTHROW(decode_field(good));

  std::string bad = good;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_field(bad), FormatError);
  bad = good;
  bad[4] = 2;
  CHECK_THROWS_AS(decode_field(bad), FormatError);
  CHECK_THROWS_AS(decode_field(good.substr(0, good.size() - 1)), FormatError);
  CHECK_THROWS_AS(decode_field(good + "x"), FormatError);
  CHECK_THROWS_AS(decode_field(good.substr(0, 6)), FormatError);

  const std::string rank0 = std::string("SOT1") + le_u32(1) + std::string(1, '\0');
  CHECK_THROWS_AS(decode_field(rank0), FormatError);
  FieldArray empty;
  CHECK_THROWS_AS(encode_field(empty), FormatError);

  FieldArray nan = f;
  nan.data[1] = std::nan("");
  CHECK_THROWS_AS(encode_field(nan), FormatError);
  nan.data[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(encode_field(nan), FormatError);

  FieldArray mismatch = f;
  mismatch.dims = {4};
  CHECK_THROWS_AS(encode_field(mismatch), FormatError);
  CHECK_THROWS(read_field("/nonexistent/dir/x.sot"));
}

TEST_CASE("number formatting round-trips") {
  oracle::Rng r(72);
  for (int t = 0; t < 1000; ++t) {
    const double v = r.normal() * std::pow(10.0, r.uniform(-20.0, 20.0));
    CHECK(std::stod(format_double(v)) == v);
    CHECK(std::stod(format_double17(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("slice CSV") {
  const fs::path dir = scratch_dir("csv");
  const double d[6] = {0.1, 1.0 / 3.0, -2.0, 1e-300, 5.0, 0.0};
  write_slice_csv((dir / "s.csv").string(), d, 2, 3);
  const auto rows = read_csv_numbers((dir / "s.csv").string());
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].size() == 3);
  for (std::size_t i = 0; i < 6; ++i) CHECK(rows[i / 3][i % 3] == d[i]);
  const std::string text = slurp(dir / "s.csv");
  CHECK(text.find("0.33333333333333331") != std::string::npos);
  CHECK(text.find("iter") == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("convergence log schema") {
  const fs::path dir = scratch_dir("log");
  ConvergenceReport empty;
  write_convergence_log((dir / "e.csv").string(), empty);
  CHECK(slurp(dir / "e.csv") == std::string(kLogHeader) + "\n");
  CHECK(read_convergence_log((dir / "e.csv").string()).empty());

  ConvergenceReport rep;
  ReportRow a;
  a.iter = 10;
  a.cost_total = 0.25;
  a.cost_primary = 0.2;
  a.cost_secondary = 1.0 / 3.0;
  a.div_residual_max = 1e-15;
  a.rel_change = 3e-4;
  ReportRow b = a;
  b.iter = 20;
  b.h_value = 0.125;
  rep.rows = {a, b};
  write_convergence_log((dir / "r.csv").string(), rep);
  const auto back = read_convergence_log((dir / "r.csv").string());
  REQUIRE(back.size() == 2);
  CHECK(back[0].iter == 10);
  CHECK_FALSE(back[0].h_value.has_value());
  CHECK(back[1].h_value.value() == 0.125);
  CHECK(back[0].cost_secondary == 1.0 / 3.0);
  CHECK(back[1].div_residual_max == 1e-15);
  CHECK(back[1].rel_change == 3e-4);
  const std::string text = slurp(dir / "r.csv");
  CHECK(text.substr(0, text.find('\n')) == kLogHeader);
  // Monge rows leave h_value empty.
  CHECK(text.find(",,") != std::string::npos);

  std::ofstream((dir / "bad.csv").string()) << "iter,cost\n1,2\n";
  CHECK_THROWS_AS(read_convergence_log((dir / "bad.csv").string()), FormatError);
  std::ofstream((dir / "bad2.csv").string()) << kLogHeader << "\n1,x,0,0,,0,0\n";
  CHECK_THROWS_AS(read_convergence_log((dir / "bad2.csv").string()), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("config: minimal preset reference expands to the full preset") {
  const RunConfig c = parse_config("preset = fig3a_bump\n");
  CHECK(dump_config(c) == dump_config(load_preset("fig3a_bump")));
  const RunConfig d = parse_config("# comment\n\nproblem.alpha = [0.05, 0.95]  # trailing\npreset = \"fig3a_bump\"\n");
  CHECK(d.problem.alpha.primary == 0.05);
  CHECK(d.problem.alpha.secondary == 0.95);
  CHECK(parse_config(dump_config(d)).problem.alpha.secondary == 0.95);
}

TEST_CASE("property: parse(dump(config)) is a fixpoint") {
  for (const std::string& id : preset_ids()) {
    const std::string s = dump_config(load_preset(id));
    CHECK(dump_config(parse_config(s)) == s);
  }
  oracle::Rng r(73);
  for (int t = 0; t < 100; ++t) {
    const RunConfig c = random_config(r);
    REQUIRE_NOTHROW(validate(c));
    const std::string s = dump_config(c);
    const RunConfig back = parse_config(s);
    CHECK(dump_config(back) == s);
    CHECK(back.problem.alpha.primary == c.problem.alpha.primary);
    CHECK(back.solver.stop_tol == c.solver.stop_tol);
    CHECK(back.output.dir == c.output.dir);
  }
}

TEST_CASE("config errors carry line numbers") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string alpha = message("preset = fig3a_bump\nproblem.alpha = [0.5, 0.6]\n");
  CHECK(alpha.rfind("line 2:", 0) == 0);
  CHECK(alpha.find("simplex") != std::string::npos);
  const std::string unknown = message("grid.M = 8\nsolver.frobnicate = 3\n");
  CHECK(unknown.rfind("line 2:", 0) == 0);
  CHECK(unknown.find("frobnicate") != std::string::npos);
  CHECK(message("grid.M = eight\n").rfind("line 1:", 0) == 0);
  CHECK(message("grid.M\n").rfind("line 1:", 0) == 0);
  CHECK(message("solver.sinkhorn.debias = maybe\n").rfind("line 1:", 0) == 0);
  CHECK(message("preset = nope\n").rfind("line 1:", 0) == 0);
}
