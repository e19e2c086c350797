#include "syncot/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "syncot/error.hpp"
#include "syncot/field_io.hpp"

namespace syncot {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Raw right-hand side of one assignment plus its line, for error messages.
struct Value {
  std::string text;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("line " + std::to_string(line) + ": " + what);
  }

  std::string as_string() const {
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
      return text.substr(1, text.size() - 2);
    }
    if (text.empty()) fail("missing value");
    return text;
  }
  double as_double() const { return parse_double(text); }
  double parse_double(std::string_view s) const {
    s = trim(s);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
      fail("expected a number, got '" + std::string(s) + "'");
    }
    return v;
  }
  long long as_int() const {
    long long v = 0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
      fail("expected an integer, got '" + text + "'");
    }
    return v;
  }
  std::size_t as_count() const {
    const long long v = as_int();
    if (v < 0) fail("expected a nonnegative integer");
    return static_cast<std::size_t>(v);
  }
  bool as_bool() const {
    if (text == "true") return true;
    if (text == "false") return false;
    fail("expected true or false, got '" + text + "'");
  }
  std::vector<double> as_list() const {
    if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
      fail("expected a bracketed list, got '" + text + "'");
    }
    std::vector<double> out;
    std::string_view body(text);
    body = trim(body.substr(1, body.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      out.push_back(parse_double(body.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      body = body.substr(comma + 1);
    }
    return out;
  }
  // "auto" or a positive number; auto is stored as 0.
  double as_step() const {
    if (text == "auto") return 0.0;
    const double v = as_double();
    if (!(v > 0.0)) fail("step sizes must be positive or auto");
    return v;
  }
};

std::string quote(const std::string& s) { return "\"" + s + "\""; }
std::string num(double v) { return format_double(v); }
std::string step(double v) { return v > 0.0 ? format_double(v) : "auto"; }
std::string boolean(bool b) { return b ? "true" : "false"; }

const char* kind_name(MarginalSpec::Kind k) {
  return k == MarginalSpec::Kind::truncated_gaussian ? "truncated_gaussian" : "from_file";
}

MarginalSpec::Kind kind_from(const Value& v) {
  const std::string s = v.as_string();
  if (s == "truncated_gaussian") return MarginalSpec::Kind::truncated_gaussian;
  if (s == "from_file") return MarginalSpec::Kind::from_file;
  v.fail("unknown marginal kind '" + s + "'");
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const Value&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class F>
auto wrap(F f, const Value& v) {
  try {
    return f();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind("line ", 0) == 0) throw;
    v.fail(msg);
  }
}

void add_marginal_keys(std::vector<Key>& keys, const std::string& prefix,
                       MarginalSpec ProblemSpec::*member) {
  keys.push_back({prefix + ".kind",
                  [=](RunConfig& c, const Value& v) { (c.problem.*member).kind = kind_from(v); },
                  [=](const RunConfig& c) { return std::string(kind_name((c.problem.*member).kind)); }});
  keys.push_back({prefix + ".x0", [=](RunConfig& c, const Value& v) { (c.problem.*member).x0 = v.as_double(); },
                  [=](const RunConfig& c) { return num((c.problem.*member).x0); }});
  keys.push_back({prefix + ".y0", [=](RunConfig& c, const Value& v) { (c.problem.*member).y0 = v.as_double(); },
                  [=](const RunConfig& c) { return num((c.problem.*member).y0); }});
  keys.push_back({prefix + ".sigma",
                  [=](RunConfig& c, const Value& v) { (c.problem.*member).sigma = v.as_double(); },
                  [=](const RunConfig& c) { return num((c.problem.*member).sigma); }});
  keys.push_back({prefix + ".path",
                  [=](RunConfig& c, const Value& v) { (c.problem.*member).path = v.as_string(); },
                  [=](const RunConfig& c) { return quote((c.problem.*member).path); }});
}

const std::vector<Key>& schema() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    k.push_back({"preset", [](RunConfig&, const Value&) {},
                 [](const RunConfig& c) { return quote(c.preset); }});
    k.push_back({"grid.d_spatial",
                 [](RunConfig& c, const Value& v) { c.problem.d_spatial = static_cast<int>(v.as_int()); },
                 [](const RunConfig& c) { return std::to_string(c.problem.d_spatial); }});
    k.push_back({"grid.M", [](RunConfig& c, const Value& v) { c.problem.M = v.as_count(); },
                 [](const RunConfig& c) { return std::to_string(c.problem.M); }});
    k.push_back({"grid.N", [](RunConfig& c, const Value& v) { c.problem.N = v.as_count(); },
                 [](const RunConfig& c) { return std::to_string(c.problem.N); }});
    k.push_back({"grid.Q", [](RunConfig& c, const Value& v) { c.problem.Q = v.as_count(); },
                 [](const RunConfig& c) { return std::to_string(c.problem.Q); }});
    k.push_back({"problem.form",
                 [](RunConfig& c, const Value& v) {
                   c.problem.form = wrap([&] { return form_from_string(v.as_string()); }, v);
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.problem.form)); }});
    k.push_back({"problem.alpha",
                 [](RunConfig& c, const Value& v) {
                   const auto l = v.as_list();
                   if (l.size() != 2) v.fail("problem.alpha needs exactly two weights");
                   c.problem.alpha = {l[0], l[1]};
                 },
                 [](const RunConfig& c) {
                   return "[" + num(c.problem.alpha.primary) + ", " + num(c.problem.alpha.secondary) + "]";
                 }});
    add_marginal_keys(k, "problem.source", &ProblemSpec::source);
    add_marginal_keys(k, "problem.target", &ProblemSpec::target);
    k.push_back({"problem.map.variant",
                 [](RunConfig& c, const Value& v) {
                   c.problem.map.variant = wrap([&] { return map_variant_from_string(v.as_string()); }, v);
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.problem.map.variant)); }});
    k.push_back({"problem.map.sigma", [](RunConfig& c, const Value& v) { c.problem.map.sigma = v.as_double(); },
                 [](const RunConfig& c) { return num(c.problem.map.sigma); }});
    k.push_back({"problem.map.colormap",
                 [](RunConfig& c, const Value& v) { c.problem.map.colormap = v.as_string(); },
                 [](const RunConfig& c) { return c.problem.map.colormap; }});
    k.push_back({"problem.map.field",
                 [](RunConfig& c, const Value& v) {
                   c.problem.map.field = wrap([&] { return scalar_field_from_string(v.as_string()); }, v);
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.problem.map.field)); }});
    k.push_back({"problem.map.fd_step",
                 [](RunConfig& c, const Value& v) { c.problem.map.fd_step = v.as_double(); },
                 [](const RunConfig& c) { return num(c.problem.map.fd_step); }});
    k.push_back({"problem.map.table", [](RunConfig& c, const Value& v) { c.map_table = v.as_string(); },
                 [](const RunConfig& c) { return quote(c.map_table); }});
    k.push_back({"solver.algorithm",
                 [](RunConfig& c, const Value& v) {
                   c.solver.algorithm = wrap([&] { return algorithm_from_string(v.as_string()); }, v);
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.solver.algorithm)); }});
    k.push_back({"solver.tau", [](RunConfig& c, const Value& v) { c.solver.tau = v.as_step(); },
                 [](const RunConfig& c) { return step(c.solver.tau); }});
    k.push_back({"solver.sigma", [](RunConfig& c, const Value& v) { c.solver.sigma = v.as_step(); },
                 [](const RunConfig& c) { return step(c.solver.sigma); }});
    k.push_back({"solver.theta", [](RunConfig& c, const Value& v) { c.solver.theta = v.as_double(); },
                 [](const RunConfig& c) { return num(c.solver.theta); }});
    k.push_back({"solver.max_iters",
                 [](RunConfig& c, const Value& v) { c.solver.max_iters = static_cast<int>(v.as_int()); },
                 [](const RunConfig& c) { return std::to_string(c.solver.max_iters); }});
    k.push_back({"solver.stop_tol", [](RunConfig& c, const Value& v) { c.solver.stop_tol = v.as_double(); },
                 [](const RunConfig& c) { return num(c.solver.stop_tol); }});
    k.push_back({"solver.window",
                 [](RunConfig& c, const Value& v) { c.solver.window = static_cast<int>(v.as_int()); },
                 [](const RunConfig& c) { return std::to_string(c.solver.window); }});
    k.push_back({"solver.log_every",
                 [](RunConfig& c, const Value& v) { c.solver.log_every = static_cast<int>(v.as_int()); },
                 [](const RunConfig& c) { return std::to_string(c.solver.log_every); }});
    k.push_back({"solver.beta_inv",
                 [](RunConfig& c, const Value& v) {
                   c.solver.beta_inv = v.text == "auto" ? 0.0 : v.as_double();
                 },
                 [](const RunConfig& c) { return step(c.solver.beta_inv); }});
    k.push_back({"solver.seed",
                 [](RunConfig& c, const Value& v) { c.solver.seed = static_cast<std::uint64_t>(v.as_count()); },
                 [](const RunConfig& c) { return std::to_string(c.solver.seed); }});
    k.push_back({"solver.norm_iters",
                 [](RunConfig& c, const Value& v) { c.solver.norm_iters = static_cast<int>(v.as_int()); },
                 [](const RunConfig& c) { return std::to_string(c.solver.norm_iters); }});
    k.push_back({"solver.prox.fp_tol", [](RunConfig& c, const Value& v) { c.solver.prox.fp_tol = v.as_double(); },
                 [](const RunConfig& c) { return num(c.solver.prox.fp_tol); }});
    k.push_back({"solver.prox.fp_max_iters",
                 [](RunConfig& c, const Value& v) { c.solver.prox.fp_max_iters = static_cast<int>(v.as_int()); },
                 [](const RunConfig& c) { return std::to_string(c.solver.prox.fp_max_iters); }});
    k.push_back({"solver.sinkhorn.epsilon",
                 [](RunConfig& c, const Value& v) {
                   c.solver.sinkhorn.epsilon = v.text == "auto" ? 0.0 : v.as_double();
                 },
                 [](const RunConfig& c) { return step(c.solver.sinkhorn.epsilon); }});
    k.push_back({"solver.sinkhorn.epsilon_rel",
                 [](RunConfig& c, const Value& v) { c.solver.sinkhorn.epsilon_rel = v.as_double(); },
                 [](const RunConfig& c) { return num(c.solver.sinkhorn.epsilon_rel); }});
    k.push_back({"solver.sinkhorn.max_iters",
                 [](RunConfig& c, const Value& v) { c.solver.sinkhorn.max_iters = static_cast<int>(v.as_int()); },
                 [](const RunConfig& c) { return std::to_string(c.solver.sinkhorn.max_iters); }});
    k.push_back({"solver.sinkhorn.tol", [](RunConfig& c, const Value& v) { c.solver.sinkhorn.tol = v.as_double(); },
                 [](const RunConfig& c) { return num(c.solver.sinkhorn.tol); }});
    k.push_back({"solver.sinkhorn.epsilon_scaling",
                 [](RunConfig& c, const Value& v) { c.solver.sinkhorn.epsilon_scaling = v.as_bool(); },
                 [](const RunConfig& c) { return boolean(c.solver.sinkhorn.epsilon_scaling); }});
    k.push_back({"solver.sinkhorn.debias",
                 [](RunConfig& c, const Value& v) { c.solver.sinkhorn.debias = v.as_bool(); },
                 [](const RunConfig& c) { return boolean(c.solver.sinkhorn.debias); }});
    k.push_back({"output.dir", [](RunConfig& c, const Value& v) { c.output.dir = v.as_string(); },
                 [](const RunConfig& c) { return quote(c.output.dir); }});
    k.push_back({"output.snapshot_stride",
                 [](RunConfig& c, const Value& v) { c.output.snapshot_stride = static_cast<int>(v.as_int()); },
                 [](const RunConfig& c) { return std::to_string(c.output.snapshot_stride); }});
    return k;
  }();
  return keys;
}

// Strip a trailing comment that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_quotes = !in_quotes;
    if (line[i] == '#' && !in_quotes) return line.substr(0, i);
  }
  return line;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  std::map<std::string, const Key*> index;
  for (const Key& k : schema()) index[k.name] = &k;

  std::vector<std::pair<const Key*, Value>> assignments;
  std::set<std::string> seen;
  std::string preset;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    Value v{std::string(trim(line.substr(eq + 1))), line_no};
    const auto it = index.find(key);
    if (it == index.end()) v.fail("unknown key '" + key + "'");
    if (!seen.insert(key).second) v.fail("duplicate key '" + key + "'");
    if (key == "preset") {
      preset = v.as_string();
      if (!preset.empty()) {
        wrap([&] { return load_preset(preset); }, v);
      }
      continue;
    }
    assignments.emplace_back(it->second, std::move(v));
  }

  RunConfig cfg = preset.empty() ? RunConfig{} : load_preset(preset);
  for (const auto& [key, v] : assignments) key->set(cfg, v);
  try {
    validate(cfg);
  } catch (const ConfigError& e) {
    // Point at the line that set the offending key when we can.
    const std::string msg = e.what();
    for (auto it = assignments.rbegin(); it != assignments.rend(); ++it) {
      const std::string& name = it->first->name;
      const bool hit = msg.find(name) != std::string::npos ||
                       (name == "problem.alpha" && msg.find("alpha") != std::string::npos) ||
                       (name == "solver.algorithm" && msg.find("solver.algorithm") != std::string::npos);
      if (hit) it->second.fail(msg);
    }
    throw ConfigError("line " + std::to_string(line_no) + ": " + msg);
  }
  return cfg;
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const Key& k : schema()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

void validate(const RunConfig& cfg) {
  const ProblemSpec& p = cfg.problem;
  validate_alpha(p.alpha);
  if (!(p.alpha.primary > 0.0)) {
    throw ConfigError("alpha1 must be positive so that the metric is positive definite");
  }
  GridSpec::make(p.d_spatial, p.M, p.N, p.Q);
  for (const MarginalSpec* m : {&p.source, &p.target}) {
    if (m->kind == MarginalSpec::Kind::truncated_gaussian && !(m->sigma > 0.0)) {
      throw ConfigError("marginal sigma must be positive");
    }
    if (m->kind == MarginalSpec::Kind::from_file && m->path.empty()) {
      throw ConfigError("from_file marginal needs a path");
    }
  }
  const MapVariant v = p.map.variant;
  const bool surface = v == MapVariant::surface_gaussian_bump || v == MapVariant::surface_sine ||
                       v == MapVariant::surface_cos_radial || v == MapVariant::colormap;
  if (surface && p.d_spatial != 2) throw ConfigError("problem.map.variant needs grid.d_spatial = 2");
  if (v == MapVariant::colormap) colormap_rgb(p.map.colormap, 0.0);
  if (v == MapVariant::tabulated && cfg.map_table.empty()) {
    throw ConfigError("tabulated map needs problem.map.table");
  }
  if (!(p.map.fd_step > 0.0)) throw ConfigError("problem.map.fd_step must be positive");
  if (!(p.map.sigma > 0.0)) throw ConfigError("problem.map.sigma must be positive");
  const SolverConfig& s = cfg.solver;
  const bool three_term = s.algorithm != Algorithm::chambolle_pock;
  if (p.form == Form::kantorovich && !three_term) {
    throw ConfigError("Kantorovich form needs solver.algorithm = condat_vu, pdfp or yan");
  }
  if (p.form == Form::monge && three_term) {
    throw ConfigError("Monge form is solved with solver.algorithm = chambolle_pock");
  }
  if (s.max_iters < 1) throw ConfigError("solver.max_iters must be >= 1");
  if (!(s.stop_tol > 0.0)) throw ConfigError("solver.stop_tol must be positive");
  if (s.window < 1) throw ConfigError("solver.window must be >= 1");
  if (s.log_every < 1) throw ConfigError("solver.log_every must be >= 1");
  if (!(s.theta > 0.5)) throw ConfigError("solver.theta must exceed 1/2");
  if (s.beta_inv < 0.0) throw ConfigError("solver.beta_inv must be nonnegative");
  if (s.norm_iters < 10) throw ConfigError("solver.norm_iters must be >= 10");
  ProxParams pp = s.prox;
  pp.tau = 1.0;
  syncot::validate(pp);
  syncot::validate(s.sinkhorn);
  if (cfg.output.snapshot_stride < 0) throw ConfigError("output.snapshot_stride must be >= 0");
}

Problem build_problem(const RunConfig& cfg) {
  validate(cfg);
  ProblemSpec spec = cfg.problem;
  if (spec.map.variant == MapVariant::tabulated) {
    const FieldArray f = read_field(cfg.map_table);
    auto tab = std::make_shared<TabulatedMap>();
    tab->domain_dim = spec.d_spatial;
    if (spec.d_spatial == 2 && f.dims.size() == 3) {
      tab->nx = f.dims[0];
      tab->ny = f.dims[1];
      tab->codim = f.dims[2];
    } else if (spec.d_spatial == 1 && f.dims.size() == 2) {
      tab->nx = f.dims[0];
      tab->ny = 1;
      tab->codim = f.dims[1];
    } else {
      throw InputError("map table " + cfg.map_table + " has the wrong rank for the grid");
    }
    if (tab->nx < 2 || (spec.d_spatial == 2 && tab->ny < 2) || tab->codim < 1) {
      throw InputError("map table " + cfg.map_table + " needs at least two samples per axis");
    }
    tab->values = f.data;
    spec.map.table = std::move(tab);
  }
  return build_problem(spec);
}

}  // namespace syncot
