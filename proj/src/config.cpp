#include "jdsem/config.hpp"

#include "jdsem/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace jdsem {

namespace {

using Index = Eigen::Index;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

[[noreturn]] void fail(const ConfigEntry& e, const std::string& msg) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(e.line) + ", '" + e.key + "': " + msg);
}

std::optional<double> to_real(std::string_view tok) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

Cell parse_cell(const ConfigEntry& e, std::string_view tok) {
  if (!tok.empty() && (tok[0] == 't' || tok[0] == 'T')) {
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), k);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || k == 0) {
      fail(e, "bad parameter reference '" + std::string(tok) + "' (expected t1, t2, ...)");
    }
    return Cell::free(k - 1);
  }
  const auto v = to_real(tok);
  if (!v) fail(e, "bad cell '" + std::string(tok) + "'");
  return Cell::fixed(*v);
}

// Rows of whitespace-separated tokens, or a single `diag ...` row.
struct Grid {
  bool diag = false;
  std::vector<std::vector<std::string_view>> rows;
};

Grid parse_grid(const ConfigEntry& e) {
  Grid g;
  const std::string_view v = trim(e.value);
  if (v.empty()) fail(e, "empty value");
  const auto first = tokens(v);
  if (first.front() == "diag") {
    g.diag = true;
    g.rows.emplace_back(first.begin() + 1, first.end());
    if (g.rows.front().empty()) fail(e, "'diag' needs at least one entry");
    return g;
  }
  for (std::string_view row : split(v, ';')) {
    auto t = tokens(row);
    if (t.empty()) fail(e, "empty matrix row");
    g.rows.push_back(std::move(t));
  }
  return g;
}

const std::set<std::string, std::less<>> kModelKeys = {"name",        "p1",        "p2",        "k1",
                                                       "k2",          "lambda1",   "lambda2",   "b",
                                                       "gamma",       "sigma_xi",  "sigma_delta",
                                                       "sigma_eps",   "sigma_zeta", "init"};

void reject_unknown(const ConfigSection& s, const std::set<std::string, std::less<>>& allowed) {
  for (const ConfigEntry& e : s.entries) {
    if (!allowed.contains(e.key)) fail(e, "unknown key");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Vector broadcast(const ConfigEntry& e, std::size_t dim) {
  const std::vector<double> v = parse_reals(e);
  if (v.size() == 1) return Vector::Constant(static_cast<Index>(dim), v.front());
  if (v.size() != dim) fail(e, "expected 1 or " + std::to_string(dim) + " values, got " + std::to_string(v.size()));
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

LatentSdeSpec parse_sde(const ConfigFile& cfg, const char* name) {
  const ConfigSection* s = cfg.section(name);
  if (!s) throw Error(ErrorCode::ParseError, cfg.origin + ": missing section [" + name + "]");
  reject_unknown(*s, {"drift_rate", "mean", "diffusion", "jump_intensity", "jump_variance", "x0"});
  LatentSdeSpec sde;
  sde.diffusion = parse_matrix(s->require("diffusion"));
  const std::size_t dim = static_cast<std::size_t>(sde.diffusion.rows());
  sde.drift_rate = parse_matrix(s->require("drift_rate"));
  if (static_cast<std::size_t>(sde.drift_rate.rows()) != dim || sde.drift_rate.cols() != sde.drift_rate.rows()) {
    fail(s->require("drift_rate"), "must be " + std::to_string(dim) + "x" + std::to_string(dim));
  }
  sde.mean = s->find("mean") ? broadcast(*s->find("mean"), dim) : Vector::Zero(static_cast<Index>(dim));
  sde.x0 = s->find("x0") ? broadcast(*s->find("x0"), dim) : sde.mean;
  const Vector intensity =
      s->find("jump_intensity") ? broadcast(*s->find("jump_intensity"), dim) : Vector::Zero(static_cast<Index>(dim));
  const Vector variance =
      s->find("jump_variance") ? broadcast(*s->find("jump_variance"), dim) : Vector::Zero(static_cast<Index>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    sde.jumps.push_back(JumpSpec{intensity(static_cast<Index>(k)), variance(static_cast<Index>(k))});
  }
  sde.validate(name);
  return sde;
}

}  // namespace

const ConfigEntry* ConfigSection::find(std::string_view key) const {
  for (const ConfigEntry& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

const ConfigEntry& ConfigSection::require(std::string_view key) const {
  if (const ConfigEntry* e = find(key)) return *e;
  const std::string where = name.empty() ? "top level" : "[" + name + "]";
  throw Error(ErrorCode::ParseError, "missing key '" + std::string(key) + "' in " + where);
}

const ConfigSection* ConfigFile::section(std::string_view name) const {
  for (const ConfigSection& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

ConfigFile parse_config(std::string_view text, std::string origin) {
  ConfigFile out;
  out.origin = std::move(origin);
  out.sections.push_back(ConfigSection{"", 0, {}});

  std::size_t line_no = 0;
  std::string pending;
  std::size_t pending_line = 0;
  bool continuing = false;
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (std::string_view raw : lines) {
    ++line_no;
    std::string_view line = raw;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!continuing) {
      pending.clear();
      pending_line = line_no;
    }
    continuing = !line.empty() && line.back() == '\\';
    if (continuing) line = trim(line.substr(0, line.size() - 1));
    pending += ' ';
    pending += line;
    if (continuing) continue;

    const std::string_view l = trim(pending);
    if (l.empty()) continue;

    if (l.front() == '[') {
      if (l.back() != ']') {
        throw Error(ErrorCode::ParseError, out.origin + ":" + std::to_string(pending_line) + ": unterminated section");
      }
      const std::string name(trim(l.substr(1, l.size() - 2)));
      if (name.empty()) {
        throw Error(ErrorCode::ParseError, out.origin + ":" + std::to_string(pending_line) + ": empty section name");
      }
      out.sections.push_back(ConfigSection{name, pending_line, {}});
      continue;
    }
    const std::size_t eq = l.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ParseError,
                  out.origin + ":" + std::to_string(pending_line) + ": expected 'key = value' or '[section]'");
    }
    ConfigEntry e{std::string(trim(l.substr(0, eq))), std::string(trim(l.substr(eq + 1))), pending_line};
    if (e.key.empty()) throw Error(ErrorCode::ParseError, out.origin + ":" + std::to_string(pending_line) + ": empty key");
    ConfigSection& sec = out.sections.back();
    if (sec.find(e.key)) fail(e, "duplicate key");
    sec.entries.push_back(std::move(e));
  }
  if (continuing) {
    throw Error(ErrorCode::ParseError, out.origin + ": file ends inside a continued line");
  }
  return out;
}

ConfigFile load_config(const std::filesystem::path& path) { return parse_config(read_file(path), path.string()); }

double parse_real(const ConfigEntry& e) {
  const auto v = to_real(trim(e.value));
  if (!v) fail(e, "expected a real number, got '" + e.value + "'");
  return *v;
}

std::size_t parse_count(const ConfigEntry& e) {
  const std::string_view v = trim(e.value);
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec == std::errc() && ptr == v.data() + v.size()) return out;
  // Accept integral values written in exponent form, e.g. 5e4.
  const auto real = to_real(v);
  if (real && *real >= 0.0 && *real == std::floor(*real) && *real < 9.0e15) return static_cast<std::size_t>(*real);
  fail(e, "expected a non-negative integer, got '" + e.value + "'");
}

bool parse_bool(const ConfigEntry& e) {
  const std::string_view v = trim(e.value);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  fail(e, "expected true or false");
}

std::vector<double> parse_reals(const ConfigEntry& e) {
  std::vector<double> out;
  std::string list = e.value;
  std::replace(list.begin(), list.end(), ',', ' ');
  for (std::string_view tok : tokens(list)) {
    const auto v = to_real(tok);
    if (!v) fail(e, "bad number '" + std::string(tok) + "'");
    out.push_back(*v);
  }
  if (out.empty()) fail(e, "empty list");
  return out;
}

Matrix parse_matrix(const ConfigEntry& e) {
  const Grid g = parse_grid(e);
  if (g.diag) {
    const auto& row = g.rows.front();
    Matrix m = Matrix::Zero(static_cast<Index>(row.size()), static_cast<Index>(row.size()));
    for (std::size_t k = 0; k < row.size(); ++k) {
      const auto v = to_real(row[k]);
      if (!v) fail(e, "bad number '" + std::string(row[k]) + "'");
      m(static_cast<Index>(k), static_cast<Index>(k)) = *v;
    }
    return m;
  }
  const std::size_t cols = g.rows.front().size();
  Matrix m(static_cast<Index>(g.rows.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < g.rows.size(); ++r) {
    if (g.rows[r].size() != cols) fail(e, "row " + std::to_string(r + 1) + " has a different length");
    for (std::size_t c = 0; c < cols; ++c) {
      const auto v = to_real(g.rows[r][c]);
      if (!v) fail(e, "bad number '" + std::string(g.rows[r][c]) + "'");
      m(static_cast<Index>(r), static_cast<Index>(c)) = *v;
    }
  }
  return m;
}

EntryMap parse_entry_map(const ConfigEntry& e, std::size_t rows, std::size_t cols, bool symmetric) {
  const Grid g = parse_grid(e);
  EntryMap m(rows, cols);
  const std::string shape = std::to_string(rows) + "x" + std::to_string(cols);
  if (g.diag) {
    if (rows != cols || g.rows.front().size() != rows) fail(e, "diag needs " + std::to_string(rows) + " entries");
    for (std::size_t k = 0; k < rows; ++k) m(k, k) = parse_cell(e, g.rows.front()[k]);
    return m;
  }
  if (g.rows.size() != rows) fail(e, "expected " + std::to_string(rows) + " rows for a " + shape + " matrix");
  const bool lower = symmetric && std::all_of(g.rows.begin(), g.rows.end(), [&, r = std::size_t{0}](const auto& row) mutable {
                       return row.size() == ++r;
                     });
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t want = lower ? r + 1 : cols;
    if (g.rows[r].size() != want) {
      fail(e, "row " + std::to_string(r + 1) + " has " + std::to_string(g.rows[r].size()) + " cells, expected " +
                  std::to_string(cols) + (symmetric ? " (or a lower triangle)" : ""));
    }
    for (std::size_t c = 0; c < want; ++c) m(r, c) = parse_cell(e, g.rows[r][c]);
  }
  return m;
}

Candidate parse_model(const ConfigFile& cfg) {
  for (const ConfigSection& s : cfg.sections) {
    if (!s.name.empty()) throw Error(ErrorCode::ParseError, cfg.origin + ": model files have no sections");
  }
  const ConfigSection& top = cfg.sections.front();
  reject_unknown(top, kModelKeys);

  StructuralSpec s;
  if (const ConfigEntry* n = top.find("name")) {
    s.name = n->value;
  } else {
    s.name = std::filesystem::path(cfg.origin).stem().string();
  }
  s.p1 = parse_count(top.require("p1"));
  s.p2 = top.find("p2") ? parse_count(*top.find("p2")) : 0;
  s.k1 = parse_count(top.require("k1"));
  s.k2 = top.find("k2") ? parse_count(*top.find("k2")) : 0;
  // Maps with an empty shape may be left out.
  auto map = [&](std::string_view key, std::size_t rows, std::size_t cols, bool symmetric) {
    const ConfigEntry* e = top.find(key);
    if (!e && (rows == 0 || cols == 0 || key == "b")) return EntryMap(rows, cols);
    return parse_entry_map(e ? *e : top.require(key), rows, cols, symmetric);
  };
  s.lambda1 = map("lambda1", s.p1, s.k1, false);
  s.lambda2 = map("lambda2", s.p2, s.k2, false);
  s.b = map("b", s.k2, s.k2, false);
  s.gamma = map("gamma", s.k2, s.k1, false);
  s.sigma_xi = map("sigma_xi", s.k1, s.k1, true);
  s.sigma_delta = map("sigma_delta", s.p1, s.p1, true);
  s.sigma_eps = map("sigma_eps", s.p2, s.p2, true);
  s.sigma_zeta = map("sigma_zeta", s.k2, s.k2, true);

  Candidate c{s.name, validate_spec(std::move(s)), std::nullopt};
  if (const ConfigEntry* init = top.find("init")) {
    const std::vector<double> v = parse_reals(*init);
    if (v.size() != c.spec.q()) {
      fail(*init, "expected " + std::to_string(c.spec.q()) + " values, got " + std::to_string(v.size()));
    }
    c.init = ThetaVector(c.spec, std::span<const double>(v)).values();
  }
  return c;
}

Candidate load_model(const std::filesystem::path& path) { return parse_model(load_config(path)); }

TrueModelSpec parse_true_model(const ConfigFile& cfg) {
  const ConfigSection& top = cfg.sections.front();
  reject_unknown(top, {"lambda1", "lambda2", "b", "gamma"});
  for (const ConfigSection& s : cfg.sections) {
    if (!s.name.empty() && s.name != "xi" && s.name != "delta" && s.name != "eps" && s.name != "zeta") {
      throw Error(ErrorCode::ParseError, cfg.origin + ":" + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
  }
  TrueModelSpec m;
  m.lambda1 = parse_matrix(top.require("lambda1"));
  m.lambda2 = parse_matrix(top.require("lambda2"));
  m.gamma = parse_matrix(top.require("gamma"));
  m.xi = parse_sde(cfg, "xi");
  m.delta = parse_sde(cfg, "delta");
  m.eps = parse_sde(cfg, "eps");
  m.zeta = parse_sde(cfg, "zeta");
  const Index k2 = static_cast<Index>(m.zeta.dim());
  m.b = top.find("b") ? parse_matrix(*top.find("b")) : Matrix::Zero(k2, k2);
  m.validate();
  return m;
}

TrueModelSpec load_true_model(const std::filesystem::path& path) { return parse_true_model(load_config(path)); }

}  // namespace jdsem
