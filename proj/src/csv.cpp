#include "jdsem/csv.hpp"

#include "jdsem/error.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace jdsem {

namespace {

using Index = Eigen::Index;

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(std::string s, double& out) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && (s[start] == ' ' || s[start] == '\t')) ++start;
  const char* first = s.data() + start;
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last && std::isfinite(out);
}

}  // namespace

std::string format_real(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), ec == std::errc() ? ptr : buf.data());
}

void write_path_csv(const PathData& path, std::ostream& out) {
  const Matrix& x = path.x();
  out << 't';
  for (Index j = 0; j < x.cols(); ++j) out << ",X" << (j + 1);
  out << '\n';
  std::string line;
  for (Index i = 0; i < x.rows(); ++i) {
    line = format_real(static_cast<double>(i) * path.h());
    for (Index j = 0; j < x.cols(); ++j) {
      line += ',';
      line += format_real(x(i, j));
    }
    line += '\n';
    out << line;
  }
}

void write_path_csv(const PathData& path, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + file.string() + "'");
  write_path_csv(path, out);
  if (!out) throw Error(ErrorCode::IoError, "write to '" + file.string() + "' failed");
}

PathData read_path_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::TooFewRows, "empty file");
  const std::vector<std::string> header = split_cells(line);
  std::string first = header.empty() ? "" : header.front();
  while (!first.empty() && (first.back() == '\r' || first.back() == ' ')) first.pop_back();
  if (header.size() < 2 || (first != "t" && first != "T")) {
    throw Error(ErrorCode::MalformedRow, "line 1: header must be 't,X1,...,Xp'");
  }
  const std::size_t p = header.size() - 1;

  std::vector<double> times;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_cells(line);
    if (cells.size() != p + 1) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": expected " + std::to_string(p + 1) +
                                               " cells, got " + std::to_string(cells.size()));
    }
    double v = 0.0;
    for (std::size_t c = 0; c <= p; ++c) {
      if (!parse_double(cells[c], v)) {
        throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": bad number '" + cells[c] + "'");
      }
      (c == 0 ? times : values).push_back(v);
    }
  }
  if (times.size() < 3) throw Error(ErrorCode::TooFewRows, "need at least 3 observations (n >= 2)");

  const std::size_t n = times.size() - 1;
  const double h = (times.back() - times.front()) / static_cast<double>(n);
  if (!(h > 0.0)) throw Error(ErrorCode::NonUniformGrid, "time stamps must be strictly increasing");
  for (std::size_t i = 1; i <= n; ++i) {
    const double dt = times[i] - times[i - 1];
    if (std::abs(dt - h) > 1e-9 * h) {
      throw Error(ErrorCode::NonUniformGrid, "step " + std::to_string(i) + " is " + format_real(dt) +
                                                 ", grid step is " + format_real(h));
    }
  }
  Matrix x(static_cast<Index>(n + 1), static_cast<Index>(p));
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(static_cast<Index>(i), static_cast<Index>(j)) = values[i * p + j];
  }
  return PathData(h, std::move(x));
}

PathData ingest_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + file.string() + "'");
  return read_path_csv(in);
}

std::vector<double> read_theta_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + file.string() + "'");
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    for (char& ch : line) {
      if (ch == ',' || ch == '\t' || ch == '\r') ch = ' ';
    }
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      double v = 0.0;
      if (!parse_double(tok, v)) {
        throw Error(ErrorCode::ParseError, file.string() + ":" + std::to_string(line_no) + ": bad number '" + tok + "'");
      }
      out.push_back(v);
    }
  }
  return out;
}

}  // namespace jdsem
