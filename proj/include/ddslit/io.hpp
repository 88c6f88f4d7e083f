#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ddslit/dynamics.hpp"
#include "ddslit/errors.hpp"
#include "ddslit/stats.hpp"

namespace ddslit {

/// Column order of record files. Lines starting with '#' are comments.
inline constexpr const char* kRecordHeader =
    "# ddslit records v1: index mode first_side t_first y_first second_side t_second y_second status";

/// Round-trip formatting of a double (17 significant digits; NaN as "nan").
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_record(const DetectionRecord& r) {
  std::ostringstream os;
  os << r.trajectory_index << ' ' << to_string(r.mode) << ' ' << to_string(r.first_side) << ' '
     << format_double(r.t_first) << ' ' << format_double(r.y_first) << ' ' << to_string(r.second_side) << ' '
     << format_double(r.t_second) << ' ' << format_double(r.y_second) << ' ' << to_string(r.status);
  return os.str();
}

inline void write_records(std::ostream& os, const std::vector<DetectionRecord>& records) {
  os << kRecordHeader << '\n';
  for (const auto& r : records) os << format_record(r) << '\n';
}

inline void write_records(const std::filesystem::path& path, const std::vector<DetectionRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_records(os, records);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

namespace detail {

inline double parse_double(const std::string& tok, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || errno == ERANGE) throw ParseError("bad number '" + tok + "'", line);
  return v;
}

inline Side parse_side(const std::string& tok, std::size_t line) {
  if (tok == "L") return Side::left;
  if (tok == "R") return Side::right;
  if (tok == "-") return Side::none;
  throw ParseError("bad side '" + tok + "'", line);
}

}  // namespace detail

inline DetectionRecord parse_record(const std::string& text, std::size_t line) {
  std::istringstream is(text);
  std::vector<std::string> tok;
  for (std::string t; is >> t;) tok.push_back(t);
  if (tok.size() != 9) throw ParseError("expected 9 fields, found " + std::to_string(tok.size()), line);
  DetectionRecord r;
  char* end = nullptr;
  r.trajectory_index = std::strtoull(tok[0].c_str(), &end, 10);
  if (end == tok[0].c_str() || *end != '\0') throw ParseError("bad index '" + tok[0] + "'", line);
  if (tok[1] == "collapse")
    r.mode = TrajectoryMode::collapse;
  else if (tok[1] == "free")
    r.mode = TrajectoryMode::free;
  else
    throw ParseError("bad mode '" + tok[1] + "'", line);
  r.first_side = detail::parse_side(tok[2], line);
  r.t_first = detail::parse_double(tok[3], line);
  r.y_first = detail::parse_double(tok[4], line);
  r.second_side = detail::parse_side(tok[5], line);
  r.t_second = detail::parse_double(tok[6], line);
  r.y_second = detail::parse_double(tok[7], line);
  if (tok[8] == "complete")
    r.status = RecordStatus::complete;
  else if (tok[8] == "censored")
    r.status = RecordStatus::censored;
  else if (tok[8] == "anomalous_same_side")
    r.status = RecordStatus::anomalous_same_side;
  else
    throw ParseError("bad status '" + tok[8] + "'", line);
  return r;
}

inline std::vector<DetectionRecord> read_records(std::istream& is) {
  std::vector<DetectionRecord> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(is, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_record(line, line_no));
  }
  return out;
}

inline std::vector<DetectionRecord> read_records(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_records(is);
}

/// One row per bin: left edge, right edge, count.
inline void write_histogram(std::ostream& os, const Histogram1D& h, const std::string& quantity) {
  os << "# quantity = " << quantity << '\n'
     << "# lo = " << format_double(h.lo()) << '\n'
     << "# hi = " << format_double(h.hi()) << '\n'
     << "# bins = " << h.bins() << '\n'
     << "# total = " << h.total << '\n'
     << "# out_of_range = " << h.out_of_range << '\n'
     << "left,right,count\n";
  for (std::size_t i = 0; i < h.bins(); ++i)
    os << format_double(h.edges[i]) << ',' << format_double(h.edges[i + 1]) << ',' << h.counts[i] << '\n';
}

inline void write_histogram(std::ostream& os, const Histogram2D& h, const std::string& quantity) {
  const std::size_t nx = h.x_edges.size() - 1, ny = h.y_edges.size() - 1;
  os << "# quantity = " << quantity << '\n'
     << "# x_lo = " << format_double(h.x_edges.front()) << '\n'
     << "# x_hi = " << format_double(h.x_edges.back()) << '\n'
     << "# x_bins = " << nx << '\n'
     << "# y_lo = " << format_double(h.y_edges.front()) << '\n'
     << "# y_hi = " << format_double(h.y_edges.back()) << '\n'
     << "# y_bins = " << ny << '\n'
     << "# total = " << h.total << '\n'
     << "# out_of_range = " << h.out_of_range << '\n'
     << "x_left,x_right,y_left,y_right,count\n";
  for (std::size_t ix = 0; ix < nx; ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy)
      os << format_double(h.x_edges[ix]) << ',' << format_double(h.x_edges[ix + 1]) << ','
         << format_double(h.y_edges[iy]) << ',' << format_double(h.y_edges[iy + 1]) << ',' << h.at(ix, iy) << '\n';
}

inline void write_path(std::ostream& os, const std::vector<PathSample>& path) {
  os << "t,x1,y1,x2,y2\n";
  for (const auto& s : path)
    os << format_double(s.t) << ',' << format_double(s.point.x1) << ',' << format_double(s.point.y1) << ','
       << format_double(s.point.x2) << ',' << format_double(s.point.y2) << '\n';
}

/// "key = value" report with decisions at the two standard levels.
inline void write_comparison(std::ostream& os, const std::string& label_a, const std::string& label_b,
                             const MarginalComparison& c) {
  os << "a = \"" << label_a << "\"\n"
     << "b = \"" << label_b << "\"\n"
     << "side = \"" << to_string(c.side) << "\"\n"
     << "observable = \"" << to_string(c.observable) << "\"\n"
     << "n_a = " << c.ks.n_a << '\n'
     << "n_b = " << c.ks.n_b << '\n'
     << "ks_statistic = " << format_double(c.ks.statistic) << '\n'
     << "p_value = " << format_double(c.ks.p_value) << '\n'
     << "reject_at_0.01 = " << (c.ks.rejects(0.01) ? "true" : "false") << '\n'
     << "reject_at_0.001 = " << (c.ks.rejects(0.001) ? "true" : "false") << '\n';
}

}  // namespace ddslit
