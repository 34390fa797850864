#pragma once

// File formats and run configuration.
//
// Matrices travel as CSV (17 significant digits, so doubles round-trip) or
// as a small binary container: magic "SSCM", u32 version, u32 rows, u32
// cols, then column-major little-endian f64 payload. Code matrices also have
// a compact sparse form: u32 K, u32 n, then per column a u32 count followed
// by (u32 index, f64 value) pairs.
//
// Configs are a strict key = value / [section] format: unknown keys are
// rejected (with a nearest-key suggestion), missing required keys are
// reported by name.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ssc/core.hpp"
#include "ssc/features.hpp"
#include "ssc/trainer.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace ssc {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& cell, const std::string& where) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' ||
                         *(end - 1) == '\r'))
    --end;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw IoError("cannot parse number '" + cell + "' at " + where);
  return value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV matrices

inline Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream cells(line);
    std::string cell;
    Index col = 0;
    while (std::getline(cells, cell, ',')) {
      ++col;
      const std::string where = path + ":" + std::to_string(line_no) +
                                " column " + std::to_string(col);
      const double v = detail::parse_double(cell, where);
      if (std::isnan(v)) throw IoError("NaN cell at " + where);
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("ragged CSV: line " + std::to_string(line_no) + " of '" +
                    path + "' has " + std::to_string(row.size()) +
                    " cells, expected " + std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("'" + path + "' contains no data");
  Matrix m(static_cast<Index>(rows.size()),
           static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return m;
}

inline void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Binary matrices

namespace detail {

constexpr char kMatrixMagic[4] = {'S', 'S', 'C', 'M'};
constexpr std::uint32_t kMatrixVersion = 1;

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t read_u32(std::istream& in, const std::string& what) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("truncated file while reading " + what);
  return v;
}

inline void write_f64(std::ostream& out, const double* data, size_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

}  // namespace detail

inline void write_matrix_bin(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(detail::kMatrixMagic, 4);
  detail::write_u32(out, detail::kMatrixVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(m.rows()));
  detail::write_u32(out, static_cast<std::uint32_t>(m.cols()));
  detail::write_f64(out, m.data(), static_cast<size_t>(m.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline Matrix read_matrix_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, detail::kMatrixMagic, 4) != 0)
    throw IoError("'" + path + "' is not a matrix file (bad magic)");
  const auto version = detail::read_u32(in, "version");
  if (version != detail::kMatrixVersion)
    throw IoError("'" + path + "' has unsupported version " +
                  std::to_string(version));
  const auto rows = detail::read_u32(in, "row count");
  const auto cols = detail::read_u32(in, "column count");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (in.gcount() !=
      static_cast<std::streamsize>(m.size() * sizeof(double)))
    throw IoError("'" + path + "' payload does not match its header shape");
  in.peek();
  if (!in.eof())
    throw IoError("'" + path + "' has trailing bytes beyond its header shape");
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (std::isnan(m(i, j)))
        throw IoError("NaN entry at (" + std::to_string(i) + "," +
                      std::to_string(j) + ") in '" + path + "'");
  return m;
}

enum class MatrixFormat { csv, bin };

inline MatrixFormat matrix_format_for(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".bin")
    return MatrixFormat::bin;
  return MatrixFormat::csv;
}

inline Matrix read_matrix(const std::string& path) {
  return matrix_format_for(path) == MatrixFormat::bin ? read_matrix_bin(path)
                                                      : read_matrix_csv(path);
}

inline void write_matrix(const std::string& path, const Matrix& m) {
  if (matrix_format_for(path) == MatrixFormat::bin)
    write_matrix_bin(path, m);
  else
    write_matrix_csv(path, m);
}

// ---------------------------------------------------------------------------
// Sparse code container

inline void write_codes_sparse(const std::string& path, const CodeMatrix& B) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  detail::write_u32(out, static_cast<std::uint32_t>(B.rows()));
  detail::write_u32(out, static_cast<std::uint32_t>(B.cols()));
  for (Index j = 0; j < B.cols(); ++j) {
    std::uint32_t count = 0;
    for (Index i = 0; i < B.rows(); ++i)
      if (B(i, j) != 0.0) ++count;
    detail::write_u32(out, count);
    for (Index i = 0; i < B.rows(); ++i) {
      if (B(i, j) == 0.0) continue;
      detail::write_u32(out, static_cast<std::uint32_t>(i));
      const double v = B(i, j);
      detail::write_f64(out, &v, 1);
    }
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline CodeMatrix read_codes_sparse(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  const auto K = detail::read_u32(in, "code dimension K");
  const auto n = detail::read_u32(in, "sample count n");
  CodeMatrix B = CodeMatrix::Zero(static_cast<Index>(K), static_cast<Index>(n));
  for (std::uint32_t j = 0; j < n; ++j) {
    const auto count = detail::read_u32(in, "entry count of column " +
                                                std::to_string(j));
    for (std::uint32_t e = 0; e < count; ++e) {
      const auto idx = detail::read_u32(in, "entry index");
      if (idx >= K)
        throw IoError("'" + path + "': index " + std::to_string(idx) +
                      " out of range in column " + std::to_string(j));
      double value = 0.0;
      in.read(reinterpret_cast<char*>(&value), sizeof value);
      if (!in) throw IoError("truncated file while reading entry value");
      B(static_cast<Index>(idx), static_cast<Index>(j)) = value;
    }
  }
  return B;
}

inline void write_histogram_csv(const std::string& path,
                                const std::vector<HistogramBin>& bins) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "bin_left,bin_right,count\n";
  for (const auto& b : bins)
    out << detail::format_double(b.left) << ','
        << detail::format_double(b.right) << ',' << b.count << '\n';
}

// ---------------------------------------------------------------------------
// Config files

namespace config {

struct ParsedFile {
  // Dotted keys ("train.lambda") -> raw value text plus source line.
  struct Entry {
    std::string value;
    size_t line = 0;
    bool consumed = false;
  };
  std::map<std::string, Entry> entries;
  std::string path;
};

inline std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline ParsedFile parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  ParsedFile file;
  file.path = path;
  std::string line, section;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = strip(line);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']')
        throw IoError(path + ":" + std::to_string(line_no) +
                      ": malformed section header");
      section = strip(text.substr(1, text.size() - 2));
      continue;
    }
    const size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": expected key = value");
    std::string key = strip(text.substr(0, eq));
    std::string value = strip(text.substr(eq + 1));
    if (key.empty())
      throw IoError(path + ":" + std::to_string(line_no) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    if (file.entries.count(key))
      throw IoError(path + ":" + std::to_string(line_no) + ": duplicate key '" +
                    key + "'");
    file.entries[key] = {value, line_no, false};
  }
  return file;
}

inline size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

class Reader {
 public:
  explicit Reader(ParsedFile file) : file_(std::move(file)) {}

  bool has(const std::string& key) {
    known_.push_back(key);
    return file_.entries.count(key) != 0;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    return fetch(key, fallback);
  }
  std::string require_string(const std::string& key) {
    known_.push_back(key);
    auto it = file_.entries.find(key);
    if (it == file_.entries.end())
      throw IoError(file_.path + ": missing required key '" + key + "'");
    it->second.consumed = true;
    return it->second.value;
  }
  double get_double(const std::string& key, double fallback) {
    const std::string raw = fetch(key, detail::format_double(fallback));
    return detail::parse_double(raw, file_.path + " key '" + key + "'");
  }
  double require_double(const std::string& key) {
    const std::string raw = require_string(key);
    return detail::parse_double(raw, file_.path + " key '" + key + "'");
  }
  long get_long(const std::string& key, long fallback) {
    const double v = get_double(key, static_cast<double>(fallback));
    return static_cast<long>(v);
  }
  bool get_bool(const std::string& key, bool fallback) {
    const std::string raw = fetch(key, fallback ? "true" : "false");
    if (raw == "true") return true;
    if (raw == "false") return false;
    throw IoError(file_.path + " key '" + key + "': expected true or false");
  }
  std::vector<long> get_long_list(const std::string& key,
                                  const std::vector<long>& fallback) {
    known_.push_back(key);
    auto it = file_.entries.find(key);
    if (it == file_.entries.end()) return fallback;
    it->second.consumed = true;
    std::vector<long> out;
    std::stringstream parts(it->second.value);
    std::string part;
    while (std::getline(parts, part, ','))
      out.push_back(static_cast<long>(detail::parse_double(
          strip(part), file_.path + " key '" + key + "'")));
    return out;
  }

  // Call after all keys were requested; reports unknown keys with the
  // closest known name.
  void finish() {
    for (const auto& [key, entry] : file_.entries) {
      if (entry.consumed) continue;
      std::string best;
      size_t best_dist = std::string::npos;
      for (const auto& candidate : known_) {
        const size_t dist = edit_distance(key, candidate);
        if (dist < best_dist) {
          best_dist = dist;
          best = candidate;
        }
      }
      std::string msg = file_.path + ":" + std::to_string(entry.line) +
                        ": unknown key '" + key + "'";
      if (!best.empty() && best_dist <= std::max<size_t>(best.size() / 2, 2))
        msg += " (did you mean '" + best + "'?)";
      throw IoError(msg);
    }
  }

 private:
  std::string fetch(const std::string& key, const std::string& fallback) {
    known_.push_back(key);
    auto it = file_.entries.find(key);
    if (it == file_.entries.end()) return fallback;
    it->second.consumed = true;
    return it->second.value;
  }

  ParsedFile file_;
  std::vector<std::string> known_;
};

}  // namespace config

struct RunConfig {
  std::string data_path;
  std::string timestamps_path;  // optional; enables spatio-temporal smoothing
  std::string output_dir = ".";
  TrainConfig train;
  double classifier_reg = 1.0;
};

inline RunConfig load_config(const std::string& path) {
  config::Reader reader(config::parse_file(path));
  RunConfig cfg;
  // Required keys are checked after the unknown-key scan so that a
  // misspelled key is reported as such, with a suggestion.
  cfg.data_path = reader.get_string("data", "");
  cfg.timestamps_path = reader.get_string("timestamps", "");
  cfg.output_dir = reader.get_string("output_dir", ".");

  cfg.train.K = static_cast<int>(reader.get_long("train.K", -1));
  cfg.train.lambda = reader.get_double(
      "train.lambda", std::numeric_limits<double>::quiet_NaN());

  cfg.train.kappa = reader.get_double("train.kappa", 0.0);
  cfg.train.eta = reader.get_double("train.eta", 0.0);
  cfg.train.gamma_monitor = reader.get_double("train.gamma_monitor", 0.0);
  cfg.train.max_outer_iters =
      static_cast<int>(reader.get_long("train.max_outer_iters", 100));
  cfg.train.rel_err_tol = reader.get_double("train.rel_err_tol", 1e-2);
  const std::string coder = reader.get_string("train.coder", "marginal");
  if (coder == "marginal")
    cfg.train.coder = Coder::marginal;
  else if (coder == "lasso")
    cfg.train.coder = Coder::lasso;
  else
    throw IoError(path + ": train.coder must be 'marginal' or 'lasso'");
  const std::string smoothing = reader.get_string("train.smoothing", "feature");
  if (smoothing == "none")
    cfg.train.smoothing = Smoothing::none;
  else if (smoothing == "feature")
    cfg.train.smoothing = Smoothing::feature;
  else if (smoothing == "spatiotemporal")
    cfg.train.smoothing = Smoothing::spatiotemporal;
  else if (smoothing == "temporal_only")
    cfg.train.smoothing = Smoothing::temporal_only;
  else
    throw IoError(path +
                  ": train.smoothing must be none, feature, spatiotemporal "
                  "or temporal_only");
  const std::string mr_mode =
      reader.get_string("train.mr_threshold", "l1_budget");
  if (mr_mode == "l1_budget")
    cfg.train.mr_threshold = MrThreshold::l1_budget;
  else if (mr_mode == "hard")
    cfg.train.mr_threshold = MrThreshold::hard;
  else
    throw IoError(path + ": train.mr_threshold must be 'l1_budget' or 'hard'");
  cfg.train.hard_level = reader.get_double("train.hard_level", 0.0);
  cfg.train.lasso_tol = reader.get_double("train.lasso_tol", 1e-8);
  cfg.train.lasso_max_iter =
      static_cast<int>(reader.get_long("train.lasso_max_iter", 2000));
  cfg.train.seed =
      static_cast<std::uint64_t>(reader.get_long("train.seed", 0));

  cfg.train.kernel.family = kernel_family_from_string(
      reader.get_string("kernel.family", "tricube"));
  cfg.train.kernel.bandwidth_h1 = reader.get_double("kernel.h1", 1.0);
  const double h2 = reader.get_double("kernel.h2", 0.0);
  const std::string temporal_family =
      reader.get_string("kernel.temporal_family", "tricube");
  if (h2 > 0.0)
    cfg.train.kernel.temporal =
        TemporalKernel{kernel_family_from_string(temporal_family), h2};
  cfg.train.kernel.temporal_only =
      reader.get_bool("kernel.temporal_only", false);
  if (cfg.train.kernel.temporal_only &&
      cfg.train.smoothing == Smoothing::feature)
    cfg.train.smoothing = Smoothing::temporal_only;

  cfg.classifier_reg = reader.get_double("classifier.reg", 1.0);
  reader.finish();

  if (cfg.data_path.empty())
    throw IoError(path + ": missing required key 'data'");
  if (cfg.train.K == -1)
    throw IoError(path + ": missing required key 'train.K'");
  if (std::isnan(cfg.train.lambda))
    throw IoError(path + ": missing required key 'train.lambda'");

  if (cfg.train.smoothing == Smoothing::spatiotemporal ||
      cfg.train.smoothing == Smoothing::temporal_only) {
    if (!cfg.train.kernel.temporal)
      throw IoError(path +
                    ": temporal smoothing requested but kernel.h2 is not set");
    cfg.train.kernel.temporal_only =
        cfg.train.smoothing == Smoothing::temporal_only;
  }
  cfg.train.validate();
  return cfg;
}

inline void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "data = \"" << cfg.data_path << "\"\n";
  if (!cfg.timestamps_path.empty())
    out << "timestamps = \"" << cfg.timestamps_path << "\"\n";
  out << "output_dir = \"" << cfg.output_dir << "\"\n\n";
  out << "[train]\n";
  out << "K = " << cfg.train.K << "\n";
  out << "lambda = " << detail::format_double(cfg.train.lambda) << "\n";
  out << "kappa = " << detail::format_double(cfg.train.kappa) << "\n";
  out << "eta = " << detail::format_double(cfg.train.eta) << "\n";
  out << "gamma_monitor = " << detail::format_double(cfg.train.gamma_monitor)
      << "\n";
  out << "max_outer_iters = " << cfg.train.max_outer_iters << "\n";
  out << "rel_err_tol = " << detail::format_double(cfg.train.rel_err_tol)
      << "\n";
  out << "coder = \"" << to_string(cfg.train.coder) << "\"\n";
  out << "smoothing = \"" << to_string(cfg.train.smoothing) << "\"\n";
  out << "mr_threshold = \""
      << (cfg.train.mr_threshold == MrThreshold::l1_budget ? "l1_budget"
                                                           : "hard")
      << "\"\n";
  out << "hard_level = " << detail::format_double(cfg.train.hard_level) << "\n";
  out << "lasso_tol = " << detail::format_double(cfg.train.lasso_tol) << "\n";
  out << "lasso_max_iter = " << cfg.train.lasso_max_iter << "\n";
  out << "seed = " << cfg.train.seed << "\n\n";
  out << "[kernel]\n";
  out << "family = \"" << to_string(cfg.train.kernel.family) << "\"\n";
  out << "h1 = " << detail::format_double(cfg.train.kernel.bandwidth_h1)
      << "\n";
  if (cfg.train.kernel.temporal) {
    out << "temporal_family = \"" << to_string(cfg.train.kernel.temporal->family)
        << "\"\n";
    out << "h2 = " << detail::format_double(cfg.train.kernel.temporal->bandwidth_h2)
        << "\n";
  }
  out << "temporal_only = "
      << (cfg.train.kernel.temporal_only ? "true" : "false") << "\n\n";
  out << "[classifier]\n";
  out << "reg = " << detail::format_double(cfg.classifier_reg) << "\n";
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace ssc
