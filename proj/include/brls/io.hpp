#pragma once

#include "brls/problem.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace brls::io {

/// Matrix file format: plain text, one row per line, comma-separated decimal
/// literals, no header. A vector is a single row; an empty file is the 0x0
/// matrix. Values are written with 17 significant digits so load(save(M))
/// round-trips exactly.
inline std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Eigen::MatrixXd load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.peek() == std::char_traits<char>::eof() && rows.empty()) break;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      const std::string token = line.substr(pos, comma - pos);
      try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        while (used < token.size() && std::isspace(static_cast<unsigned char>(token[used]))) ++used;
        if (used != token.size()) throw std::invalid_argument(token);
        row.push_back(v);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                 ": malformed value '" + token + "'");
      }
      pos = comma + 1;
      if (comma == line.size()) break;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": ragged row (" +
                               std::to_string(row.size()) + " vs " +
                               std::to_string(rows.front().size()) + " columns)");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd M(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) M(i, j) = rows[i][j];
  return M;
}

/// A vector file is a one-row matrix.
inline Eigen::VectorXd load_vector(const std::string& path) {
  const Eigen::MatrixXd M = load_matrix(path);
  if (M.rows() == 0) return Eigen::VectorXd(0);
  if (M.rows() != 1)
    throw std::runtime_error(path + ": expected a one-row vector, got " +
                             std::to_string(M.rows()) + " rows");
  return M.row(0).transpose();
}

inline void save_matrix(const std::string& path, const Eigen::MatrixXd& M) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
}

inline void save_vector(const std::string& path, const Eigen::VectorXd& v) {
  save_matrix(path, v.transpose());
}

/// key = value lines; '#' starts a comment, blank lines are skipped.
class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile parse(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    KeyValueFile kv;
    kv.dir_ = std::filesystem::path(path).parent_path().string();
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const auto trim = [](std::string s) {
        const auto issp = [](char c) { return std::isspace(static_cast<unsigned char>(c)); };
        while (!s.empty() && issp(s.front())) s.erase(s.begin());
        while (!s.empty() && issp(s.back())) s.pop_back();
        return s;
      };
      if (trim(line).empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                 ": expected key = value");
      kv.values_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error("missing key '" + key + "'");
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key) const { return std::stod(get(key)); }
  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }
  long long get_int(const std::string& key) const { return std::stoll(get(key)); }
  long long get_int_or(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  /// Path values are resolved relative to the manifest's directory.
  std::string get_path(const std::string& key) const {
    const std::filesystem::path p(get(key));
    if (p.is_absolute() || dir_.empty()) return p.string();
    return (std::filesystem::path(dir_) / p).string();
  }

 private:
  std::map<std::string, std::string> values_;
  std::string dir_;
};

/// Instance manifest keys:
///   residual = affine | phase_retrieval
///   A = <matrix file>            b0 = <vector file>   (affine; optional, default 0)
///                                b  = <vector file>   (phase_retrieval)
///   C = <matrix file>
///   feasible = box | ball
///   lo = <vector file>, hi = <vector file>            (box)
///   center = <vector file>, radius = <number>         (ball)
inline BrlsInstance load_instance(const std::string& manifest_path) {
  const KeyValueFile kv = KeyValueFile::parse(manifest_path);

  const Eigen::MatrixXd A = load_matrix(kv.get_path("A"));
  const std::string residual = kv.get_or("residual", "affine");
  ResidualMap F = [&] {
    if (residual == "affine") {
      Eigen::VectorXd b0 = kv.has("b0") ? load_vector(kv.get_path("b0"))
                                        : Eigen::VectorXd(Eigen::VectorXd::Zero(A.rows()));
      return ResidualMap::affine(A, std::move(b0));
    }
    if (residual == "phase_retrieval")
      return ResidualMap::phase_retrieval(A, load_vector(kv.get_path("b")));
    throw std::runtime_error("unknown residual variant '" + residual + "'");
  }();

  Eigen::MatrixXd C = load_matrix(kv.get_path("C"));
  if (C.size() == 0) C = Eigen::MatrixXd(A.rows(), 0);

  const std::string feasible = kv.get_or("feasible", "box");
  FeasibleSet X = [&] {
    if (feasible == "box")
      return FeasibleSet::box(load_vector(kv.get_path("lo")), load_vector(kv.get_path("hi")));
    if (feasible == "ball")
      return FeasibleSet::ball(load_vector(kv.get_path("center")), kv.get_double("radius"));
    throw std::runtime_error("unknown feasible set '" + feasible + "'");
  }();

  return BrlsInstance(std::move(F), std::move(C), std::move(X));
}

}  // namespace brls::io
