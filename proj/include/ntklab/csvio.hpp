#pragma once

/// @file csvio.hpp
/// Deterministic on-disk formats: CSV with shortest round-trip numbers,
/// little-endian binary Gram/parameter blobs, and atomic file replacement
/// (write to a temp name, then rename) so partial writes never surface.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntklab/common.hpp"
#include "ntklab/kernel.hpp"
#include "ntklab/network.hpp"

namespace ntklab {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

inline void atomic_write_bytes(const std::string& path, const void* data,
                               std::size_t len) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    if (!out) throw std::runtime_error("short write: " + tmp.string());
  }
  fs::rename(tmp, target);
}

inline void atomic_write_text(const std::string& path, const std::string& text) {
  atomic_write_bytes(path, text.data(), text.size());
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// CSV text for a matrix, one data row per line, shortest round-trip floats.
inline std::string csv_of(const std::vector<std::string>& header, const Mat& values) {
  if (header.size() != static_cast<std::size_t>(values.cols()))
    throw std::invalid_argument("csv_of: header width mismatch");
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c) out += ',';
      out += format_double(values(r, c));
    }
    out += '\n';
  }
  return out;
}

inline void write_matrix_csv(const std::string& path,
                             const std::vector<std::string>& header,
                             const Mat& values) {
  atomic_write_text(path, csv_of(header, values));
}

inline void write_vector_csv(const std::string& path, const std::string& name,
                             const Vec& values) {
  write_matrix_csv(path, {name}, Mat(values));
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw std::invalid_argument("csv: no column named '" + name + "'");
  }

  Vec numeric_column(const std::string& name) const {
    const int c = column(name);
    Vec v(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string& tok = rows[r][static_cast<std::size_t>(c)];
      double x = 0.0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (res.ec != std::errc())
        throw std::invalid_argument("csv: non-numeric value '" + tok +
                                    "' in column '" + name + "'");
      v(static_cast<Eigen::Index>(r)) = x;
    }
    return v;
  }
};

inline CsvTable read_csv_table(const std::string& path) {
  const std::string text = read_text(path);
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    fields.push_back(cur);
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != t.header.size())
        throw std::invalid_argument("csv: ragged row in " + path);
      t.rows.push_back(std::move(fields));
    }
  }
  return t;
}

inline Mat read_matrix_csv(const std::string& path) {
  const CsvTable t = read_csv_table(path);
  Mat m(static_cast<Eigen::Index>(t.rows.size()),
        static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      const std::string& tok = t.rows[r][c];
      double x = 0.0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (res.ec != std::errc())
        throw std::invalid_argument("csv: non-numeric value '" + tok + "' in " + path);
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x;
    }
  return m;
}

namespace detail {

inline void put_u64(std::string& buf, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  buf.append(b, 8);
}

inline void put_f64(std::string& buf, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  buf.append(b, 8);
}

class ByteReader {
 public:
  ByteReader(const std::string& data, const std::string& what)
      : data_(data), what_(what) {}

  std::string take(std::size_t len) {
    need(len);
    std::string out = data_.substr(pos_, len);
    pos_ += len;
    return out;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, data_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }
  double f64() {
    need(8);
    double v;
    std::memcpy(&v, data_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }
  bool exhausted() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t len) const {
    if (pos_ + len > data_.size())
      throw std::runtime_error("truncated binary file: " + what_);
  }
  const std::string& data_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Binary Gram sidecar: magic "NTKGRAM1", u64 n, f64 t, u64 tag, then n*n
/// row-major doubles of H (the unnormalized matrix; G = H/n on load).
inline void write_gram_binary(const std::string& path, const GramPair& g) {
  std::string buf;
  buf.reserve(32 + static_cast<std::size_t>(g.H.size()) * 8);
  buf += "NTKGRAM1";
  detail::put_u64(buf, static_cast<std::uint64_t>(g.H.rows()));
  detail::put_f64(buf, g.t);
  detail::put_u64(buf, static_cast<std::uint64_t>(g.tag));
  for (Eigen::Index r = 0; r < g.H.rows(); ++r)
    for (Eigen::Index c = 0; c < g.H.cols(); ++c) detail::put_f64(buf, g.H(r, c));
  atomic_write_bytes(path, buf.data(), buf.size());
}

inline GramPair read_gram_binary(const std::string& path) {
  const std::string data = read_text(path);
  detail::ByteReader rd(data, path);
  if (rd.take(8) != "NTKGRAM1")
    throw std::runtime_error("bad magic in Gram file: " + path);
  const auto n = static_cast<Eigen::Index>(rd.u64());
  const double t = rd.f64();
  const auto tag = static_cast<KernelTag>(rd.u64());
  Mat H(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) H(r, c) = rd.f64();
  if (!rd.exhausted()) throw std::runtime_error("trailing bytes in " + path);
  return make_gram_pair(H, t, tag);
}

struct Checkpoint {
  int m = 0;
  int d = 0;
  InitScheme scheme = InitScheme::iid;
  std::uint64_t seed = 0;
  double t = 0.0;
  Vec theta;
};

/// Binary parameter checkpoint: magic "NTKTHTA1", u64 version, u64 m, u64 d,
/// u64 scheme, u64 seed, f64 t, u64 p, then p doubles (flat layout).
inline void write_checkpoint(const std::string& path, const Checkpoint& ck) {
  const auto p = static_cast<std::uint64_t>(ck.theta.size());
  std::string buf;
  buf.reserve(64 + p * 8);
  buf += "NTKTHTA1";
  detail::put_u64(buf, 1);
  detail::put_u64(buf, static_cast<std::uint64_t>(ck.m));
  detail::put_u64(buf, static_cast<std::uint64_t>(ck.d));
  detail::put_u64(buf, static_cast<std::uint64_t>(ck.scheme));
  detail::put_u64(buf, ck.seed);
  detail::put_f64(buf, ck.t);
  detail::put_u64(buf, p);
  for (Eigen::Index i = 0; i < ck.theta.size(); ++i)
    detail::put_f64(buf, ck.theta(i));
  atomic_write_bytes(path, buf.data(), buf.size());
}

inline Checkpoint read_checkpoint(const std::string& path) {
  const std::string data = read_text(path);
  detail::ByteReader rd(data, path);
  if (rd.take(8) != "NTKTHTA1")
    throw std::runtime_error("bad magic in checkpoint: " + path);
  const std::uint64_t version = rd.u64();
  if (version != 1)
    throw std::runtime_error("unsupported checkpoint version in " + path);
  Checkpoint ck;
  ck.m = static_cast<int>(rd.u64());
  ck.d = static_cast<int>(rd.u64());
  ck.scheme = static_cast<InitScheme>(rd.u64());
  ck.seed = rd.u64();
  ck.t = rd.f64();
  const auto p = static_cast<Eigen::Index>(rd.u64());
  const Eigen::Index expect =
      static_cast<Eigen::Index>(ck.m) * ck.d + 2 * ck.m + 1;
  if (p != expect)
    throw std::runtime_error("checkpoint parameter count mismatch in " + path);
  ck.theta.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) ck.theta(i) = rd.f64();
  if (!rd.exhausted()) throw std::runtime_error("trailing bytes in " + path);
  return ck;
}

}  // namespace ntklab
