#pragma once

#include "lrvf/learners.hpp"
#include "lrvf/tensor.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

namespace lrvf {

// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) fail("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail("parse_double: bad number '" + s + "'");
  return v;
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

inline void write_matrix_rows(std::ostream& os, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) os << ',';
      os << format_double(m(r, c));
    }
    os << '\n';
  }
}

inline Mat read_matrix_rows(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  Mat m(rows, cols);
  std::string line;
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!std::getline(is, line)) fail("factor format: unexpected end of matrix block");
    const std::vector<std::string> cells = split(line, ',');
    if (static_cast<Eigen::Index>(cells.size()) != cols)
      fail("factor format: wrong number of columns in matrix row");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = parse_double(cells[c]);
  }
  return m;
}

}  // namespace detail

// Text format: header `dims=<c1,c2,...> rank=<K>`, then one factor matrix
// per block (C_d rows of K comma-separated reals), blocks separated by a
// blank line.
inline void write_factor_set(std::ostream& os, const FactorSet& f) {
  f.validate();
  const std::vector<int> dims = f.dims();
  os << "dims=";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i > 0) os << ',';
    os << dims[i];
  }
  os << " rank=" << f.rank << '\n';
  for (const Mat& m : f.factors) {
    detail::write_matrix_rows(os, m);
    os << '\n';
  }
}

inline FactorSet read_factor_set(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) fail("factor format: missing header");
  const auto dims_pos = header.find("dims=");
  const auto rank_pos = header.find(" rank=");
  if (dims_pos != 0 || rank_pos == std::string::npos) fail("factor format: malformed header");
  const std::string dims_str = header.substr(5, rank_pos - 5);
  FactorSet f;
  f.rank = std::stoi(header.substr(rank_pos + 6));
  std::vector<int> dims;
  for (const std::string& d : detail::split(dims_str, ',')) dims.push_back(std::stoi(d));
  std::string blank;
  for (int c : dims) {
    f.factors.push_back(detail::read_matrix_rows(is, c, f.rank));
    std::getline(is, blank);  // block separator
  }
  f.validate();
  return f;
}

inline std::string factor_set_to_string(const FactorSet& f) {
  std::ostringstream os;
  write_factor_set(os, f);
  return os.str();
}

inline FactorSet factor_set_from_string(const std::string& s) {
  std::istringstream is(s);
  return read_factor_set(is);
}

// Raw tensors share the header shape with rank=0 (factor sets always have
// rank >= 1). The single block is the natural matrix view with the last
// index fastest: one row per leading multi-index, last-dimension columns.
inline void write_dense_tensor(std::ostream& os, const DenseTensor& t) {
  require(t.order() >= 1, "tensor format: empty dims");
  os << "dims=";
  for (std::size_t i = 0; i < t.dims.size(); ++i) {
    if (i > 0) os << ',';
    os << t.dims[i];
  }
  os << " rank=0\n";
  const Eigen::Index cols = t.dims.back();
  detail::write_matrix_rows(
      os, Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
              t.data.data(), t.size() / cols, cols));
}

inline DenseTensor read_dense_tensor(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) fail("tensor format: missing header");
  const auto dims_pos = header.find("dims=");
  const auto rank_pos = header.find(" rank=");
  if (dims_pos != 0 || rank_pos == std::string::npos) fail("tensor format: malformed header");
  if (std::stoi(header.substr(rank_pos + 6)) != 0)
    fail("tensor format: rank must be 0 for raw tensors");
  std::vector<int> dims;
  for (const std::string& d : detail::split(header.substr(5, rank_pos - 5), ','))
    dims.push_back(std::stoi(d));
  DenseTensor t(dims);
  const Eigen::Index cols = dims.back();
  const Mat m = detail::read_matrix_rows(is, t.size() / cols, cols);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      t.data.data(), m.rows(), m.cols()) = m;
  return t;
}

// Serialize a value model body. QTable is written as a single table block;
// matrix/tensor models reuse the factor text format (the matrix pair is
// stored as the order-2 factor set [L, R^T]).
inline void write_model_body(std::ostream& os, const ValueModel& model) {
  if (const QTable* q = std::get_if<QTable>(&model)) {
    os << "table=" << q->values.rows() << ',' << q->values.cols() << '\n';
    detail::write_matrix_rows(os, q->values);
    return;
  }
  if (const MatrixFactors* m = std::get_if<MatrixFactors>(&model)) {
    FactorSet f;
    f.rank = m->rank();
    f.factors = {m->left, m->right.transpose()};
    write_factor_set(os, f);
    return;
  }
  write_factor_set(os, std::get<TensorFactors>(model).factors);
}

inline ValueModel read_model_body(std::istream& is, ModelKind kind, int num_state_dims) {
  if (kind == ModelKind::qtable) {
    std::string header;
    if (!std::getline(is, header) || header.rfind("table=", 0) != 0)
      fail("model format: missing table header");
    const std::vector<std::string> dims = detail::split(header.substr(6), ',');
    require(dims.size() == 2, "model format: table header needs rows,cols");
    return QTable{detail::read_matrix_rows(is, std::stoll(dims[0]), std::stoll(dims[1]))};
  }
  FactorSet f = read_factor_set(is);
  if (kind == ModelKind::matrix) {
    require(f.factors.size() == 2, "model format: matrix model needs exactly two factors");
    return MatrixFactors{f.factors[0], f.factors[1].transpose()};
  }
  TensorFactors t;
  t.factors = std::move(f);
  t.num_state_dims = num_state_dims;
  return t;
}

}  // namespace lrvf
