#include "ismd/csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

namespace ismd {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return {buf, end};
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Matrix read_csv_matrix(const std::string& path, std::vector<std::string>* comments) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      if (comments) comments->push_back(trim(t.substr(1)));
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(t);
    std::string field;
    while (std::getline(ss, field, ',')) {
      const std::string f = trim(field);
      double v = 0.0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size()) {
        throw ValidationError(path + ":" + std::to_string(lineno) + ": not a number: '" + f + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(rows.front().size()) + " fields, found " +
                            std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  Matrix out(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = rows[i][j];
  return out;
}

void write_csv_row(std::ostream& os, const Eigen::Ref<const Vector>& row) {
  for (Index j = 0; j < row.size(); ++j) {
    if (j) os << ',';
    os << format_double(row[j]);
  }
  os << '\n';
}

}  // namespace ismd
