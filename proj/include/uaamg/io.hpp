#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "uaamg/error.hpp"
#include "uaamg/partition.hpp"
#include "uaamg/sparse.hpp"

namespace uaamg {

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

/// Next line that is neither empty nor a comment.
inline bool next_data_line(std::istream& in, std::string& line, char comment) {
  while (std::getline(in, line)) {
    const auto p = line.find_first_not_of(" \t\r");
    if (p == std::string::npos || line[p] == comment) continue;
    return true;
  }
  return false;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  return f;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Matrix Market coordinate format

inline SparseMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("matrix market: empty input");
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || detail::lower(object) != "matrix" || detail::lower(format) != "coordinate")
    throw IoError("matrix market: expected a coordinate matrix header");
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (field != "real" && field != "integer" && field != "pattern" && field != "double")
    throw IoError("matrix market: unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw IoError("matrix market: unsupported symmetry '" + symmetry + "'");
  const bool pattern = field == "pattern";
  const bool symmetric = symmetry == "symmetric";

  if (!detail::next_data_line(in, line, '%')) throw IoError("matrix market: missing size line");
  std::istringstream ss(line);
  long long rows = -1, cols = -1, entries = -1;
  if (!(ss >> rows >> cols >> entries) || rows < 0 || cols < 0 || entries < 0)
    throw IoError("matrix market: malformed size line");
  if (symmetric && rows != cols) throw IoError("matrix market: symmetric matrix must be square");

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(symmetric ? 2 * entries : entries));
  for (long long k = 0; k < entries; ++k) {
    if (!detail::next_data_line(in, line, '%')) throw IoError("matrix market: expected " + std::to_string(entries) + " entries");
    std::istringstream es(line);
    long long i = 0, j = 0;
    double v = 1.0;
    if (!(es >> i >> j) || (!pattern && !(es >> v))) throw IoError("matrix market: malformed entry '" + line + "'");
    if (i < 1 || j < 1 || i > rows || j > cols) throw IoError("matrix market: entry index out of range");
    t.push_back({static_cast<index_t>(i - 1), static_cast<index_t>(j - 1), v});
    if (symmetric && i != j) t.push_back({static_cast<index_t>(j - 1), static_cast<index_t>(i - 1), v});
  }
  return SparseMatrix::from_triplets(static_cast<index_t>(rows), static_cast<index_t>(cols), t);
}

inline SparseMatrix read_matrix_market(const std::string& path) {
  auto f = detail::open_in(path);
  return read_matrix_market(f);
}

/// Writes the lower triangle with a symmetric header when `symmetric` is
/// set (A must then be symmetric), all entries otherwise.
inline void write_matrix_market(std::ostream& out, const SparseMatrix& A, bool symmetric) {
  if (symmetric && !A.is_symmetric(0.0)) throw InvalidArgument("write_matrix_market: matrix is not symmetric");
  index_t count = 0;
  for (index_t i = 0; i < A.rows(); ++i)
    for (index_t j : A.row_cols(i))
      if (!symmetric || j <= i) ++count;
  out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << '\n';
  out << A.rows() << ' ' << A.cols() << ' ' << count << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (index_t i = 0; i < A.rows(); ++i) {
    const auto cols = A.row_cols(i);
    const auto vals = A.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (!symmetric || cols[k] <= i) out << i + 1 << ' ' << cols[k] + 1 << ' ' << vals[k] << '\n';
  }
}

inline void write_matrix_market(const std::string& path, const SparseMatrix& A, bool symmetric) {
  auto f = detail::open_out(path);
  write_matrix_market(f, A, symmetric);
}

// ---------------------------------------------------------------------------
// Graph problem text format: "graph n m s", m lines "i j w", s lines "j wD".

inline GraphProblem read_graph(std::istream& in) {
  std::string line;
  if (!detail::next_data_line(in, line, '#')) throw IoError("graph: empty input");
  std::istringstream hs(line);
  std::string tag;
  long long n = -1, m = -1, s = -1;
  if (!(hs >> tag >> n >> m >> s) || tag != "graph" || n < 0 || m < 0 || s < 0)
    throw IoError("graph: expected header 'graph n m s'");
  std::vector<Edge> edges;
  std::vector<BoundaryWeight> boundary;
  for (long long k = 0; k < m; ++k) {
    long long i = 0, j = 0;
    double w = 0.0;
    if (!detail::next_data_line(in, line, '#')) throw IoError("graph: expected " + std::to_string(m) + " edges");
    std::istringstream es(line);
    if (!(es >> i >> j >> w) || i < 0 || j < 0) throw IoError("graph: malformed edge '" + line + "'");
    edges.push_back({static_cast<index_t>(i), static_cast<index_t>(j), w});
  }
  for (long long k = 0; k < s; ++k) {
    long long j = 0;
    double w = 0.0;
    if (!detail::next_data_line(in, line, '#')) throw IoError("graph: expected " + std::to_string(s) + " boundary weights");
    std::istringstream es(line);
    if (!(es >> j >> w) || j < 0) throw IoError("graph: malformed boundary line '" + line + "'");
    boundary.push_back({static_cast<index_t>(j), w});
  }
  try {
    return GraphProblem(static_cast<index_t>(n), std::move(edges), std::move(boundary));
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("graph: ") + e.what());
  }
}

inline GraphProblem read_graph(const std::string& path) {
  auto f = detail::open_in(path);
  return read_graph(f);
}

inline void write_graph(std::ostream& out, const GraphProblem& p) {
  out << "graph " << p.n() << ' ' << p.edges().size() << ' ' << p.boundary().size() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& e : p.edges()) out << e.i << ' ' << e.j << ' ' << e.weight << '\n';
  for (const auto& b : p.boundary()) out << b.vertex << ' ' << b.weight << '\n';
}

// ---------------------------------------------------------------------------
// Aggregation text format: "agg n_fine n_coarse", then one index per line.

/// Labels are kept; each aggregate is represented by its smallest member.
inline Aggregation read_aggregation(std::istream& in) {
  std::string line;
  if (!detail::next_data_line(in, line, '#')) throw IoError("aggregation: empty input");
  std::istringstream hs(line);
  std::string tag;
  long long nf = -1, nc = -1;
  if (!(hs >> tag >> nf >> nc) || tag != "agg" || nf < 0 || nc < 0)
    throw IoError("aggregation: expected header 'agg n_fine n_coarse'");
  std::vector<index_t> v2a(static_cast<std::size_t>(nf));
  std::vector<index_t> rep(static_cast<std::size_t>(nc), npos);
  for (long long i = 0; i < nf; ++i) {
    long long a = -1;
    if (!(in >> a)) throw IoError("aggregation: expected " + std::to_string(nf) + " indices");
    if (a < 0 || a >= nc) throw IoError("aggregation: index out of range at line " + std::to_string(i + 2));
    v2a[static_cast<std::size_t>(i)] = static_cast<index_t>(a);
    auto& r = rep[static_cast<std::size_t>(a)];
    if (r == npos) r = static_cast<index_t>(i);
  }
  if (std::find(rep.begin(), rep.end(), npos) != rep.end()) throw IoError("aggregation: empty aggregate");
  return Aggregation(std::move(v2a), std::move(rep));
}

inline Aggregation read_aggregation(const std::string& path) {
  auto f = detail::open_in(path);
  return read_aggregation(f);
}

inline void write_aggregation(std::ostream& out, const Aggregation& agg) {
  out << "agg " << agg.n_fine() << ' ' << agg.n_coarse() << '\n';
  for (index_t a : agg.vertex_to_agg()) out << a << '\n';
}

inline void write_aggregation(const std::string& path, const Aggregation& agg) {
  auto f = detail::open_out(path);
  write_aggregation(f, agg);
}

} // namespace uaamg
