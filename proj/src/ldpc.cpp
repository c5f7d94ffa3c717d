#include "cfota/ldpc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace cfota::ldpc {

ParityCheckMatrix ParityCheckMatrix::from_rows(int rows, int cols, std::vector<std::vector<int>> check_vars) {
  if (rows < 1 || cols < 1) throw ValidationError("parity-check matrix must be non-empty");
  if (static_cast<int>(check_vars.size()) != rows) throw ValidationError("row list size differs from row count");
  ParityCheckMatrix H;
  H.rows = rows;
  H.cols = cols;
  H.var_checks.assign(static_cast<size_t>(cols), {});
  for (int r = 0; r < rows; ++r) {
    auto& vars = check_vars[static_cast<size_t>(r)];
    std::sort(vars.begin(), vars.end());
    if (std::adjacent_find(vars.begin(), vars.end()) != vars.end())
      throw ValidationError("duplicate entry in parity-check row " + std::to_string(r));
    for (int v : vars) {
      if (v < 0 || v >= cols) throw ValidationError("parity-check column index out of range");
      H.var_checks[static_cast<size_t>(v)].push_back(r);
    }
  }
  H.check_vars = std::move(check_vars);
  return H;
}

std::size_t ParityCheckMatrix::edges() const {
  std::size_t e = 0;
  for (const auto& row : check_vars) e += row.size();
  return e;
}

bool ParityCheckMatrix::is_codeword(std::span<const std::uint8_t> c) const {
  if (static_cast<int>(c.size()) != cols) throw ValidationError("codeword length differs from n");
  for (const auto& row : check_vars) {
    int parity = 0;
    for (int v : row) parity ^= c[static_cast<size_t>(v)] & 1;
    if (parity != 0) return false;
  }
  return true;
}

ParityCheckMatrix expand_prototype(const Prototype& base) {
  if (base.z < 1) throw ValidationError("lifting factor z must be positive");
  if (static_cast<int>(base.shifts.size()) != base.rows * base.cols)
    throw ValidationError("prototype shift count differs from rows x cols");
  std::vector<std::vector<int>> rows(static_cast<size_t>(base.rows * base.z));
  for (int br = 0; br < base.rows; ++br) {
    for (int bc = 0; bc < base.cols; ++bc) {
      const int s = base.at(br, bc);
      if (s == -1) continue;
      if (s < 0 || s >= base.z)
        throw ValidationError("circulant shift " + std::to_string(s) + " outside [0, z)");
      for (int i = 0; i < base.z; ++i)
        rows[static_cast<size_t>(br * base.z + i)].push_back(bc * base.z + (i + s) % base.z);
    }
  }
  ParityCheckMatrix H = ParityCheckMatrix::from_rows(base.rows * base.z, base.cols * base.z, std::move(rows));
  H.prototype = base;
  return H;
}

Prototype ieee80211_n1944_r12() {
  Prototype p;
  p.rows = 12;
  p.cols = 24;
  p.z = 81;
  p.shifts = {
      57, -1, -1, -1, 50, -1, 11, -1, 50, -1, 79, -1, 1,  0,  -1, -1, -1, -1, -1, -1, -1, -1, -1, -1,
      3,  -1, 28, -1, 0,  -1, -1, -1, 55, 7,  -1, -1, -1, 0,  0,  -1, -1, -1, -1, -1, -1, -1, -1, -1,
      30, -1, -1, -1, 24, 37, -1, -1, 56, 14, -1, -1, -1, -1, 0,  0,  -1, -1, -1, -1, -1, -1, -1, -1,
      62, 53, -1, -1, 53, -1, -1, 3,  35, -1, -1, -1, -1, -1, -1, 0,  0,  -1, -1, -1, -1, -1, -1, -1,
      40, -1, -1, 20, 66, -1, -1, 22, 28, -1, -1, -1, -1, -1, -1, -1, 0,  0,  -1, -1, -1, -1, -1, -1,
      0,  -1, -1, -1, 8,  -1, 42, -1, 50, -1, -1, 8,  -1, -1, -1, -1, -1, 0,  0,  -1, -1, -1, -1, -1,
      69, 79, 79, -1, -1, -1, 56, -1, 52, -1, -1, -1, 0,  -1, -1, -1, -1, -1, 0,  0,  -1, -1, -1, -1,
      65, -1, -1, -1, 38, 57, -1, -1, 72, -1, 27, -1, -1, -1, -1, -1, -1, -1, -1, 0,  0,  -1, -1, -1,
      64, -1, -1, -1, 14, 52, -1, -1, 30, -1, -1, 32, -1, -1, -1, -1, -1, -1, -1, -1, 0,  0,  -1, -1,
      -1, 45, -1, 70, 0,  -1, -1, -1, 77, 9,  -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 0,  0,  -1,
      2,  56, -1, 57, 35, -1, -1, -1, -1, -1, 12, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 0,  0,
      24, -1, 61, -1, 60, -1, -1, 27, 51, -1, -1, 16, 1,  -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 0,
  };
  return p;
}

namespace {

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int parse_int(const std::string& token, int line) {
  try {
    size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected an integer, got '" + token + "'", line);
  }
}

std::vector<std::string> tokens(const std::string& line, bool commas) {
  std::string s = line;
  if (commas) std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

}  // namespace

Prototype parse_prototype_csv(const std::string& text) {
  Prototype p;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_comment(raw);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    line = line.substr(first);
    if (line.rfind("z=", 0) == 0 || line.rfind("z =", 0) == 0) {
      if (p.rows != 0) throw ParseError("z= must precede the base matrix", line_no);
      p.z = parse_int(tokens(line.substr(line.find('=') + 1), true).at(0), line_no);
      if (p.z < 1) throw ParseError("lifting factor must be positive", line_no);
      continue;
    }
    const auto row = tokens(line, true);
    if (p.rows == 0) p.cols = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != p.cols)
      throw ParseError("row has " + std::to_string(row.size()) + " entries, expected " + std::to_string(p.cols),
                       line_no);
    for (const auto& t : row) {
      const int s = parse_int(t, line_no);
      if (s < -1) throw ParseError("shift must be -1 or non-negative", line_no);
      p.shifts.push_back(s);
    }
    ++p.rows;
  }
  if (p.rows == 0) throw ParseError("empty prototype", line_no);
  if (p.z == 0) {
    // Without an explicit z, use the smallest lifting that admits every shift.
    int max_shift = 0;
    for (int s : p.shifts) max_shift = std::max(max_shift, s);
    p.z = max_shift + 1;
  }
  for (int s : p.shifts)
    if (s >= p.z) throw ParseError("shift " + std::to_string(s) + " not below z", line_no);
  return p;
}

Prototype load_prototype_csv(const std::filesystem::path& path) { return parse_prototype_csv(read_file(path)); }

std::string to_prototype_csv(const Prototype& base) {
  std::ostringstream out;
  out << "z=" << base.z << "\n";
  for (int r = 0; r < base.rows; ++r) {
    for (int c = 0; c < base.cols; ++c) out << (c ? "," : "") << base.at(r, c);
    out << "\n";
  }
  return out.str();
}

ParityCheckMatrix parse_alist(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  auto next_line = [&]() -> std::vector<std::string> {
    while (std::getline(in, raw)) {
      ++line_no;
      auto t = tokens(raw, false);
      if (!t.empty()) return t;
    }
    throw ParseError("unexpected end of alist", line_no + 1);
  };
  auto ints = [&](const std::vector<std::string>& t) {
    std::vector<int> v;
    for (const auto& s : t) v.push_back(parse_int(s, line_no));
    return v;
  };

  auto header = ints(next_line());
  if (header.size() != 2 || header[0] < 1 || header[1] < 1) throw ParseError("expected 'n m'", line_no);
  const int n = header[0], m = header[1];
  auto maxdeg = ints(next_line());
  if (maxdeg.size() != 2) throw ParseError("expected 'max_col_deg max_row_deg'", line_no);
  auto col_deg = ints(next_line());
  if (static_cast<int>(col_deg.size()) != n) throw ParseError("expected n column degrees", line_no);
  auto row_deg = ints(next_line());
  if (static_cast<int>(row_deg.size()) != m) throw ParseError("expected m row degrees", line_no);

  std::vector<std::vector<int>> cols(static_cast<size_t>(n));
  for (int c = 0; c < n; ++c) {
    auto entries = ints(next_line());
    for (int e : entries) {
      if (e == 0) continue;
      if (e < 1 || e > m) throw ParseError("row index out of range", line_no);
      cols[static_cast<size_t>(c)].push_back(e - 1);
    }
    if (static_cast<int>(cols[static_cast<size_t>(c)].size()) != col_deg[static_cast<size_t>(c)])
      throw ParseError("column degree mismatch", line_no);
  }
  std::vector<std::vector<int>> rows(static_cast<size_t>(m));
  for (int r = 0; r < m; ++r) {
    auto entries = ints(next_line());
    for (int e : entries) {
      if (e == 0) continue;
      if (e < 1 || e > n) throw ParseError("column index out of range", line_no);
      rows[static_cast<size_t>(r)].push_back(e - 1);
    }
    if (static_cast<int>(rows[static_cast<size_t>(r)].size()) != row_deg[static_cast<size_t>(r)])
      throw ParseError("row degree mismatch", line_no);
  }
  ParityCheckMatrix H = ParityCheckMatrix::from_rows(m, n, std::move(rows));
  for (int c = 0; c < n; ++c) {
    auto listed = cols[static_cast<size_t>(c)];
    std::sort(listed.begin(), listed.end());
    if (listed != H.var_checks[static_cast<size_t>(c)])
      throw ParseError("column and row lists disagree at column " + std::to_string(c + 1), line_no);
  }
  return H;
}

ParityCheckMatrix load_alist(const std::filesystem::path& path) { return parse_alist(read_file(path)); }

std::string to_alist(const ParityCheckMatrix& H) {
  size_t max_col = 0, max_row = 0;
  for (const auto& c : H.var_checks) max_col = std::max(max_col, c.size());
  for (const auto& r : H.check_vars) max_row = std::max(max_row, r.size());
  std::ostringstream out;
  out << H.cols << " " << H.rows << "\n" << max_col << " " << max_row << "\n";
  for (int c = 0; c < H.cols; ++c) out << (c ? " " : "") << H.var_checks[static_cast<size_t>(c)].size();
  out << "\n";
  for (int r = 0; r < H.rows; ++r) out << (r ? " " : "") << H.check_vars[static_cast<size_t>(r)].size();
  out << "\n";
  auto emit = [&](const std::vector<int>& v, size_t width) {
    for (size_t i = 0; i < width; ++i) out << (i ? " " : "") << (i < v.size() ? v[i] + 1 : 0);
    out << "\n";
  };
  for (const auto& c : H.var_checks) emit(c, max_col);
  for (const auto& r : H.check_vars) emit(r, max_row);
  return out.str();
}

Encoder::Encoder(const ParityCheckMatrix& H) : n_(H.cols) {
  const int words = (H.cols + 63) / 64;
  std::vector<std::vector<std::uint64_t>> A(static_cast<size_t>(H.rows),
                                            std::vector<std::uint64_t>(static_cast<size_t>(words), 0));
  for (int r = 0; r < H.rows; ++r)
    for (int v : H.check_vars[static_cast<size_t>(r)])
      A[static_cast<size_t>(r)][static_cast<size_t>(v / 64)] ^= std::uint64_t{1} << (v % 64);

  auto test = [](const std::vector<std::uint64_t>& row, int c) {
    return (row[static_cast<size_t>(c / 64)] >> (c % 64)) & 1;
  };

  // Reduced row echelon form with pivots taken from the right.
  std::vector<int> pivot_col;
  std::vector<bool> is_pivot(static_cast<size_t>(H.cols), false);
  int rank = 0;
  for (int c = H.cols - 1; c >= 0 && rank < H.rows; --c) {
    int sel = -1;
    for (int r = rank; r < H.rows; ++r) {
      if (test(A[static_cast<size_t>(r)], c)) {
        sel = r;
        break;
      }
    }
    if (sel < 0) continue;
    std::swap(A[static_cast<size_t>(sel)], A[static_cast<size_t>(rank)]);
    const auto& p = A[static_cast<size_t>(rank)];
    for (int r = 0; r < H.rows; ++r) {
      if (r == rank || !test(A[static_cast<size_t>(r)], c)) continue;
      auto& row = A[static_cast<size_t>(r)];
      for (int w = 0; w < words; ++w) row[static_cast<size_t>(w)] ^= p[static_cast<size_t>(w)];
    }
    pivot_col.push_back(c);
    is_pivot[static_cast<size_t>(c)] = true;
    ++rank;
  }

  std::vector<int> msg_index(static_cast<size_t>(H.cols), -1);
  for (int c = 0; c < H.cols; ++c) {
    if (is_pivot[static_cast<size_t>(c)]) continue;
    msg_index[static_cast<size_t>(c)] = static_cast<int>(info_positions_.size());
    info_positions_.push_back(c);
  }
  const int k = static_cast<int>(info_positions_.size());
  const int mwords = (k + 63) / 64;
  parity_positions_ = pivot_col;
  rows_.assign(static_cast<size_t>(rank), std::vector<std::uint64_t>(static_cast<size_t>(mwords), 0));
  for (int r = 0; r < rank; ++r) {
    for (int c : info_positions_) {
      if (!test(A[static_cast<size_t>(r)], c)) continue;
      const int j = msg_index[static_cast<size_t>(c)];
      rows_[static_cast<size_t>(r)][static_cast<size_t>(j / 64)] |= std::uint64_t{1} << (j % 64);
    }
  }
}

std::vector<std::uint8_t> Encoder::encode(std::span<const std::uint8_t> msg) const {
  const int k = this->k();
  if (static_cast<int>(msg.size()) != k)
    throw ValidationError("message length " + std::to_string(msg.size()) + " differs from k = " +
                          std::to_string(k));
  const int mwords = (k + 63) / 64;
  std::vector<std::uint64_t> packed(static_cast<size_t>(mwords), 0);
  for (int j = 0; j < k; ++j)
    if (msg[static_cast<size_t>(j)] & 1) packed[static_cast<size_t>(j / 64)] |= std::uint64_t{1} << (j % 64);

  std::vector<std::uint8_t> c(static_cast<size_t>(n_), 0);
  for (int j = 0; j < k; ++j) c[static_cast<size_t>(info_positions_[static_cast<size_t>(j)])] = msg[static_cast<size_t>(j)] & 1;
  for (size_t r = 0; r < rows_.size(); ++r) {
    int parity = 0;
    for (int w = 0; w < mwords; ++w) parity ^= std::popcount(rows_[r][static_cast<size_t>(w)] & packed[static_cast<size_t>(w)]) & 1;
    c[static_cast<size_t>(parity_positions_[r])] = static_cast<std::uint8_t>(parity);
  }
  return c;
}

std::vector<std::uint8_t> Encoder::extract(std::span<const std::uint8_t> codeword) const {
  if (static_cast<int>(codeword.size()) != n_) throw ValidationError("codeword length differs from n");
  std::vector<std::uint8_t> out;
  out.reserve(info_positions_.size());
  for (int c : info_positions_) out.push_back(codeword[static_cast<size_t>(c)]);
  return out;
}

DecodeResult decode_minsum(std::span<const double> llr, const ParityCheckMatrix& H, int max_iterations,
                           double scale) {
  if (static_cast<int>(llr.size()) != H.cols) throw ValidationError("LLR length differs from n");
  if (max_iterations < 1) throw ValidationError("max_iterations must be positive");

  // Internally L = ln(P0/P1).
  std::vector<double> channel(llr.size());
  for (size_t i = 0; i < llr.size(); ++i) channel[i] = -llr[i];

  // Edge storage in row order.
  std::vector<size_t> row_start(static_cast<size_t>(H.rows) + 1, 0);
  for (int r = 0; r < H.rows; ++r) row_start[static_cast<size_t>(r) + 1] = row_start[static_cast<size_t>(r)] + H.check_vars[static_cast<size_t>(r)].size();
  const size_t E = row_start.back();
  std::vector<double> c2v(E, 0.0), v2c(E, 0.0);
  std::vector<double> total = channel;

  DecodeResult out;
  out.bits.assign(llr.size(), 0);
  for (int it = 1; it <= max_iterations; ++it) {
    for (int r = 0; r < H.rows; ++r) {
      const auto& vars = H.check_vars[static_cast<size_t>(r)];
      const size_t base = row_start[static_cast<size_t>(r)];
      double min1 = std::numeric_limits<double>::infinity(), min2 = min1;
      size_t argmin = 0;
      int sign = 1;
      for (size_t e = 0; e < vars.size(); ++e) {
        const double m = total[static_cast<size_t>(vars[e])] - c2v[base + e];
        v2c[base + e] = m;
        const double a = std::abs(m);
        if (m < 0) sign = -sign;
        if (a < min1) {
          min2 = min1;
          min1 = a;
          argmin = e;
        } else if (a < min2) {
          min2 = a;
        }
      }
      for (size_t e = 0; e < vars.size(); ++e) {
        const double mag = scale * (e == argmin ? min2 : min1);
        const int s = v2c[base + e] < 0 ? -sign : sign;
        c2v[base + e] = s * mag;
      }
    }
    total = channel;
    for (int r = 0; r < H.rows; ++r) {
      const auto& vars = H.check_vars[static_cast<size_t>(r)];
      const size_t base = row_start[static_cast<size_t>(r)];
      for (size_t e = 0; e < vars.size(); ++e) total[static_cast<size_t>(vars[e])] += c2v[base + e];
    }
    for (size_t i = 0; i < total.size(); ++i) out.bits[i] = total[i] < 0 ? 1 : 0;
    out.iterations = it;
    if (H.is_codeword(out.bits)) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace cfota::ldpc
