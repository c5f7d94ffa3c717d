#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfota/types.hpp"

namespace cfota::ldpc {

/// Base matrix of circulant shifts; -1 marks an all-zero z x z block.
struct Prototype {
  int rows = 0;
  int cols = 0;
  int z = 0;
  std::vector<int> shifts;  // row-major

  int at(int r, int c) const { return shifts[static_cast<size_t>(r * cols + c)]; }
};

/// Sparse binary parity-check matrix with both adjacency views.
struct ParityCheckMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<int>> check_vars;  // columns of each row, ascending
  std::vector<std::vector<int>> var_checks;  // rows of each column, ascending
  std::optional<Prototype> prototype;

  static ParityCheckMatrix from_rows(int rows, int cols, std::vector<std::vector<int>> check_vars);
  std::size_t edges() const;
  /// True when H c = 0 (mod 2).
  bool is_codeword(std::span<const std::uint8_t> c) const;
};

/// Lift a base matrix: shift s becomes the identity cyclically shifted so
/// that row i of the block has its one in column (i + s) mod z.
/// Throws ValidationError for shifts outside {-1} U [0, z).
ParityCheckMatrix expand_prototype(const Prototype& base);

/// IEEE 802.11 (HT/VHT) LDPC, n = 1944, rate 1/2: 12 x 24 base, z = 81.
Prototype ieee80211_n1944_r12();

/// Comma- or whitespace-separated base matrix, one row per line. A first
/// line "z=<n>" sets the lifting factor; '#' starts a comment.
Prototype parse_prototype_csv(const std::string& text);
Prototype load_prototype_csv(const std::filesystem::path& path);
std::string to_prototype_csv(const Prototype& base);

/// MacKay alist: "n m", "max_col_deg max_row_deg", the n column degrees,
/// the m row degrees, then n lines of 1-based row indices (zero padded to
/// max degree) and m lines of 1-based column indices. Errors carry the
/// offending line number.
ParityCheckMatrix parse_alist(const std::string& text);
ParityCheckMatrix load_alist(const std::filesystem::path& path);
std::string to_alist(const ParityCheckMatrix& H);

/// Systematic encoder built by GF(2) elimination with pivots chosen from the
/// rightmost columns, so for a dual-diagonal parity part the message
/// occupies the first k positions.
class Encoder {
 public:
  explicit Encoder(const ParityCheckMatrix& H);

  int n() const { return n_; }
  int k() const { return static_cast<int>(info_positions_.size()); }
  int rank() const { return n_ - k(); }
  const std::vector<int>& info_positions() const { return info_positions_; }

  /// Throws ValidationError if msg.size() != k().
  std::vector<std::uint8_t> encode(std::span<const std::uint8_t> msg) const;
  /// Message bits read back from a codeword.
  std::vector<std::uint8_t> extract(std::span<const std::uint8_t> codeword) const;

 private:
  int n_ = 0;
  std::vector<int> info_positions_;
  std::vector<int> parity_positions_;
  // parity_positions_[r] = XOR of message bits selected by rows_[r]
  std::vector<std::vector<std::uint64_t>> rows_;
};

struct DecodeResult {
  std::vector<std::uint8_t> bits;
  bool converged = false;
  int iterations = 0;
};

/// Normalized min-sum, flooding schedule. LLRs follow ln(P(1)/P(0)), so a
/// positive value favours bit 1. Stops as soon as every check is satisfied.
DecodeResult decode_minsum(std::span<const double> llr, const ParityCheckMatrix& H,
                           int max_iterations = 50, double scale = 0.75);

}  // namespace cfota::ldpc
