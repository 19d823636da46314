#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <tuple>

namespace sheetgram {

/// A cell location. Columns and rows are 1-based (A = 1).
struct address {
  std::string sheet;
  int col = 1;
  int row = 1;

  friend bool operator==(const address&, const address&) = default;

  /// Reading order: sheet, then row, then column. Every ordered set of
  /// addresses in the library uses this.
  friend std::strong_ordering operator<=>(const address& a, const address& b) {
    if (auto c = a.sheet <=> b.sheet; c != 0) return c;
    if (auto c = a.row <=> b.row; c != 0) return c;
    return a.col <=> b.col;
  }
};

/// Column-major ordering (sheet, column, row); used for model attribute order.
struct column_major_less {
  bool operator()(const address& a, const address& b) const {
    return std::tie(a.sheet, a.col, a.row) < std::tie(b.sheet, b.col, b.row);
  }
};

/// Bijective base-26: 1 -> "A", 26 -> "Z", 27 -> "AA".
std::string col_to_letters(int col);
/// Inverse of col_to_letters. Accepts upper-case letters only.
int letters_to_col(std::string_view letters);

/// Parses `A1`, `$B$7`, `Sheet2!C3` or `'My sheet'!C3`. `$` markers are accepted
/// and dropped. Throws parse_error on malformed text.
address parse_address(std::string_view text, std::string_view default_sheet);

/// `C2`, or `Sheet2!C2` when with_sheet is set (sheet quoted when needed).
std::string to_a1(const address& a, bool with_sheet = false);

/// Quotes a sheet name for use in a reference when it is not a plain word.
std::string quote_sheet(std::string_view sheet);

inline constexpr int max_col = 16384;
inline constexpr int max_row = 1048576;

}  // namespace sheetgram
