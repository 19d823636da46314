#pragma once

#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sheetgram/address.hpp"
#include "sheetgram/formula.hpp"

namespace sheetgram {

struct number_cell {
  double value;
  friend bool operator==(const number_cell&, const number_cell&) = default;
};
struct text_cell {
  std::string value;
  friend bool operator==(const text_cell&, const text_cell&) = default;
};
/// `source` keeps the text as written. Two formula cells are equal when their
/// ASTs are; the source is presentation only.
struct formula_cell {
  std::string source;
  expr ast;
  friend bool operator==(const formula_cell& a, const formula_cell& b) { return a.ast == b.ast; }
};

using cell_content = std::variant<number_cell, text_cell, formula_cell>;

/// Builds a formula cell by parsing `source` at `host`.
formula_cell make_formula(std::string source, const address& host);

struct bounds {
  int max_col = 0;
  int max_row = 0;
  friend bool operator==(const bounds&, const bounds&) = default;
};

/// Finite mapping from addresses to non-empty contents. Empty cells are simply
/// absent. The sheet set is the set of sheets that hold at least one cell.
class workbook {
 public:
  /// Returns false (and stores nothing) when the address is already present.
  bool insert(const address& a, cell_content content);
  /// Inserts or overwrites.
  void set(const address& a, cell_content content);

  const cell_content* find(const address& a) const;
  bool contains(const address& a) const { return cells_.count(a) != 0; }

  const std::map<address, cell_content>& cells() const { return cells_; }
  std::vector<std::string> sheets() const;
  bounds bounds_of(std::string_view sheet) const;
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  friend bool operator==(const workbook& a, const workbook& b) { return a.cells_ == b.cells_; }

 private:
  void grow(const address& a);

  std::map<address, cell_content> cells_;
  std::map<std::string, bounds, std::less<>> bounds_;
};

/// Exact lookup; nullptr for an empty cell.
inline const cell_content* cell_at(const workbook& wb, const address& a) { return wb.find(a); }

/// Loads the tab-separated fact format. Throws parse_error with the offending
/// line number on malformed lines, duplicate addresses or bad formulas.
workbook load_facts(std::istream& in);
workbook load_facts_text(std::string_view text);

/// Loads an RFC 4180 CSV grid into `sheet`. Row i, field j -> (j, i).
workbook load_csv_grid(std::istream& in, const std::string& sheet);
workbook load_csv_grid_text(std::string_view text, const std::string& sheet);

/// Serializes in (sheet, row, col) order; the output is a pure function of the
/// workbook, so re-exporting a reloaded file reproduces it byte for byte.
std::string export_facts(const workbook& wb);

/// Text shown for a cell in grids: the formula source, the text, or the number.
std::string display_text(const cell_content& c);

}  // namespace sheetgram
