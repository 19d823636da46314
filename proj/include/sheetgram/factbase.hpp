#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sheetgram/box.hpp"
#include "sheetgram/cell_model.hpp"

namespace sheetgram {

/// Derived relations over a workbook: precedents, dependents, labels and
/// host-relative formula forms. Immutable once built.
class fact_base {
 public:
  explicit fact_base(workbook wb);

  const workbook& book() const { return wb_; }

  /// Direct precedents of `c`, in (sheet, row, col) order. References to empty
  /// cells are kept.
  const std::set<address>& depends_on(const address& c) const;
  /// Cells whose formulas reference `c` directly.
  const std::set<address>& dependents(const address& c) const;
  /// Every cell reachable through precedents, excluding `c` itself unless it
  /// lies on a cycle through `c`.
  std::set<address> depends_on_transitive(const address& c) const;

  /// A text cell that no formula depends on.
  bool is_label(const address& c) const;
  const std::set<address>& labels() const { return labels_; }

  /// Strongly connected components of size >= 2, plus self-loops. Members are
  /// ordered; components are ordered by their first member.
  std::vector<std::vector<address>> detect_cycles() const;

  /// Both cells hold formulas whose host-relative forms are equal.
  bool copy_of(const address& c, const address& d) const;
  /// Every cell in col, rows [row_from, row_to], is a formula copy of the first.
  bool column_all_copies(const std::string& sheet, int col, int row_from, int row_to) const;

  /// Host-relative form of the formula at `c`, or nullptr for non-formula cells.
  const expr* offset_form(const address& c) const;

 private:
  workbook wb_;
  std::map<address, std::set<address>> precedents_;
  std::map<address, std::set<address>> dependents_;
  std::map<address, expr> offset_forms_;
  std::set<address> labels_;
};

// ---------------------------------------------------------------------------
// Predicates

/// A user predicate: a combination of registered names under AND/OR/NOT.
struct predicate_expr {
  struct name_node {
    std::string name;
    friend bool operator==(const name_node&, const name_node&) = default;
  };
  struct and_node {
    box<predicate_expr> lhs, rhs;
    friend bool operator==(const and_node&, const and_node&) = default;
  };
  struct or_node {
    box<predicate_expr> lhs, rhs;
    friend bool operator==(const or_node&, const or_node&) = default;
  };
  struct not_node {
    box<predicate_expr> operand;
    friend bool operator==(const not_node&, const not_node&) = default;
  };
  std::variant<name_node, and_node, or_node, not_node> node;

  friend bool operator==(const predicate_expr&, const predicate_expr&) = default;
};

predicate_expr pred(std::string name);
predicate_expr pred_all(predicate_expr a, predicate_expr b);
predicate_expr pred_any(predicate_expr a, predicate_expr b);
predicate_expr pred_negate(predicate_expr a);

/// Parses `number OR (text AND NOT label)`. Keywords are upper case; names are
/// lower-case identifiers.
predicate_expr parse_predicate(std::string_view text);

/// Named unary cell predicates. The built-ins (label, cell, empty, number,
/// text, formula) are always present and cannot be redefined.
class predicate_registry {
 public:
  predicate_registry();

  static const std::vector<std::string>& builtin_names();

  bool contains(std::string_view name) const;
  /// Adds a combined predicate. Every name it mentions must already exist, so
  /// definitions cannot recurse.
  void define(const std::string& name, predicate_expr body);
  std::vector<std::string> names() const;

  /// Throws not_found for an unknown name.
  bool eval(std::string_view name, const fact_base& fb, const address& c) const;

 private:
  bool eval_expr(const predicate_expr& e, const fact_base& fb, const address& c) const;

  std::map<std::string, predicate_expr, std::less<>> user_;
};

inline bool eval_predicate(const predicate_registry& reg, std::string_view name, const fact_base& fb,
                           const address& c) {
  return reg.eval(name, fb, c);
}

}  // namespace sheetgram
