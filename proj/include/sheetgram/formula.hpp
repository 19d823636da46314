#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sheetgram/address.hpp"
#include "sheetgram/box.hpp"

namespace sheetgram {

// ---------------------------------------------------------------------------
// Index expressions (attribute subscripts)

struct index_const {
  int value;
  friend bool operator==(const index_const&, const index_const&) = default;
};
/// Symbolic `t + offset`; only ever present in generalized templates.
struct index_param {
  int offset;
  friend bool operator==(const index_param&, const index_param&) = default;
};
struct index_label {
  std::string label;
  friend bool operator==(const index_label&, const index_label&) = default;
};
using index_expr = std::variant<index_const, index_param, index_label>;

std::string to_string(const index_expr& ix);

// ---------------------------------------------------------------------------
// Formula AST

enum class binary_op { add, sub, mul, div, pow, eq, lt, gt, le, ge, ne };

std::string_view symbol(binary_op op);

struct expr;

struct num {
  double value;
  friend bool operator==(const num&, const num&) = default;
};
struct str {
  std::string value;
  friend bool operator==(const str&, const str&) = default;
};

/// A1 reference. `qualified` is true when the target sheet differs from the
/// sheet of the formula's host cell, so printing must carry the prefix.
struct ref {
  address target;
  bool col_abs = false;
  bool row_abs = false;
  bool qualified = false;
  friend bool operator==(const ref&, const ref&) = default;
};
struct range_ref {
  ref from;
  ref to;
  friend bool operator==(const range_ref&, const range_ref&) = default;
};

/// One axis of a host-relative reference: a delta, or an absolute coordinate.
struct offset_axis {
  bool absolute = false;
  int value = 0;
  friend bool operator==(const offset_axis&, const offset_axis&) = default;
};
/// R1C1-style reference. `sheet` is empty for same-sheet references.
struct offset_ref {
  std::string sheet;
  offset_axis col;
  offset_axis row;
  friend bool operator==(const offset_ref&, const offset_ref&) = default;
};
struct offset_range {
  offset_ref from;
  offset_ref to;
  friend bool operator==(const offset_range&, const offset_range&) = default;
};

struct binary {
  binary_op op;
  box<expr> lhs;
  box<expr> rhs;
  friend bool operator==(const binary&, const binary&) = default;
};
struct negate {
  box<expr> operand;
  friend bool operator==(const negate&, const negate&) = default;
};
struct call {
  std::string name;  // upper case
  std::vector<expr> args;
  friend bool operator==(const call&, const call&) = default;
};

/// `Name[index]`. The `$` flags of the reference it replaced ride along so
/// that compiling the model restores the original cell text.
struct attr_ref {
  std::string attr;
  index_expr index;
  bool col_abs = false;
  bool row_abs = false;
  friend bool operator==(const attr_ref&, const attr_ref&) = default;
};
/// `Name[from..to]`, produced from a range that covers consecutive indices.
struct attr_range {
  std::string attr;
  index_expr from;
  index_expr to;
  bool from_col_abs = false, from_row_abs = false;
  bool to_col_abs = false, to_row_abs = false;
  friend bool operator==(const attr_range&, const attr_range&) = default;
};

struct expr {
  using node_type = std::variant<num, str, ref, range_ref, binary, negate, call, attr_ref, attr_range,
                                 offset_ref, offset_range>;
  node_type node;

  expr(num n) : node(std::move(n)) {}
  expr(str s) : node(std::move(s)) {}
  expr(ref r) : node(std::move(r)) {}
  expr(range_ref r) : node(std::move(r)) {}
  expr(binary b) : node(std::move(b)) {}
  expr(negate n) : node(std::move(n)) {}
  expr(call c) : node(std::move(c)) {}
  expr(attr_ref a) : node(std::move(a)) {}
  expr(attr_range a) : node(std::move(a)) {}
  expr(offset_ref o) : node(std::move(o)) {}
  expr(offset_range o) : node(std::move(o)) {}

  template <class T>
  bool is() const { return std::holds_alternative<T>(node); }
  template <class T>
  const T* as() const { return std::get_if<T>(&node); }

  friend bool operator==(const expr&, const expr&) = default;
};

inline expr make_binary(binary_op op, expr lhs, expr rhs) {
  return binary{op, box<expr>(std::move(lhs)), box<expr>(std::move(rhs))};
}
inline expr make_negate(expr e) { return negate{box<expr>(std::move(e))}; }
inline expr make_ref(address target, bool col_abs = false, bool row_abs = false, bool qualified = false) {
  return ref{std::move(target), col_abs, row_abs, qualified};
}

// ---------------------------------------------------------------------------
// Operations

/// Parses "=..." hosted at `host`. Relative references resolve against the
/// host's sheet. Throws parse_error carrying the character position.
expr parse_formula(std::string_view source, const address& host);

/// A1 formula text with the leading "=" and minimal parentheses.
std::string print_formula(const expr& e);

/// Expression body in model-listing style: spaced binary operators,
/// attribute references as `Name[i]`, plain references as A1 text. Attributes
/// named in `scalars` print without an index.
std::string print_listing(const expr& e, const std::set<std::string>* scalars = nullptr);

/// Rewrites every reference into host-relative form. Sheets stay absolute.
expr to_offset_form(const expr& e, const address& host);

/// Inverse of to_offset_form at the same host.
expr from_offset_form(const expr& e, const address& host);

/// Referenced addresses in left-to-right order, ranges expanded row by row,
/// duplicates dropped after their first occurrence.
std::vector<address> refs_of(const expr& e);

using substitution = std::map<address, expr>;

/// Replaces references found in `subst`. A range whose cells all map to
/// consecutive constant indices of one attribute becomes an attr_range; a range
/// only partly covered (or covered inconsistently) is an error.
expr rewrite_refs(const expr& e, const substitution& subst);

/// Rewrites attribute references through `resolve`, which returns the cell for
/// (attribute, index) or nullopt to leave the node untouched.
using attr_resolver = std::function<std::optional<address>(const std::string&, const index_expr&)>;
expr lower_attr_refs(const expr& e, const attr_resolver& resolve, const address& host);

/// Calls `fn` on every node, parents before children.
void visit(const expr& e, const std::function<void(const expr&)>& fn);

/// Bottom-up rebuild: `fn` sees each node after its children were mapped.
expr transform(const expr& e, const std::function<expr(expr)>& fn);

/// Decimal text with 15 significant digits ("%.15g").
std::string format_number(double value);

/// Strict decimal literal: optional sign, digits with optional point, optional
/// exponent. Rejects inf/nan and surrounding whitespace.
std::optional<double> parse_decimal(std::string_view text);

}  // namespace sheetgram
