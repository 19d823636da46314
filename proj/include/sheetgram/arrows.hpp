#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sheetgram/cell_model.hpp"
#include "sheetgram/factbase.hpp"
#include "sheetgram/formula.hpp"
#include "sheetgram/grammar.hpp"

namespace sheetgram {

struct range_domain {
  int n = 1;
  friend bool operator==(const range_domain&, const range_domain&) = default;
};
struct enum_domain {
  std::vector<std::string> labels;
  friend bool operator==(const enum_domain&, const enum_domain&) = default;
};
using index_domain = std::variant<range_domain, enum_domain>;

/// A header label absorbed into an attribute's name. Kept so compile can put
/// the text back.
struct label_meta {
  address at;
  std::string text;
  friend bool operator==(const label_meta&, const label_meta&) = default;
};

/// A named array of cells. Position k of `layout`, `exprs` and `data` belongs
/// to index k+1 (or to the k-th enum label).
struct attribute {
  std::string name;
  index_domain domain = range_domain{1};
  std::vector<address> layout;
  std::vector<expr> exprs;
  /// Literal cell (number or text) as opposed to a formula.
  std::vector<bool> data;
  std::vector<label_meta> labels;
  /// Set by an explicit generalize step; emission then prefers the
  /// quantified form even for a single element.
  bool generalized = false;

  std::size_t size() const { return layout.size(); }
  /// Position for an index expression, or nullopt when it is out of domain.
  std::optional<std::size_t> position(const index_expr& ix) const;
  /// Index expression naming position k.
  index_expr index_at(std::size_t k) const;

  friend bool operator==(const attribute&, const attribute&) = default;
};

struct model {
  /// Ordered column-major by first layout cell.
  std::vector<attribute> attributes;
  /// Single-cell attribute names carry a sheet prefix when set.
  bool multi_sheet = false;

  const attribute* find(std::string_view name) const;
  attribute* find(std::string_view name);
  /// The attribute laid out on `a`, if any.
  const attribute* owner_of(const address& a) const;
  std::set<std::string> names() const;

  friend bool operator==(const model&, const model&) = default;
};

/// Name given to the single-cell attribute at `a`.
std::string cell_attribute_name(const address& a, bool multi_sheet);

/// `[A-Za-z_][A-Za-z0-9_]*`
bool is_identifier(std::string_view s);
/// Non-alphanumeric runs become one `_`, ends are trimmed and a leading digit
/// gets a `_` prefix. Empty when nothing usable is left.
std::string sanitize_identifier(std::string_view text);

model decompile(const workbook& wb);
workbook compile(const model& m);

/// Invariant violations, one message each; empty when the model is sound.
std::vector<std::string> validate_model(const model& m);

// ---------------------------------------------------------------------------
// Spreadsheet algebra

struct group_op {
  std::vector<address> cells;
  std::string name;
  friend bool operator==(const group_op&, const group_op&) = default;
};
struct rename_op {
  std::string from;
  std::string to;
  friend bool operator==(const rename_op&, const rename_op&) = default;
};
struct ungroup_op {
  std::string name;
  friend bool operator==(const ungroup_op&, const ungroup_op&) = default;
};
struct name_from_label_op {
  std::string name;
  friend bool operator==(const name_from_label_op&, const name_from_label_op&) = default;
};
/// Switches a Range attribute to an Enum domain. Labels are taken from the
/// nearest label above each cell when none are given.
struct reindex_op {
  std::string name;
  std::vector<std::string> labels;
  friend bool operator==(const reindex_op&, const reindex_op&) = default;
};
struct generalize_op {
  std::string name;
  friend bool operator==(const generalize_op&, const generalize_op&) = default;
};

using operation = std::variant<group_op, rename_op, ungroup_op, name_from_label_op, reindex_op, generalize_op>;

std::string describe(const operation& op);

model apply_group(const model& m, const group_op& op);
model apply_rename(const model& m, const rename_op& op);
model apply_ungroup(const model& m, const ungroup_op& op);
/// Returns the model unchanged and fills `note` when no label applies.
model apply_name_from_label(const model& m, const name_from_label_op& op, const fact_base& fb,
                            std::string* note = nullptr);
model apply_reindex(const model& m, const reindex_op& op, const fact_base& fb);
model apply_generalize(const model& m, const generalize_op& op);

/// Dispatches on the operation. `note` receives non-fatal diagnostics.
model apply(const model& m, const operation& op, const fact_base& fb, std::string* note = nullptr);

/// Name suggested by the label directly above the attribute's first cell, or
/// failing that directly to its left.
std::optional<std::string> infer_name(const model& m, std::string_view attr, const fact_base& fb);

/// One group per rule instance that bound non-label cells, named after the
/// rule (`rule`, `rule_2`, ...), then one name_from_label per group. Names in
/// `taken` are skipped; cells already claimed by an earlier group are dropped.
std::vector<operation> match_to_transforms(const std::vector<match>& matches, const fact_base& fb,
                                           const std::set<std::string>& taken = {});

/// Quantified template for a Range attribute whose expressions differ only by
/// index offsets, or nullopt. Throws when plain references remain.
std::optional<expr> generalize(const model& m, std::string_view attr);

/// Replaces every index_param(k) with the constant i+k.
expr instantiate(const expr& tmpl, int i);

/// The `<signatures>` / `where` / equations listing.
std::string emit_mm(const model& m);

}  // namespace sheetgram
