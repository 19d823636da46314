#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sheetgram/address.hpp"
#include "sheetgram/box.hpp"
#include "sheetgram/factbase.hpp"

namespace sheetgram {

// ---------------------------------------------------------------------------
// Patterns
//
// A pattern is matched at a cursor. Terminals test the cell under the cursor
// and bind it without moving; only steps (DOWN/ALONG) move. A rule reference
// matches the rule's body from the current cursor and then puts the cursor
// back, so a nonterminal stands on the grid the way a terminal does.

enum class axis { down, along };

struct pattern;

struct terminal {
  std::string predicate;
  friend bool operator==(const terminal&, const terminal&) = default;
};
struct step {
  axis dir;
  int n = 1;
  friend bool operator==(const step&, const step&) = default;
};
struct seq {
  std::vector<pattern> items;
  friend bool operator==(const seq&, const seq&) = default;
};
struct alt {
  std::vector<pattern> options;
  friend bool operator==(const alt&, const alt&) = default;
};
struct opt {
  box<pattern> inner;
  friend bool operator==(const opt&, const opt&) = default;
};
/// `count` empty means `*` (greedy, longest first).
struct repeat {
  box<pattern> inner;
  std::optional<int> count;
  friend bool operator==(const repeat&, const repeat&) = default;
};
/// AND: both operands from the same cursor; the cursor is left where it was.
struct both {
  box<pattern> lhs;
  box<pattern> rhs;
  friend bool operator==(const both&, const both&) = default;
};
struct rule_ref {
  std::string name;
  friend bool operator==(const rule_ref&, const rule_ref&) = default;
};

struct pattern {
  std::variant<terminal, step, seq, alt, opt, repeat, both, rule_ref> node;

  pattern(terminal t) : node(std::move(t)) {}
  pattern(step s) : node(s) {}
  pattern(seq s) : node(std::move(s)) {}
  pattern(alt a) : node(std::move(a)) {}
  pattern(opt o) : node(std::move(o)) {}
  pattern(repeat r) : node(std::move(r)) {}
  pattern(both b) : node(std::move(b)) {}
  pattern(rule_ref r) : node(std::move(r)) {}

  friend bool operator==(const pattern&, const pattern&) = default;
};

/// Source-like rendering, used in diagnostics and tests.
std::string to_string(const pattern& p);

struct rule {
  std::string name;
  pattern body;
};

class grammar {
 public:
  grammar() = default;
  explicit grammar(std::vector<rule> rules) : rules_(std::move(rules)) {}

  const std::vector<rule>& rules() const { return rules_; }
  const pattern* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  /// Rules no other rule refers to, in source order.
  std::vector<std::string> roots() const;

 private:
  std::vector<rule> rules_;
};

/// Parses `name --> body` rules. A line containing `-->` starts a new rule
/// (unless parentheses are still open); other non-blank lines continue the
/// previous one. Repeated names are joined as alternatives in source order.
/// Identifiers naming a rule become rule references; the rest are terminals.
grammar parse_grammar(std::string_view text);

struct diagnostic {
  std::string rule;
  std::string message;
  friend bool operator==(const diagnostic&, const diagnostic&) = default;
};

/// Empty iff every terminal names a registered predicate, every reference
/// resolves, every `*` makes progress and no rule is left recursive.
std::vector<diagnostic> validate_grammar(const grammar& g, const predicate_registry& reg);

/// True when `p` contains a terminal or a step, looking through references.
bool makes_progress(const pattern& p, const grammar& g);

// ---------------------------------------------------------------------------
// Matching

/// Cells bound inside one rule instance, with the terminal that bound each.
struct binding {
  std::string rule;
  std::vector<address> cells;
  std::vector<std::string> predicates;
  friend bool operator==(const binding&, const binding&) = default;
};

struct match {
  std::string rule;
  address anchor;
  /// One entry per rule instance, in the order the instances were entered;
  /// the first entry is the matched rule itself.
  std::vector<binding> bindings;
  address end;

  /// Distinct bound addresses, in binding order.
  std::vector<address> cells() const;
  friend bool operator==(const match&, const match&) = default;
};

/// All distinct matches of `rule` at `anchor`, in depth-first order.
std::vector<match> match_at(const grammar& g, std::string_view rule, const fact_base& fb,
                            const predicate_registry& reg, const address& anchor);

/// match_at over every non-empty cell, anchors in (sheet, row, col) order.
std::vector<match> match_all(const grammar& g, std::string_view rule, const fact_base& fb,
                             const predicate_registry& reg);

/// Greedy disjoint selection: most bound cells first, then earlier anchor,
/// then earlier position in the input.
std::vector<match> select_cover(const std::vector<match>& matches);

}  // namespace sheetgram
