#pragma once

// Shared helpers for the unit tests and the acceptance runner: fixture access,
// random generators and independent reference implementations.

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "sheetgram/arrows.hpp"
#include "sheetgram/cell_model.hpp"
#include "sheetgram/factbase.hpp"
#include "sheetgram/formula.hpp"
#include "sheetgram/grammar.hpp"

namespace sgtest {

using namespace sheetgram;

inline std::string fixture_path(const std::string& name) { return std::string(SG_FIXTURE_DIR) + "/" + name; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixture(const std::string& name) { return read_text(fixture_path(name)); }

inline address at(const std::string& a1, const std::string& sheet = "Sheet1") { return parse_address(a1, sheet); }

inline workbook income() { return load_facts_text(fixture("income.facts")); }
inline workbook property() { return load_facts_text(fixture("property.facts")); }

// ---------------------------------------------------------------------------
// Random formulas and workbooks

/// Small random AST over refs inside a cols x rows box on `sheet`.
inline expr random_expr(std::mt19937& rng, int cols, int rows, const std::string& sheet, int depth,
                        bool allow_abs = true) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto random_ref = [&] {
    ref r;
    r.target = address{sheet, pick(1, cols), pick(1, rows)};
    if (allow_abs) {
      r.col_abs = pick(0, 3) == 0;
      r.row_abs = pick(0, 3) == 0;
    }
    return r;
  };
  int choice = depth <= 0 ? pick(0, 2) : pick(0, 6);
  switch (choice) {
    case 0: return num{static_cast<double>(pick(0, 40)) / 4.0};
    case 1:
    case 2: return random_ref();
    case 3: {
      static const binary_op ops[] = {binary_op::add, binary_op::sub, binary_op::mul, binary_op::div,
                                      binary_op::pow, binary_op::lt,  binary_op::ne};
      return make_binary(ops[pick(0, 6)], random_expr(rng, cols, rows, sheet, depth - 1, allow_abs),
                         random_expr(rng, cols, rows, sheet, depth - 1, allow_abs));
    }
    case 4: return make_negate(random_expr(rng, cols, rows, sheet, depth - 1, allow_abs));
    case 5: {
      ref a = random_ref(), b = random_ref();
      if (a.target.col > b.target.col) std::swap(a.target.col, b.target.col);
      if (a.target.row > b.target.row) std::swap(a.target.row, b.target.row);
      return call{"SUM", {range_ref{a, b}}};
    }
    default:
      return call{"MAX", {random_expr(rng, cols, rows, sheet, depth - 1, allow_abs),
                          random_expr(rng, cols, rows, sheet, depth - 1, allow_abs)}};
  }
}

/// Random workbook with at most max_dim columns and rows; roughly half the
/// grid is filled with numbers, text and formulas.
inline workbook random_workbook(std::mt19937& rng, int max_dim, const std::string& sheet = "Sheet1") {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  int cols = pick(1, max_dim), rows = pick(1, max_dim);
  workbook wb;
  for (int c = 1; c <= cols; ++c) {
    for (int r = 1; r <= rows; ++r) {
      address a{sheet, c, r};
      switch (pick(0, 5)) {
        case 0:
        case 1: break;
        case 2: wb.set(a, number_cell{static_cast<double>(pick(-200, 200)) / 8.0}); break;
        case 3: {
          static const char* words[] = {"Income", "Total", "x", "Net profit", "a\tb", "line\nbreak", "back\\slash"};
          wb.set(a, text_cell{words[pick(0, 6)]});
          break;
        }
        default: {
          expr e = random_expr(rng, cols, rows, sheet, 2);
          wb.set(a, make_formula(print_formula(e), a));
        }
      }
    }
  }
  return wb;
}

/// Moves every relative axis of every reference by (dc, dr). Returns false if
/// some coordinate would leave the sheet.
inline bool shift_refs(const expr& e, int dc, int dr, expr& out) {
  bool ok = true;
  auto move = [&](ref r) {
    if (!r.col_abs) r.target.col += dc;
    if (!r.row_abs) r.target.row += dr;
    if (r.target.col < 1 || r.target.row < 1) ok = false;
    return r;
  };
  out = transform(e, [&](expr node) -> expr {
    if (auto* r = std::get_if<ref>(&node.node)) return move(*r);
    if (auto* r = std::get_if<range_ref>(&node.node)) return range_ref{move(r->from), move(r->to)};
    return node;
  });
  return ok;
}

// ---------------------------------------------------------------------------
// Dependency reachability by plain BFS over formula references.

inline std::set<address> bfs_reach(const workbook& wb, const address& start) {
  auto direct = [&](const address& a) {
    std::vector<address> out;
    if (auto* c = wb.find(a))
      if (auto* f = std::get_if<formula_cell>(c)) out = refs_of(f->ast);
    return out;
  };
  std::set<address> seen;
  std::deque<address> queue;
  for (const auto& d : direct(start)) queue.push_back(d);
  while (!queue.empty()) {
    address a = queue.front();
    queue.pop_front();
    if (!seen.insert(a).second) continue;
    for (const auto& d : direct(a)) queue.push_back(d);
  }
  return seen;
}

// ---------------------------------------------------------------------------
// Reference matcher: enumerates outcomes as explicit sets of states instead of
// backtracking. Handles patterns without rule references.

struct oracle_state {
  std::vector<address> cells;
  int col, row;
  friend bool operator<(const oracle_state& a, const oracle_state& b) {
    return std::tie(a.cells, a.col, a.row) < std::tie(b.cells, b.col, b.row);
  }
  friend bool operator==(const oracle_state&, const oracle_state&) = default;
};

class oracle_matcher {
 public:
  oracle_matcher(const fact_base& fb, const predicate_registry& reg, const std::string& sheet)
      : fb_(fb), reg_(reg), sheet_(sheet), limits_(fb.book().bounds_of(sheet)) {}

  std::set<oracle_state> run(const pattern& p, const oracle_state& s) const {
    std::set<oracle_state> out;
    if (auto* t = std::get_if<terminal>(&p.node)) {
      address a{sheet_, s.col, s.row};
      if (reg_.eval(t->predicate, fb_, a)) {
        oracle_state n = s;
        n.cells.push_back(a);
        out.insert(n);
      }
    } else if (auto* m = std::get_if<step>(&p.node)) {
      oracle_state n = s;
      (m->dir == axis::down ? n.row : n.col) += m->n;
      out.insert(n);
    } else if (auto* q = std::get_if<seq>(&p.node)) {
      std::set<oracle_state> cur{s};
      for (const auto& item : q->items) cur = run_all(item, cur);
      out = cur;
    } else if (auto* a = std::get_if<alt>(&p.node)) {
      for (const auto& o : a->options) {
        auto r = run(o, s);
        out.insert(r.begin(), r.end());
      }
    } else if (auto* o = std::get_if<opt>(&p.node)) {
      out = run(*o->inner, s);
      out.insert(s);
    } else if (auto* r = std::get_if<repeat>(&p.node)) {
      if (r->count) {
        std::set<oracle_state> cur{s};
        for (int i = 0; i < *r->count; ++i) cur = run_all(*r->inner, cur);
        out = cur;
      } else {
        out = star(*r->inner, s);
      }
    } else if (auto* b = std::get_if<both>(&p.node)) {
      for (const auto& l : run(*b->lhs, s)) {
        oracle_state mid{l.cells, s.col, s.row};
        for (const auto& rr : run(*b->rhs, mid)) out.insert(oracle_state{rr.cells, s.col, s.row});
      }
    }
    return out;
  }

 private:
  std::set<oracle_state> run_all(const pattern& p, const std::set<oracle_state>& in) const {
    std::set<oracle_state> out;
    for (const auto& s : in) {
      auto r = run(p, s);
      out.insert(r.begin(), r.end());
    }
    return out;
  }

  // Every iteration count: iteration k+1 may start only inside the occupied
  // box and only after a iteration that moved.
  std::set<oracle_state> star(const pattern& inner, const oracle_state& s) const {
    std::set<oracle_state> out{s};
    std::set<oracle_state> frontier{s};
    while (!frontier.empty()) {
      std::set<oracle_state> next;
      for (const auto& f : frontier) {
        if (f.col > limits_.max_col || f.row > limits_.max_row) continue;
        for (const auto& r : run(inner, f)) {
          out.insert(r);
          if (r.col != f.col || r.row != f.row) next.insert(r);
        }
      }
      frontier = std::move(next);
    }
    return out;
  }

  const fact_base& fb_;
  const predicate_registry& reg_;
  std::string sheet_;
  bounds limits_;
};

/// (bound cells, end cursor) pairs of a match list for comparison with the oracle.
inline std::set<oracle_state> outcome_set(const std::vector<match>& ms) {
  std::set<oracle_state> out;
  for (const auto& m : ms) {
    std::vector<address> cells;
    for (const auto& b : m.bindings) cells.insert(cells.end(), b.cells.begin(), b.cells.end());
    out.insert(oracle_state{cells, m.end.col, m.end.row});
  }
  return out;
}

/// Random pattern of nesting depth <= depth over terminals, moves, Seq, Alt,
/// Opt, Repeat (exact 1..3 or star) and And.
inline pattern random_pattern(std::mt19937& rng, int depth) {
  static const char* preds[] = {"label", "cell", "empty", "number", "text", "formula"};
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto leaf = [&]() -> pattern {
    if (pick(0, 2) == 0) return step{pick(0, 1) ? axis::down : axis::along, pick(1, 2)};
    return terminal{preds[pick(0, 5)]};
  };
  if (depth <= 0) return leaf();
  switch (pick(0, 6)) {
    case 0: return leaf();
    case 1: {
      seq s;
      int n = pick(2, 3);
      for (int i = 0; i < n; ++i) s.items.push_back(random_pattern(rng, depth - 1));
      return s;
    }
    case 2: return alt{{random_pattern(rng, depth - 1), random_pattern(rng, depth - 1)}};
    case 3: return opt{box<pattern>(random_pattern(rng, depth - 1))};
    case 4: return repeat{box<pattern>(random_pattern(rng, depth - 1)), pick(1, 3)};
    case 5: {
      // Star bodies always contain a move so every iteration can make progress.
      seq body{{random_pattern(rng, depth - 1), step{pick(0, 1) ? axis::down : axis::along, 1}}};
      return repeat{box<pattern>(pattern(std::move(body))), std::nullopt};
    }
    default: return both{box<pattern>(random_pattern(rng, depth - 1)), box<pattern>(random_pattern(rng, depth - 1))};
  }
}

/// Fills a cols x rows grid from a code in base 3: 0 empty, 1 number, 2 label text.
inline workbook grid_from_code(long code, int cols, int rows) {
  workbook wb;
  for (int r = 1; r <= rows; ++r)
    for (int c = 1; c <= cols; ++c) {
      int sym = static_cast<int>(code % 3);
      code /= 3;
      if (sym == 1) wb.set(address{"Sheet1", c, r}, number_cell{1});
      if (sym == 2) wb.set(address{"Sheet1", c, r}, text_cell{"L"});
    }
  return wb;
}

// ---------------------------------------------------------------------------
// Random transform sequences

/// Proposes a random operation against `m`; it may or may not be applicable.
inline operation random_operation(std::mt19937& rng, const model& m, int& fresh) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::vector<const attribute*> singles, all;
  for (const auto& a : m.attributes) {
    all.push_back(&a);
    if (a.size() == 1 && a.labels.empty()) singles.push_back(&a);
  }
  auto any_attr = [&]() -> std::string { return all.empty() ? "nothing" : all[pick(0, all.size() - 1)]->name; };
  switch (pick(0, 9)) {
    case 0:
    case 1:
    case 2:
    case 3: {
      group_op g;
      g.name = "g" + std::to_string(++fresh);
      if (singles.empty()) return g;
      // Either a vertical run (column-like) or a random handful.
      const attribute* first = singles[pick(0, singles.size() - 1)];
      if (pick(0, 1)) {
        address a = first->layout[0];
        int n = pick(1, 4);
        for (int i = 0; i < n; ++i) {
          address b{a.sheet, a.col, a.row + i};
          auto* o = m.owner_of(b);
          if (o && o->size() == 1 && o->labels.empty()) g.cells.push_back(b);
        }
      } else {
        int n = pick(1, 3);
        for (int i = 0; i < n; ++i) {
          const auto* s = singles[pick(0, singles.size() - 1)];
          if (std::find(g.cells.begin(), g.cells.end(), s->layout[0]) == g.cells.end()) g.cells.push_back(s->layout[0]);
        }
      }
      return g;
    }
    case 4: return rename_op{any_attr(), "r" + std::to_string(++fresh)};
    case 5: return ungroup_op{any_attr()};
    case 6: return name_from_label_op{any_attr()};
    case 7: return reindex_op{any_attr(), {}};
    case 8: return generalize_op{any_attr()};
    default: return rename_op{any_attr(), any_attr()};
  }
}

}  // namespace sgtest
