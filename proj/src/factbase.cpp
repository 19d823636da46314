#include "sheetgram/factbase.hpp"

#include <algorithm>
#include <cctype>
#include <deque>

#include "sheetgram/error.hpp"

namespace sheetgram {

namespace {
const std::set<address> no_addresses;
}

fact_base::fact_base(workbook wb) : wb_(std::move(wb)) {
  for (const auto& [a, content] : wb_.cells()) {
    const auto* f = std::get_if<formula_cell>(&content);
    if (!f) continue;
    auto refs = refs_of(f->ast);
    auto& prec = precedents_[a];
    for (const auto& d : refs) {
      prec.insert(d);
      dependents_[d].insert(a);
    }
    offset_forms_.emplace(a, to_offset_form(f->ast, a));
  }
  for (const auto& [a, content] : wb_.cells()) {
    if (std::holds_alternative<text_cell>(content) && dependents(a).empty()) labels_.insert(a);
  }
}

const std::set<address>& fact_base::depends_on(const address& c) const {
  auto it = precedents_.find(c);
  return it == precedents_.end() ? no_addresses : it->second;
}

const std::set<address>& fact_base::dependents(const address& c) const {
  auto it = dependents_.find(c);
  return it == dependents_.end() ? no_addresses : it->second;
}

std::set<address> fact_base::depends_on_transitive(const address& c) const {
  std::set<address> seen;
  std::vector<address> stack(depends_on(c).begin(), depends_on(c).end());
  while (!stack.empty()) {
    address d = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(d).second) continue;
    for (const auto& e : depends_on(d))
      if (!seen.count(e)) stack.push_back(e);
  }
  return seen;
}

bool fact_base::is_label(const address& c) const { return labels_.count(c) != 0; }

std::vector<std::vector<address>> fact_base::detect_cycles() const {
  // Iterative Tarjan over formula cells (only they have outgoing edges).
  struct info {
    int index = -1;
    int low = 0;
    bool on_stack = false;
  };
  std::map<address, info> state;
  std::vector<address> stack;
  std::vector<std::vector<address>> out;
  int counter = 0;

  for (const auto& [root, unused] : precedents_) {
    if (state[root].index >= 0) continue;
    struct frame {
      address node;
      std::set<address>::const_iterator next, end;
    };
    std::vector<frame> call;
    auto enter = [&](const address& v) {
      auto& s = state[v];
      s.index = s.low = counter++;
      s.on_stack = true;
      stack.push_back(v);
      const auto& succ = depends_on(v);
      call.push_back({v, succ.begin(), succ.end()});
    };
    enter(root);
    while (!call.empty()) {
      auto& top = call.back();
      if (top.next != top.end) {
        address w = *top.next++;
        auto& ws = state[w];
        if (ws.index < 0) {
          enter(w);
        } else if (ws.on_stack) {
          auto& vs = state[top.node];
          vs.low = std::min(vs.low, ws.index);
        }
        continue;
      }
      address v = top.node;
      call.pop_back();
      auto& vs = state[v];
      if (!call.empty()) {
        auto& ps = state[call.back().node];
        ps.low = std::min(ps.low, vs.low);
      }
      if (vs.low != vs.index) continue;
      std::vector<address> component;
      for (;;) {
        address w = stack.back();
        stack.pop_back();
        state[w].on_stack = false;
        component.push_back(w);
        if (w == v) break;
      }
      bool self_loop = component.size() == 1 && depends_on(v).count(v);
      if (component.size() >= 2 || self_loop) {
        std::sort(component.begin(), component.end());
        out.push_back(std::move(component));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

const expr* fact_base::offset_form(const address& c) const {
  auto it = offset_forms_.find(c);
  return it == offset_forms_.end() ? nullptr : &it->second;
}

bool fact_base::copy_of(const address& c, const address& d) const {
  const expr* a = offset_form(c);
  const expr* b = offset_form(d);
  return a && b && *a == *b;
}

bool fact_base::column_all_copies(const std::string& sheet, int col, int row_from, int row_to) const {
  if (row_from > row_to) throw invalid("row_from must not exceed row_to");
  address first{sheet, col, row_from};
  if (!offset_form(first)) return false;
  for (int row = row_from + 1; row <= row_to; ++row)
    if (!copy_of(first, address{sheet, col, row})) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Predicates

predicate_expr pred(std::string name) { return {predicate_expr::name_node{std::move(name)}}; }
predicate_expr pred_all(predicate_expr a, predicate_expr b) {
  return {predicate_expr::and_node{std::move(a), std::move(b)}};
}
predicate_expr pred_any(predicate_expr a, predicate_expr b) {
  return {predicate_expr::or_node{std::move(a), std::move(b)}};
}
predicate_expr pred_negate(predicate_expr a) { return {predicate_expr::not_node{std::move(a)}}; }

namespace {

class predicate_parser {
 public:
  explicit predicate_parser(std::string_view text) : text_(text) {}

  predicate_expr parse() {
    auto e = disjunction();
    skip();
    if (pos_ != text_.size()) fail("unexpected input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw parse_error(msg + " in predicate '" + std::string(text_) + "'", 0, pos_ + 1);
  }
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  std::string word() {
    skip();
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }
  bool keyword(std::string_view kw) {
    std::size_t save = pos_;
    if (word() == kw) return true;
    pos_ = save;
    return false;
  }

  predicate_expr disjunction() {
    auto lhs = conjunction();
    while (keyword("OR")) lhs = pred_any(std::move(lhs), conjunction());
    return lhs;
  }
  predicate_expr conjunction() {
    auto lhs = negation();
    while (keyword("AND")) lhs = pred_all(std::move(lhs), negation());
    return lhs;
  }
  predicate_expr negation() {
    if (keyword("NOT")) return pred_negate(negation());
    skip();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      auto inner = disjunction();
      skip();
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
      ++pos_;
      return inner;
    }
    std::size_t start = pos_;
    std::string name = word();
    if (name.empty()) fail("expected a predicate name");
    if (!std::islower(static_cast<unsigned char>(name.front())) && name.front() != '_') {
      pos_ = start;
      fail("predicate names are lower case");
    }
    return pred(std::move(name));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

enum class builtin { label, cell, empty, number, text, formula };

const std::map<std::string, builtin, std::less<>>& builtins() {
  static const std::map<std::string, builtin, std::less<>> table{
      {"label", builtin::label},   {"cell", builtin::cell}, {"empty", builtin::empty},
      {"number", builtin::number}, {"text", builtin::text}, {"formula", builtin::formula},
  };
  return table;
}

bool eval_builtin(builtin b, const fact_base& fb, const address& c) {
  const cell_content* content = fb.book().find(c);
  switch (b) {
    case builtin::empty: return content == nullptr;
    case builtin::label: return fb.is_label(c);
    case builtin::number: return content && std::holds_alternative<number_cell>(*content);
    case builtin::text: return content && std::holds_alternative<text_cell>(*content);
    case builtin::formula: return content && std::holds_alternative<formula_cell>(*content);
    case builtin::cell:
      // Numbers and formulas always; text only when something computes with it.
      if (!content) return false;
      return !std::holds_alternative<text_cell>(*content) || !fb.is_label(c);
  }
  return false;
}

void collect_names(const predicate_expr& e, std::vector<std::string>& out) {
  std::visit(overloaded{
                 [&](const predicate_expr::name_node& n) { out.push_back(n.name); },
                 [&](const predicate_expr::and_node& n) {
                   collect_names(*n.lhs, out);
                   collect_names(*n.rhs, out);
                 },
                 [&](const predicate_expr::or_node& n) {
                   collect_names(*n.lhs, out);
                   collect_names(*n.rhs, out);
                 },
                 [&](const predicate_expr::not_node& n) { collect_names(*n.operand, out); },
             },
             e.node);
}

}  // namespace

predicate_expr parse_predicate(std::string_view text) { return predicate_parser(text).parse(); }

predicate_registry::predicate_registry() = default;

const std::vector<std::string>& predicate_registry::builtin_names() {
  static const std::vector<std::string> names{"label", "cell", "empty", "number", "text", "formula"};
  return names;
}

bool predicate_registry::contains(std::string_view name) const {
  return builtins().count(name) != 0 || user_.count(name) != 0;
}

void predicate_registry::define(const std::string& name, predicate_expr body) {
  if (name.empty() || !(std::islower(static_cast<unsigned char>(name.front())) || name.front() == '_') ||
      !std::all_of(name.begin(), name.end(),
                   [](char c) { return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_'; }))
    throw invalid("predicate names are lower-case identifiers: '" + name + "'");
  if (builtins().count(name)) throw conflict("cannot redefine built-in predicate '" + name + "'");
  if (user_.count(name)) throw conflict("predicate '" + name + "' is already defined");
  std::vector<std::string> used;
  collect_names(body, used);
  for (const auto& u : used)
    if (!contains(u)) throw not_found("unknown predicate '" + u + "' in definition of '" + name + "'");
  user_.emplace(name, std::move(body));
}

std::vector<std::string> predicate_registry::names() const {
  std::vector<std::string> out = builtin_names();
  for (const auto& [name, body] : user_) out.push_back(name);
  return out;
}

bool predicate_registry::eval(std::string_view name, const fact_base& fb, const address& c) const {
  if (auto it = builtins().find(name); it != builtins().end()) return eval_builtin(it->second, fb, c);
  if (auto it = user_.find(name); it != user_.end()) return eval_expr(it->second, fb, c);
  throw not_found("unknown predicate '" + std::string(name) + "'");
}

bool predicate_registry::eval_expr(const predicate_expr& e, const fact_base& fb, const address& c) const {
  return std::visit(overloaded{
                        [&](const predicate_expr::name_node& n) { return eval(n.name, fb, c); },
                        [&](const predicate_expr::and_node& n) {
                          return eval_expr(*n.lhs, fb, c) && eval_expr(*n.rhs, fb, c);
                        },
                        [&](const predicate_expr::or_node& n) {
                          return eval_expr(*n.lhs, fb, c) || eval_expr(*n.rhs, fb, c);
                        },
                        [&](const predicate_expr::not_node& n) { return !eval_expr(*n.operand, fb, c); },
                    },
                    e.node);
}

}  // namespace sheetgram
