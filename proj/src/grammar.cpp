#include "sheetgram/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <tuple>

#include "sheetgram/error.hpp"

namespace sheetgram {

namespace {

bool is_consuming(const pattern& p);

bool starts_with_move(const pattern& p) {
  return std::visit(overloaded{
                        [](const terminal&) { return false; },
                        [](const step&) { return true; },
                        [](const seq& s) { return !s.items.empty() && starts_with_move(s.items.front()); },
                        [](const alt& a) {
                          return std::all_of(a.options.begin(), a.options.end(),
                                             [](const pattern& o) { return starts_with_move(o); });
                        },
                        [](const opt& o) { return starts_with_move(*o.inner); },
                        [](const repeat& r) { return starts_with_move(*r.inner); },
                        [](const both& b) { return starts_with_move(*b.lhs) && starts_with_move(*b.rhs); },
                        [](const rule_ref&) { return false; },
                    },
                    p.node);
}

bool ends_with_move(const pattern& p) {
  return std::visit(overloaded{
                        [](const terminal&) { return false; },
                        [](const step&) { return true; },
                        [](const seq& s) { return !s.items.empty() && ends_with_move(s.items.back()); },
                        [](const alt& a) {
                          return std::all_of(a.options.begin(), a.options.end(),
                                             [](const pattern& o) { return ends_with_move(o); });
                        },
                        [](const opt& o) { return ends_with_move(*o.inner); },
                        [](const repeat& r) { return ends_with_move(*r.inner); },
                        // AND puts the cursor back, so it never ends on a move.
                        [](const both&) { return false; },
                        [](const rule_ref&) { return false; },
                    },
                    p.node);
}

bool is_consuming(const pattern& p) {
  return std::visit(overloaded{
                        [](const terminal&) { return true; },
                        [](const step&) { return false; },
                        [](const seq& s) { return std::any_of(s.items.begin(), s.items.end(), is_consuming); },
                        [](const alt& a) {
                          return std::any_of(a.options.begin(), a.options.end(), is_consuming);
                        },
                        [](const opt& o) { return is_consuming(*o.inner); },
                        [](const repeat& r) { return is_consuming(*r.inner); },
                        [](const both&) { return true; },
                        [](const rule_ref&) { return true; },
                    },
                    p.node);
}

pattern make_seq(std::vector<pattern> items) {
  std::vector<pattern> out;
  for (auto& item : items) {
    if (!out.empty() && is_consuming(out.back()) && is_consuming(item) && !ends_with_move(out.back()) &&
        !starts_with_move(item))
      out.push_back(step{axis::along, 1});
    out.push_back(std::move(item));
  }
  if (out.size() == 1) return std::move(out.front());
  return seq{std::move(out)};
}

// ---------------------------------------------------------------------------
// Tokens

enum class tok { ident, down, along, and_kw, bar, question, star, number, lparen, rparen, arrow, end };

struct token {
  tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

struct source_line {
  std::size_t number;
  std::string text;
};

std::vector<token> tokenize(const std::vector<source_line>& lines) {
  std::vector<token> out;
  for (const auto& [line_no, text] : lines) {
    std::size_t i = 0;
    while (i < text.size()) {
      char c = text[i];
      std::size_t col = i + 1;
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      if (text.compare(i, 3, "-->") == 0) {
        out.push_back({tok::arrow, "-->", line_no, col});
        i += 3;
        continue;
      }
      auto single = [&](tok k) {
        out.push_back({k, std::string(1, c), line_no, col});
        ++i;
      };
      switch (c) {
        case '|': single(tok::bar); continue;
        case '?': single(tok::question); continue;
        case '*': single(tok::star); continue;
        case '(': single(tok::lparen); continue;
        case ')': single(tok::rparen); continue;
        default: break;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t start = i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        out.push_back({tok::number, text.substr(start, i - start), line_no, col});
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = i;
        while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
        std::string word = text.substr(start, i - start);
        if (word == "DOWN") {
          out.push_back({tok::down, word, line_no, col});
        } else if (word == "ALONG") {
          out.push_back({tok::along, word, line_no, col});
        } else if (word == "AND") {
          out.push_back({tok::and_kw, word, line_no, col});
        } else if (std::all_of(word.begin(), word.end(), [](char ch) {
                     return std::islower(static_cast<unsigned char>(ch)) ||
                            std::isdigit(static_cast<unsigned char>(ch)) || ch == '_';
                   })) {
          out.push_back({tok::ident, word, line_no, col});
        } else {
          throw parse_error("unknown token '" + word + "'", line_no, col);
        }
        continue;
      }
      throw parse_error("unknown token '" + std::string(1, c) + "'", line_no, col);
    }
  }
  std::size_t last_line = lines.empty() ? 1 : lines.back().number;
  std::size_t last_col = lines.empty() ? 1 : lines.back().text.size() + 1;
  out.push_back({tok::end, "", last_line, last_col});
  return out;
}

class rule_parser {
 public:
  explicit rule_parser(std::vector<token> tokens) : toks_(std::move(tokens)) {}

  rule parse() {
    const token& name = next();
    if (name.kind != tok::ident) fail(name, "expected a lower-case rule name");
    if (next().kind != tok::arrow) fail(toks_[pos_ - 1], "expected '-->' after rule name");
    if (peek().kind == tok::end) fail(peek(), "empty rule body");
    pattern body = alternation();
    if (peek().kind != tok::end) fail(peek(), "unexpected '" + peek().text + "'");
    return rule{name.text, std::move(body)};
  }

 private:
  [[noreturn]] static void fail(const token& t, const std::string& msg) { throw parse_error(msg, t.line, t.column); }
  const token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const token& next() {
    const token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }

  pattern alternation() {
    std::vector<pattern> options;
    options.push_back(conjunction());
    while (peek().kind == tok::bar) {
      next();
      options.push_back(conjunction());
    }
    if (options.size() == 1) return std::move(options.front());
    return alt{std::move(options)};
  }

  pattern conjunction() {
    pattern lhs = sequence();
    while (peek().kind == tok::and_kw) {
      next();
      lhs = both{std::move(lhs), sequence()};
    }
    return lhs;
  }

  pattern sequence() {
    std::vector<pattern> items;
    for (;;) {
      tok k = peek().kind;
      if (k == tok::end || k == tok::bar || k == tok::and_kw || k == tok::rparen) break;
      items.push_back(postfix());
    }
    if (items.empty()) fail(peek(), "expected a pattern");
    return make_seq(std::move(items));
  }

  pattern postfix() {
    pattern p = atom();
    for (;;) {
      if (peek().kind == tok::question) {
        next();
        p = opt{std::move(p)};
      } else if (peek().kind == tok::star) {
        next();
        std::optional<int> count;
        if (peek().kind == tok::number) count = positive(next());
        p = repeat{std::move(p), count};
      } else {
        return p;
      }
    }
  }

  int positive(const token& t) {
    if (t.text.size() > 9) fail(t, "count too large");
    int n = std::stoi(t.text);
    if (n <= 0) fail(t, "count must be at least 1");
    return n;
  }

  pattern atom() {
    const token& t = next();
    switch (t.kind) {
      case tok::ident: return terminal{t.text};
      case tok::down:
      case tok::along: {
        int n = 1;
        if (peek().kind == tok::lparen && peek(1).kind == tok::number && peek(2).kind == tok::rparen) {
          next();
          n = positive(next());
          next();
        }
        return step{t.kind == tok::down ? axis::down : axis::along, n};
      }
      case tok::lparen: {
        pattern inner = alternation();
        if (next().kind != tok::rparen) fail(toks_[pos_ - 1], "expected ')'");
        return inner;
      }
      case tok::end: fail(t, "unexpected end of rule");
      case tok::number: fail(t, "unexpected number '" + t.text + "'");
      default: fail(t, "unexpected '" + t.text + "'");
    }
  }

  std::vector<token> toks_;
  std::size_t pos_ = 0;
};

void resolve(pattern& p, const std::set<std::string>& rule_names) {
  std::visit(overloaded{
                 [&](terminal& t) {
                   if (rule_names.count(t.predicate)) p = pattern(rule_ref{t.predicate});
                 },
                 [](step&) {},
                 [&](seq& s) {
                   for (auto& item : s.items) resolve(item, rule_names);
                 },
                 [&](alt& a) {
                   for (auto& o : a.options) resolve(o, rule_names);
                 },
                 [&](opt& o) { resolve(*o.inner, rule_names); },
                 [&](repeat& r) { resolve(*r.inner, rule_names); },
                 [&](both& b) {
                   resolve(*b.lhs, rule_names);
                   resolve(*b.rhs, rule_names);
                 },
                 [](rule_ref&) {},
             },
             p.node);
}

template <class F>
void for_each_node(const pattern& p, F&& f) {
  f(p);
  std::visit(overloaded{
                 [](const terminal&) {},
                 [](const step&) {},
                 [&](const seq& s) {
                   for (const auto& item : s.items) for_each_node(item, f);
                 },
                 [&](const alt& a) {
                   for (const auto& o : a.options) for_each_node(o, f);
                 },
                 [&](const opt& o) { for_each_node(*o.inner, f); },
                 [&](const repeat& r) { for_each_node(*r.inner, f); },
                 [&](const both& b) {
                   for_each_node(*b.lhs, f);
                   for_each_node(*b.rhs, f);
                 },
                 [](const rule_ref&) {},
             },
             p.node);
}

bool progress_via(const pattern& p, const grammar& g, std::set<std::string>& visited) {
  bool found = false;
  for_each_node(p, [&](const pattern& n) {
    if (found) return;
    if (std::holds_alternative<terminal>(n.node) || std::holds_alternative<step>(n.node)) {
      found = true;
    } else if (auto* r = std::get_if<rule_ref>(&n.node)) {
      if (visited.insert(r->name).second) {
        if (const pattern* body = g.find(r->name)) found = progress_via(*body, g, visited);
      }
    }
  });
  return found;
}

// Can `p` succeed without binding a cell or moving?
bool transparent(const pattern& p, const grammar& g, std::set<std::string>& visiting) {
  return std::visit(overloaded{
                        [](const terminal&) { return false; },
                        [](const step&) { return false; },
                        [&](const seq& s) {
                          return std::all_of(s.items.begin(), s.items.end(),
                                             [&](const pattern& i) { return transparent(i, g, visiting); });
                        },
                        [&](const alt& a) {
                          return std::any_of(a.options.begin(), a.options.end(),
                                             [&](const pattern& o) { return transparent(o, g, visiting); });
                        },
                        [](const opt&) { return true; },
                        [&](const repeat& r) { return !r.count || transparent(*r.inner, g, visiting); },
                        [&](const both& b) {
                          return transparent(*b.lhs, g, visiting) && transparent(*b.rhs, g, visiting);
                        },
                        [&](const rule_ref& r) {
                          const pattern* body = g.find(r.name);
                          if (!body || !visiting.insert(r.name).second) return false;
                          bool t = transparent(*body, g, visiting);
                          visiting.erase(r.name);
                          return t;
                        },
                    },
                    p.node);
}

// Rules that can be entered at the starting cursor before anything is bound
// or moved.
void leading_refs(const pattern& p, const grammar& g, std::set<std::string>& out) {
  std::visit(overloaded{
                 [](const terminal&) {},
                 [](const step&) {},
                 [&](const seq& s) {
                   for (const auto& item : s.items) {
                     leading_refs(item, g, out);
                     std::set<std::string> visiting;
                     if (!transparent(item, g, visiting)) break;
                   }
                 },
                 [&](const alt& a) {
                   for (const auto& o : a.options) leading_refs(o, g, out);
                 },
                 [&](const opt& o) { leading_refs(*o.inner, g, out); },
                 [&](const repeat& r) { leading_refs(*r.inner, g, out); },
                 [&](const both& b) {
                   leading_refs(*b.lhs, g, out);
                   leading_refs(*b.rhs, g, out);
                 },
                 [&](const rule_ref& r) { out.insert(r.name); },
             },
             p.node);
}

std::string render(const pattern& p);

std::string render_child(const pattern& p) {
  bool simple = std::holds_alternative<terminal>(p.node) || std::holds_alternative<step>(p.node) ||
                std::holds_alternative<rule_ref>(p.node);
  return simple ? render(p) : "(" + render(p) + ")";
}

std::string render(const pattern& p) {
  return std::visit(overloaded{
                        [](const terminal& t) { return t.predicate; },
                        [](const step& s) {
                          std::string word = s.dir == axis::down ? "DOWN" : "ALONG";
                          return s.n == 1 ? word : word + "(" + std::to_string(s.n) + ")";
                        },
                        [&](const seq& s) {
                          std::string out;
                          for (const auto& item : s.items) {
                            if (!out.empty()) out += ' ';
                            out += std::holds_alternative<alt>(item.node) || std::holds_alternative<both>(item.node)
                                       ? render_child(item)
                                       : render(item);
                          }
                          return out;
                        },
                        [&](const alt& a) {
                          std::string out;
                          for (const auto& o : a.options) {
                            if (!out.empty()) out += " | ";
                            out += render(o);
                          }
                          return out;
                        },
                        [](const opt& o) { return render_child(*o.inner) + "?"; },
                        [](const repeat& r) {
                          return render_child(*r.inner) + "*" + (r.count ? std::to_string(*r.count) : "");
                        },
                        [](const both& b) {
                          auto side = [](const pattern& x) {
                            return std::holds_alternative<alt>(x.node) ? render_child(x) : render(x);
                          };
                          return side(*b.lhs) + " AND " + side(*b.rhs);
                        },
                        [](const rule_ref& r) { return r.name; },
                    },
                    p.node);
}

}  // namespace

std::string to_string(const pattern& p) { return render(p); }

const pattern* grammar::find(std::string_view name) const {
  for (const auto& r : rules_)
    if (r.name == name) return &r.body;
  return nullptr;
}

std::vector<std::string> grammar::roots() const {
  std::set<std::string> referenced;
  for (const auto& r : rules_) {
    for_each_node(r.body, [&](const pattern& n) {
      if (auto* ref = std::get_if<rule_ref>(&n.node); ref && ref->name != r.name) referenced.insert(ref->name);
    });
  }
  std::vector<std::string> out;
  for (const auto& r : rules_)
    if (!referenced.count(r.name)) out.push_back(r.name);
  return out;
}

bool makes_progress(const pattern& p, const grammar& g) {
  std::set<std::string> visited;
  return progress_via(p, g, visited);
}

grammar parse_grammar(std::string_view text) {
  // Split into per-rule chunks of lines.
  std::vector<std::vector<source_line>> chunks;
  int depth = 0;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string line(text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
      continue;
    bool starts_rule = line.find("-->") != std::string::npos && depth <= 0;
    if (starts_rule) {
      chunks.emplace_back();
      depth = 0;
    } else if (chunks.empty()) {
      auto col = line.find_first_not_of(" \t") + 1;
      throw parse_error("expected 'name --> pattern'", line_no, col);
    }
    for (char c : line) depth += c == '(' ? 1 : c == ')' ? -1 : 0;
    chunks.back().push_back({line_no, std::move(line)});
  }

  std::vector<rule> parsed;
  std::map<std::string, std::size_t> first_line;
  for (const auto& chunk : chunks) {
    parsed.push_back(rule_parser(tokenize(chunk)).parse());
    first_line.emplace(parsed.back().name, chunk.front().number);
  }

  // Join repeated names as alternatives, keeping first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<pattern>> bodies;
  for (auto& r : parsed) {
    auto& list = bodies[r.name];
    if (list.empty()) order.push_back(r.name);
    list.push_back(std::move(r.body));
  }
  std::vector<rule> rules;
  for (const auto& name : order) {
    auto& list = bodies[name];
    if (list.size() == 1)
      rules.push_back(rule{name, std::move(list.front())});
    else
      rules.push_back(rule{name, alt{std::move(list)}});
  }

  std::set<std::string> names;
  for (const auto& r : rules) names.insert(r.name);
  for (auto& r : rules) resolve(r.body, names);

  grammar g(std::move(rules));
  for (const auto& r : g.rules()) {
    for_each_node(r.body, [&](const pattern& n) {
      if (auto* rep = std::get_if<repeat>(&n.node); rep && !rep->count && !makes_progress(*rep->inner, g))
        throw parse_error("rule '" + r.name + "': '" + to_string(n) + "' repeats a pattern that neither binds a cell nor moves",
                          first_line[r.name], 1);
    });
  }
  return g;
}

std::vector<diagnostic> validate_grammar(const grammar& g, const predicate_registry& reg) {
  std::vector<diagnostic> out;
  std::set<std::string> builtins(predicate_registry::builtin_names().begin(),
                                 predicate_registry::builtin_names().end());
  for (const auto& r : g.rules()) {
    if (builtins.count(r.name))
      out.push_back({r.name, "rule '" + r.name + "' shadows the built-in predicate of the same name"});
    std::set<std::string> reported;
    for_each_node(r.body, [&](const pattern& n) {
      if (auto* t = std::get_if<terminal>(&n.node)) {
        if (!reg.contains(t->predicate) && reported.insert(t->predicate).second)
          out.push_back({r.name, "unknown predicate '" + t->predicate + "'"});
      } else if (auto* ref = std::get_if<rule_ref>(&n.node)) {
        if (!g.contains(ref->name) && reported.insert(ref->name).second)
          out.push_back({r.name, "unknown rule '" + ref->name + "'"});
      } else if (auto* rep = std::get_if<repeat>(&n.node)) {
        if (!rep->count && !makes_progress(*rep->inner, g))
          out.push_back({r.name, "'" + to_string(n) + "' repeats a pattern that neither binds a cell nor moves"});
      }
    });
  }

  std::map<std::string, std::set<std::string>> edges;
  for (const auto& r : g.rules()) leading_refs(r.body, g, edges[r.name]);
  for (const auto& r : g.rules()) {
    std::set<std::string> seen;
    std::vector<std::string> stack(edges[r.name].begin(), edges[r.name].end());
    bool recursive = false;
    while (!stack.empty() && !recursive) {
      std::string n = stack.back();
      stack.pop_back();
      if (n == r.name) recursive = true;
      if (!seen.insert(n).second) continue;
      for (const auto& m : edges[n]) stack.push_back(m);
    }
    if (recursive)
      out.push_back({r.name, "rule '" + r.name + "' is left recursive (reaches itself without binding or moving)"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matching

std::vector<address> match::cells() const {
  std::vector<address> out;
  std::set<address> seen;
  for (const auto& b : bindings)
    for (const auto& a : b.cells)
      if (seen.insert(a).second) out.push_back(a);
  return out;
}

namespace {

class matcher {
 public:
  matcher(const grammar& g, const fact_base& fb, const predicate_registry& reg, const address& anchor)
      : g_(g), fb_(fb), reg_(reg), anchor_(anchor), limits_(fb.book().bounds_of(anchor.sheet)) {}

  std::vector<match> run(std::string_view rule_name) {
    const pattern* body = g_.find(rule_name);
    if (!body) throw not_found("unknown rule '" + std::string(rule_name) + "'");
    col_ = anchor_.col;
    row_ = anchor_.row;
    entries_.push_back(binding{std::string(rule_name), {}, {}});
    owners_.push_back(0);
    active_.insert({std::string(rule_name), col_, row_});
    eval(*body, [&] { emit(rule_name); });
    return std::move(out_);
  }

 private:
  using cont = std::function<void()>;

  void emit(std::string_view rule_name) {
    std::string key;
    for (const auto& b : entries_) {
      key += b.rule;
      key += ':';
      for (const auto& a : b.cells) key += std::to_string(a.col) + "," + std::to_string(a.row) + ";";
      key += '|';
    }
    key += std::to_string(col_) + "," + std::to_string(row_);
    if (!seen_.insert(key).second) return;
    out_.push_back(match{std::string(rule_name), anchor_, entries_, address{anchor_.sheet, col_, row_}});
  }

  void eval(const pattern& p, const cont& k) {
    std::visit(overloaded{
                   [&](const terminal& t) { eval_terminal(t, k); },
                   [&](const step& s) { eval_step(s, k); },
                   [&](const seq& s) { eval_seq(s.items, 0, k); },
                   [&](const alt& a) {
                     for (const auto& o : a.options) eval(o, k);
                   },
                   [&](const opt& o) {
                     eval(*o.inner, k);
                     k();
                   },
                   [&](const repeat& r) {
                     if (r.count)
                       eval_times(*r.inner, *r.count, k);
                     else
                       eval_star(*r.inner, k);
                   },
                   [&](const both& b) { eval_both(b, k); },
                   [&](const rule_ref& r) { eval_rule(r.name, k); },
               },
               p.node);
  }

  void eval_terminal(const terminal& t, const cont& k) {
    address a{anchor_.sheet, col_, row_};
    if (!reg_.eval(t.predicate, fb_, a)) return;
    std::size_t owner = owners_.back();
    entries_[owner].cells.push_back(a);
    entries_[owner].predicates.push_back(t.predicate);
    k();
    entries_[owner].cells.pop_back();
    entries_[owner].predicates.pop_back();
  }

  void eval_step(const step& s, const cont& k) {
    int c0 = col_, r0 = row_;
    (s.dir == axis::down ? row_ : col_) += s.n;
    if (col_ >= 1 && row_ >= 1 && col_ <= max_col && row_ <= max_row) k();
    col_ = c0;
    row_ = r0;
  }

  void eval_seq(const std::vector<pattern>& items, std::size_t i, const cont& k) {
    if (i == items.size()) return k();
    eval(items[i], [&] { eval_seq(items, i + 1, k); });
  }

  void eval_times(const pattern& inner, int remaining, const cont& k) {
    if (remaining == 0) return k();
    eval(inner, [&] { eval_times(inner, remaining - 1, k); });
  }

  void eval_star(const pattern& inner, const cont& k) {
    // No new iteration once the cursor has left the sheet's occupied area;
    // an iteration that does not move the cursor is the last one.
    if (col_ <= limits_.max_col && row_ <= limits_.max_row) {
      int c0 = col_, r0 = row_;
      eval(inner, [&] {
        if (col_ == c0 && row_ == r0)
          k();
        else
          eval_star(inner, k);
      });
    }
    k();
  }

  void eval_both(const both& b, const cont& k) {
    int c0 = col_, r0 = row_;
    eval(*b.lhs, [&] {
      int c1 = col_, r1 = row_;
      col_ = c0;
      row_ = r0;
      eval(*b.rhs, [&] {
        int c2 = col_, r2 = row_;
        col_ = c0;
        row_ = r0;
        k();
        col_ = c2;
        row_ = r2;
      });
      col_ = c1;
      row_ = r1;
    });
  }

  void eval_rule(const std::string& name, const cont& k) {
    auto key = std::make_tuple(name, col_, row_);
    if (active_.count(key)) return;
    const pattern* body = g_.find(name);
    if (!body) throw not_found("unknown rule '" + name + "'");
    int c0 = col_, r0 = row_;
    std::size_t idx = entries_.size();
    entries_.push_back(binding{name, {}, {}});
    owners_.push_back(idx);
    active_.insert(key);
    eval(*body, [&] {
      int c1 = col_, r1 = row_;
      col_ = c0;
      row_ = r0;
      owners_.pop_back();
      active_.erase(key);
      k();
      active_.insert(key);
      owners_.push_back(idx);
      col_ = c1;
      row_ = r1;
    });
    active_.erase(key);
    owners_.pop_back();
    entries_.pop_back();
  }

  const grammar& g_;
  const fact_base& fb_;
  const predicate_registry& reg_;
  address anchor_;
  bounds limits_;
  int col_ = 1, row_ = 1;
  std::vector<binding> entries_;
  std::vector<std::size_t> owners_;
  std::set<std::tuple<std::string, int, int>> active_;
  std::set<std::string> seen_;
  std::vector<match> out_;
};

}  // namespace

std::vector<match> match_at(const grammar& g, std::string_view rule, const fact_base& fb,
                            const predicate_registry& reg, const address& anchor) {
  return matcher(g, fb, reg, anchor).run(rule);
}

std::vector<match> match_all(const grammar& g, std::string_view rule, const fact_base& fb,
                             const predicate_registry& reg) {
  if (!g.contains(rule)) throw not_found("unknown rule '" + std::string(rule) + "'");
  std::vector<match> out;
  for (const auto& [a, content] : fb.book().cells()) {
    auto found = match_at(g, rule, fb, reg, a);
    std::move(found.begin(), found.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<match> select_cover(const std::vector<match>& matches) {
  std::vector<std::size_t> order(matches.size());
  std::vector<std::size_t> counts(matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) {
    order[i] = i;
    counts[i] = matches[i].cells().size();
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return matches[a].anchor < matches[b].anchor;
  });
  std::set<address> used;
  std::vector<match> out;
  for (std::size_t i : order) {
    auto cells = matches[i].cells();
    if (std::any_of(cells.begin(), cells.end(), [&](const address& a) { return used.count(a) != 0; })) continue;
    used.insert(cells.begin(), cells.end());
    out.push_back(matches[i]);
  }
  return out;
}

}  // namespace sheetgram
