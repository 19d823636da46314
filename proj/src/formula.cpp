#include "sheetgram/formula.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <set>

#include "sheetgram/error.hpp"

namespace sheetgram {

std::string to_string(const index_expr& ix) {
  return std::visit(overloaded{
                        [](const index_const& c) { return std::to_string(c.value); },
                        [](const index_param& p) {
                          if (p.offset == 0) return std::string("t");
                          if (p.offset > 0) return "t+" + std::to_string(p.offset);
                          return "t-" + std::to_string(-p.offset);
                        },
                        [](const index_label& l) { return l.label; },
                    },
                    ix);
}

std::string_view symbol(binary_op op) {
  switch (op) {
    case binary_op::add: return "+";
    case binary_op::sub: return "-";
    case binary_op::mul: return "*";
    case binary_op::div: return "/";
    case binary_op::pow: return "^";
    case binary_op::eq: return "=";
    case binary_op::lt: return "<";
    case binary_op::gt: return ">";
    case binary_op::le: return "<=";
    case binary_op::ge: return ">=";
    case binary_op::ne: return "<>";
  }
  return "?";
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", value);
  return buf;
}

std::optional<double> parse_decimal(std::string_view text) {
  std::size_t i = 0;
  auto digits = [&] {
    std::size_t start = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    return i - start;
  };
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
  std::size_t int_digits = digits();
  std::size_t frac_digits = 0;
  if (i < text.size() && text[i] == '.') {
    ++i;
    frac_digits = digits();
  }
  if (int_digits + frac_digits == 0) return std::nullopt;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
    if (digits() == 0) return std::nullopt;
  }
  if (i != text.size()) return std::nullopt;

  std::string_view body = text;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);
  double value = 0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (ec != std::errc() || ptr != body.data() + body.size()) return std::nullopt;
  return value;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

constexpr long long max_range_cells = 1'000'000;

int precedence(binary_op op) {
  switch (op) {
    case binary_op::eq:
    case binary_op::lt:
    case binary_op::gt:
    case binary_op::le:
    case binary_op::ge:
    case binary_op::ne: return 1;
    case binary_op::add:
    case binary_op::sub: return 2;
    case binary_op::mul:
    case binary_op::div: return 3;
    case binary_op::pow: return 4;
  }
  return 0;
}

class formula_parser {
 public:
  formula_parser(std::string_view src, const address& host) : src_(src), host_(host) {}

  expr parse() {
    if (src_.empty() || src_.front() != '=') fail("formula must start with '='", 0);
    pos_ = 1;
    std::size_t start = skip();
    expr e = comparison();
    skip();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'", pos_);
    no_range(e, start);
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw parse_error(msg + " in formula '" + std::string(src_) + "'", 0, at + 1);
  }

  std::size_t skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    return pos_;
  }

  bool eat(std::string_view tok) {
    skip();
    if (src_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void no_range(const expr& e, std::size_t at) const {
    if (e.is<range_ref>()) fail("range is only allowed as a function argument or comparison operand", at);
  }

  expr comparison() {
    expr lhs = additive();
    for (;;) {
      std::optional<binary_op> op;
      if (eat("<=")) op = binary_op::le;
      else if (eat(">=")) op = binary_op::ge;
      else if (eat("<>")) op = binary_op::ne;
      else if (eat("<")) op = binary_op::lt;
      else if (eat(">")) op = binary_op::gt;
      else if (eat("=")) op = binary_op::eq;
      if (!op) return lhs;
      skip();
      expr rhs = additive();
      lhs = make_binary(*op, std::move(lhs), std::move(rhs));
    }
  }

  expr additive() {
    std::size_t at = skip();
    expr lhs = term();
    for (;;) {
      std::optional<binary_op> op;
      if (eat("+")) op = binary_op::add;
      else if (eat("-")) op = binary_op::sub;
      if (!op) return lhs;
      no_range(lhs, at);
      std::size_t rat = skip();
      expr rhs = term();
      no_range(rhs, rat);
      lhs = make_binary(*op, std::move(lhs), std::move(rhs));
    }
  }

  expr term() {
    std::size_t at = skip();
    expr lhs = power();
    for (;;) {
      std::optional<binary_op> op;
      if (eat("*")) op = binary_op::mul;
      else if (eat("/")) op = binary_op::div;
      if (!op) return lhs;
      no_range(lhs, at);
      std::size_t rat = skip();
      expr rhs = power();
      no_range(rhs, rat);
      lhs = make_binary(*op, std::move(lhs), std::move(rhs));
    }
  }

  expr power() {
    std::size_t at = skip();
    expr base = unary();
    if (!eat("^")) return base;
    no_range(base, at);
    std::size_t rat = skip();
    expr exponent = power();
    no_range(exponent, rat);
    return make_binary(binary_op::pow, std::move(base), std::move(exponent));
  }

  expr unary() {
    if (eat("-")) {
      std::size_t at = skip();
      expr operand = unary();
      no_range(operand, at);
      return make_negate(std::move(operand));
    }
    if (eat("+")) {
      std::size_t at = skip();
      expr operand = unary();
      no_range(operand, at);
      return operand;
    }
    return primary();
  }

  expr primary() {
    std::size_t at = skip();
    if (at >= src_.size()) fail("unexpected end of formula", at);
    char c = src_[at];
    if (c == '(') {
      ++pos_;
      expr inner = comparison();
      if (!eat(")")) fail("expected ')'", pos_);
      return inner;
    }
    if (c == '"') return string_literal();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number_literal();
    if (c == '\'' || c == '$' || std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name_or_ref();
    fail("unexpected '" + std::string(1, c) + "'", at);
  }

  expr string_literal() {
    std::size_t at = pos_;
    ++pos_;
    std::string value;
    for (;;) {
      if (pos_ >= src_.size()) fail("unterminated string", at);
      char c = src_[pos_++];
      if (c == '"') {
        if (pos_ < src_.size() && src_[pos_] == '"') {
          value += '"';
          ++pos_;
          continue;
        }
        return str{value};
      }
      value += c;
    }
  }

  expr number_literal() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        pos_ = save;
      } else {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    auto value = parse_decimal(src_.substr(start, pos_ - start));
    if (!value) fail("malformed number", start);
    return num{*value};
  }

  static bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  }

  expr name_or_ref() {
    std::size_t start = pos_;
    std::optional<std::string> sheet;
    if (src_[pos_] == '\'') {
      sheet = quoted_sheet();
    } else if (src_[pos_] != '$') {
      std::size_t end = pos_;
      while (end < src_.size() && word_char(src_[end])) ++end;
      std::string word(src_.substr(pos_, end - pos_));
      if (end < src_.size() && src_[end] == '!') {
        sheet = word;
        pos_ = end + 1;
      } else {
        std::size_t look = end;
        while (look < src_.size() && std::isspace(static_cast<unsigned char>(src_[look]))) ++look;
        if (look < src_.size() && src_[look] == '(') {
          pos_ = look + 1;
          return function_call(word, start);
        }
      }
    }

    ref first = cell_ref(sheet, start);
    if (!eat(":")) return first;
    skip();
    std::size_t second_at = pos_;
    std::optional<std::string> second_sheet;
    if (pos_ < src_.size() && src_[pos_] == '\'') {
      second_sheet = quoted_sheet();
    } else {
      std::size_t end = pos_;
      while (end < src_.size() && word_char(src_[end])) ++end;
      if (end < src_.size() && src_[end] == '!') {
        second_sheet = std::string(src_.substr(pos_, end - pos_));
        pos_ = end + 1;
      }
    }
    if (second_sheet && *second_sheet != first.target.sheet)
      fail("range endpoints on different sheets", second_at);
    ref second = cell_ref(first.target.sheet, second_at);

    ref lo = first, hi = second;
    if (second.target.col < first.target.col) {
      lo.target.col = second.target.col;
      lo.col_abs = second.col_abs;
      hi.target.col = first.target.col;
      hi.col_abs = first.col_abs;
    }
    if (second.target.row < first.target.row) {
      lo.target.row = second.target.row;
      lo.row_abs = second.row_abs;
      hi.target.row = first.target.row;
      hi.row_abs = first.row_abs;
    }
    long long cells = static_cast<long long>(hi.target.col - lo.target.col + 1) *
                      static_cast<long long>(hi.target.row - lo.target.row + 1);
    if (cells > max_range_cells) fail("range too large", start);
    return range_ref{lo, hi};
  }

  std::string quoted_sheet() {
    std::size_t at = pos_;
    ++pos_;
    std::string name;
    for (;;) {
      if (pos_ >= src_.size()) fail("unterminated sheet name", at);
      char c = src_[pos_++];
      if (c == '\'') {
        if (pos_ < src_.size() && src_[pos_] == '\'') {
          name += '\'';
          ++pos_;
          continue;
        }
        break;
      }
      name += c;
    }
    if (pos_ >= src_.size() || src_[pos_] != '!') fail("expected '!' after sheet name", pos_);
    ++pos_;
    if (name.empty()) fail("empty sheet name", at);
    return name;
  }

  ref cell_ref(const std::optional<std::string>& sheet, std::size_t start) {
    ref r;
    if (pos_ < src_.size() && src_[pos_] == '$') {
      r.col_abs = true;
      ++pos_;
    }
    std::size_t letters_at = pos_;
    std::string letters;
    while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) {
      letters += static_cast<char>(std::toupper(static_cast<unsigned char>(src_[pos_])));
      ++pos_;
    }
    if (letters.empty()) fail("expected a cell reference", start);
    if (pos_ < src_.size() && src_[pos_] == '$') {
      r.row_abs = true;
      ++pos_;
    }
    std::size_t digits_at = pos_;
    long long row = 0;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      row = row * 10 + (src_[pos_] - '0');
      if (row > max_row) fail("row out of range", digits_at);
      ++pos_;
    }
    if (pos_ == digits_at) fail("unknown name '" + letters + "'", start);
    if (pos_ < src_.size() && word_char(src_[pos_])) fail("malformed cell reference", start);
    if (row == 0) fail("reference to row 0", digits_at);
    int col = 0;
    try {
      col = letters_to_col(letters);
    } catch (const error&) {
      fail("column out of range", letters_at);
    }
    r.target = address{sheet.value_or(host_.sheet), col, static_cast<int>(row)};
    r.qualified = r.target.sheet != host_.sheet;
    return r;
  }

  expr function_call(const std::string& raw_name, std::size_t at) {
    std::string name;
    for (char c : raw_name) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (!std::isalpha(static_cast<unsigned char>(name.front()))) fail("malformed function name", at);
    call c{name, {}};
    if (eat(")")) return c;
    for (;;) {
      skip();
      c.args.push_back(comparison());
      if (eat(")")) return c;
      if (!eat(",")) fail("expected ',' or ')'", pos_);
    }
  }

  std::string_view src_;
  const address& host_;
  std::size_t pos_ = 0;
};

}  // namespace

expr parse_formula(std::string_view source, const address& host) {
  return formula_parser(source, host).parse();
}

// ---------------------------------------------------------------------------
// Printing

namespace {

constexpr int prec_negate = 5;
constexpr int prec_atom = 6;

int precedence_of(const expr& e) {
  if (auto b = e.as<binary>()) return precedence(b->op);
  if (e.is<negate>()) return prec_negate;
  if (auto n = e.as<num>(); n && n->value < 0) return prec_negate;
  return prec_atom;
}

std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string print_ref(const ref& r) {
  std::string out;
  if (r.qualified) out += quote_sheet(r.target.sheet) + "!";
  if (r.col_abs) out += '$';
  out += col_to_letters(r.target.col);
  if (r.row_abs) out += '$';
  out += std::to_string(r.target.row);
  return out;
}

std::string print_offset_axis(char tag, const offset_axis& ax) {
  if (ax.absolute) return tag + std::to_string(ax.value);
  return std::string(1, tag) + "[" + std::to_string(ax.value) + "]";
}

std::string print_offset(const offset_ref& o) {
  std::string out;
  if (!o.sheet.empty()) out += quote_sheet(o.sheet) + "!";
  return out + print_offset_axis('R', o.row) + print_offset_axis('C', o.col);
}

struct printer {
  bool spaced;
  const std::set<std::string>* scalars = nullptr;

  std::string operator()(const expr& e) const {
    return std::visit(
        overloaded{
            [](const num& n) { return format_number(n.value); },
            [](const str& s) { return quote_string(s.value); },
            [](const ref& r) { return print_ref(r); },
            [](const range_ref& r) {
              ref to = r.to;
              to.qualified = false;
              return print_ref(r.from) + ":" + print_ref(to);
            },
            [&](const binary& b) {
              int p = precedence(b.op);
              int lp = precedence_of(*b.lhs);
              int rp = precedence_of(*b.rhs);
              bool right_assoc = b.op == binary_op::pow;
              bool lparen = lp < p || (lp == p && right_assoc);
              bool rparen = rp < p || (rp == p && !right_assoc);
              std::string l = (*this)(*b.lhs);
              std::string r = (*this)(*b.rhs);
              if (lparen) l = "(" + l + ")";
              if (rparen) r = "(" + r + ")";
              std::string op(symbol(b.op));
              return spaced ? l + " " + op + " " + r : l + op + r;
            },
            [&](const negate& n) {
              std::string inner = (*this)(*n.operand);
              if (precedence_of(*n.operand) < prec_negate) inner = "(" + inner + ")";
              return "-" + inner;
            },
            [&](const call& c) {
              std::string out = c.name + "(";
              for (std::size_t i = 0; i < c.args.size(); ++i) {
                if (i) out += spaced ? ", " : ",";
                out += (*this)(c.args[i]);
              }
              return out + ")";
            },
            [&](const attr_ref& a) {
              if (scalars && scalars->count(a.attr) && std::holds_alternative<index_const>(a.index)) return a.attr;
              return a.attr + "[" + to_string(a.index) + "]";
            },
            [](const attr_range& a) { return a.attr + "[" + to_string(a.from) + ".." + to_string(a.to) + "]"; },
            [](const offset_ref& o) { return print_offset(o); },
            [](const offset_range& o) { return print_offset(o.from) + ":" + print_offset(o.to); },
        },
        e.node);
  }
};

}  // namespace

std::string print_formula(const expr& e) { return "=" + printer{false}(e); }

std::string print_listing(const expr& e, const std::set<std::string>* scalars) { return printer{true, scalars}(e); }

// ---------------------------------------------------------------------------
// Traversal

void visit(const expr& e, const std::function<void(const expr&)>& fn) {
  fn(e);
  if (auto b = e.as<binary>()) {
    visit(*b->lhs, fn);
    visit(*b->rhs, fn);
  } else if (auto n = e.as<negate>()) {
    visit(*n->operand, fn);
  } else if (auto c = e.as<call>()) {
    for (const auto& a : c->args) visit(a, fn);
  }
}

expr transform(const expr& e, const std::function<expr(expr)>& fn) {
  if (auto b = e.as<binary>()) return fn(make_binary(b->op, transform(*b->lhs, fn), transform(*b->rhs, fn)));
  if (auto n = e.as<negate>()) return fn(make_negate(transform(*n->operand, fn)));
  if (auto c = e.as<call>()) {
    call out{c->name, {}};
    out.args.reserve(c->args.size());
    for (const auto& a : c->args) out.args.push_back(transform(a, fn));
    return fn(std::move(out));
  }
  return fn(e);
}

namespace {

offset_ref offset_of(const ref& r, const address& host) {
  offset_ref o;
  o.sheet = r.qualified ? r.target.sheet : std::string();
  o.col = r.col_abs ? offset_axis{true, r.target.col} : offset_axis{false, r.target.col - host.col};
  o.row = r.row_abs ? offset_axis{true, r.target.row} : offset_axis{false, r.target.row - host.row};
  return o;
}

ref ref_of(const offset_ref& o, const address& host) {
  ref r;
  r.target.sheet = o.sheet.empty() ? host.sheet : o.sheet;
  r.qualified = !o.sheet.empty() && o.sheet != host.sheet;
  r.col_abs = o.col.absolute;
  r.row_abs = o.row.absolute;
  r.target.col = o.col.absolute ? o.col.value : host.col + o.col.value;
  r.target.row = o.row.absolute ? o.row.value : host.row + o.row.value;
  return r;
}

}  // namespace

expr to_offset_form(const expr& e, const address& host) {
  return transform(e, [&](expr node) -> expr {
    if (auto r = node.as<ref>()) return offset_of(*r, host);
    if (auto r = node.as<range_ref>()) return offset_range{offset_of(r->from, host), offset_of(r->to, host)};
    return node;
  });
}

expr from_offset_form(const expr& e, const address& host) {
  return transform(e, [&](expr node) -> expr {
    if (auto o = node.as<offset_ref>()) return ref_of(*o, host);
    if (auto o = node.as<offset_range>()) return range_ref{ref_of(o->from, host), ref_of(o->to, host)};
    return node;
  });
}

namespace {

template <class F>
void for_each_cell(const range_ref& r, F&& f) {
  for (int row = r.from.target.row; row <= r.to.target.row; ++row)
    for (int col = r.from.target.col; col <= r.to.target.col; ++col) f(address{r.from.target.sheet, col, row});
}

}  // namespace

std::vector<address> refs_of(const expr& e) {
  std::vector<address> out;
  std::set<address> seen;
  auto add = [&](const address& a) {
    if (seen.insert(a).second) out.push_back(a);
  };
  visit(e, [&](const expr& node) {
    if (auto r = node.as<ref>()) add(r->target);
    else if (auto r = node.as<range_ref>()) for_each_cell(*r, add);
  });
  return out;
}

expr rewrite_refs(const expr& e, const substitution& subst) {
  if (subst.empty()) return e;
  return transform(e, [&](expr node) -> expr {
    if (auto r = node.as<ref>()) {
      auto it = subst.find(r->target);
      if (it == subst.end()) return node;
      expr out = it->second;
      if (auto* a = std::get_if<attr_ref>(&out.node)) {
        a->col_abs = r->col_abs;
        a->row_abs = r->row_abs;
      }
      return out;
    }
    if (auto r = node.as<range_ref>()) {
      std::vector<const expr*> members;
      std::size_t total = 0;
      for_each_cell(*r, [&](const address& a) {
        ++total;
        auto it = subst.find(a);
        if (it != subst.end()) members.push_back(&it->second);
      });
      if (members.empty()) return node;
      std::string text = print_formula(node).substr(1);
      if (members.size() != total) throw conflict("range " + text + " is only partly covered by the grouping");
      const auto* first = members.front()->as<attr_ref>();
      bool ok = first && std::holds_alternative<index_const>(first->index);
      for (std::size_t i = 0; ok && i < members.size(); ++i) {
        const auto* a = members[i]->as<attr_ref>();
        ok = a && a->attr == first->attr && std::holds_alternative<index_const>(a->index) &&
             std::get<index_const>(a->index).value == std::get<index_const>(first->index).value + static_cast<int>(i);
      }
      if (!ok) throw conflict("range " + text + " does not map onto consecutive indices of one attribute");
      const auto* last = members.back()->as<attr_ref>();
      attr_range out{first->attr, first->index, last->index};
      out.from_col_abs = r->from.col_abs;
      out.from_row_abs = r->from.row_abs;
      out.to_col_abs = r->to.col_abs;
      out.to_row_abs = r->to.row_abs;
      return out;
    }
    return node;
  });
}

expr lower_attr_refs(const expr& e, const attr_resolver& resolve, const address& host) {
  return transform(e, [&](expr node) -> expr {
    if (auto a = node.as<attr_ref>()) {
      auto cell = resolve(a->attr, a->index);
      if (!cell) return node;
      return ref{*cell, a->col_abs, a->row_abs, cell->sheet != host.sheet};
    }
    if (auto a = node.as<attr_range>()) {
      auto lo = resolve(a->attr, a->from);
      auto hi = resolve(a->attr, a->to);
      if (!lo || !hi) return node;
      bool q = lo->sheet != host.sheet;
      return range_ref{ref{*lo, a->from_col_abs, a->from_row_abs, q}, ref{*hi, a->to_col_abs, a->to_row_abs, q}};
    }
    return node;
  });
}

}  // namespace sheetgram
