#include "sheetgram/arrows.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "sheetgram/error.hpp"

namespace sheetgram {

// ---------------------------------------------------------------------------
// Attributes and models

std::optional<std::size_t> attribute::position(const index_expr& ix) const {
  if (auto c = std::get_if<index_const>(&ix)) {
    if (!std::holds_alternative<range_domain>(domain)) return std::nullopt;
    if (c->value < 1 || static_cast<std::size_t>(c->value) > size()) return std::nullopt;
    return static_cast<std::size_t>(c->value - 1);
  }
  if (auto l = std::get_if<index_label>(&ix)) {
    auto* e = std::get_if<enum_domain>(&domain);
    if (!e) return std::nullopt;
    auto it = std::find(e->labels.begin(), e->labels.end(), l->label);
    if (it == e->labels.end()) return std::nullopt;
    return static_cast<std::size_t>(it - e->labels.begin());
  }
  return std::nullopt;
}

index_expr attribute::index_at(std::size_t k) const {
  if (auto e = std::get_if<enum_domain>(&domain)) return index_label{e->labels.at(k)};
  return index_const{static_cast<int>(k + 1)};
}

const attribute* model::find(std::string_view name) const {
  for (const auto& a : attributes)
    if (a.name == name) return &a;
  return nullptr;
}

attribute* model::find(std::string_view name) {
  for (auto& a : attributes)
    if (a.name == name) return &a;
  return nullptr;
}

const attribute* model::owner_of(const address& cell) const {
  for (const auto& a : attributes)
    if (std::find(a.layout.begin(), a.layout.end(), cell) != a.layout.end()) return &a;
  return nullptr;
}

std::set<std::string> model::names() const {
  std::set<std::string> out;
  for (const auto& a : attributes) out.insert(a.name);
  return out;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }) && std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

std::string sanitize_identifier(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (static_cast<unsigned char>(c) < 0x80 && std::isalnum(static_cast<unsigned char>(c))) {
      out += c;
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  if (!out.empty() && std::isdigit(static_cast<unsigned char>(out.front()))) out.insert(out.begin(), '_');
  return out;
}

std::string cell_attribute_name(const address& a, bool multi_sheet) {
  if (!multi_sheet) return to_a1(a);
  std::string sheet = sanitize_identifier(a.sheet);
  if (sheet.empty()) sheet = "Sheet";
  return sheet + "_" + to_a1(a);
}

namespace {

void sort_model(model& m) {
  std::stable_sort(m.attributes.begin(), m.attributes.end(), [](const attribute& a, const attribute& b) {
    return column_major_less{}(a.layout.front(), b.layout.front());
  });
}

attribute single_cell(const address& a, bool multi_sheet, expr e, bool data) {
  attribute out;
  out.name = cell_attribute_name(a, multi_sheet);
  out.domain = range_domain{1};
  out.layout = {a};
  out.exprs.push_back(std::move(e));
  out.data = {data};
  return out;
}

std::string cell_ref_text(const attribute& a, const index_expr& ix) {
  return a.name + "[" + to_string(ix) + "]";
}

/// Resolves attribute references against `m`, restricted to `only` when given.
attr_resolver resolver_for(const model& m, const std::set<std::string>* only, bool strict) {
  return [&m, only, strict](const std::string& name, const index_expr& ix) -> std::optional<address> {
    if (only && !only->count(name)) return std::nullopt;
    const attribute* a = m.find(name);
    if (!a) {
      if (strict) throw not_found("reference to unknown attribute '" + name + "'");
      return std::nullopt;
    }
    auto pos = a->position(ix);
    if (!pos) {
      if (strict) throw not_found("reference " + cell_ref_text(*a, ix) + " is outside its domain");
      return std::nullopt;
    }
    return a->layout[*pos];
  };
}

/// Turns references into the named attributes back into plain cell references.
void lower_names(model& m, const std::set<std::string>& names) {
  const model snapshot = m;
  auto resolve = resolver_for(snapshot, &names, false);
  for (auto& a : m.attributes)
    for (std::size_t k = 0; k < a.size(); ++k) a.exprs[k] = lower_attr_refs(a.exprs[k], resolve, a.layout[k]);
}

void rename_refs(model& m, const std::string& from, const std::string& to) {
  for (auto& a : m.attributes)
    for (auto& e : a.exprs)
      e = transform(e, [&](expr node) -> expr {
        if (auto* r = std::get_if<attr_ref>(&node.node); r && r->attr == from) r->attr = to;
        if (auto* r = std::get_if<attr_range>(&node.node); r && r->attr == from) r->attr = to;
        return node;
      });
}

void remove_attribute(model& m, std::string_view name) {
  m.attributes.erase(std::remove_if(m.attributes.begin(), m.attributes.end(),
                                    [&](const attribute& a) { return a.name == name; }),
                     m.attributes.end());
}

bool has_plain_refs(const expr& e) {
  bool found = false;
  visit(e, [&](const expr& n) { found = found || n.is<ref>() || n.is<range_ref>(); });
  return found;
}

const attribute& require(const model& m, std::string_view name) {
  const attribute* a = m.find(name);
  if (!a) throw not_found("unknown attribute '" + std::string(name) + "'");
  return *a;
}

std::string unique_name(const std::string& base, const std::set<std::string>& used) {
  if (!used.count(base)) return base;
  for (int k = 2;; ++k) {
    std::string candidate = base + "_" + std::to_string(k);
    if (!used.count(candidate)) return candidate;
  }
}

std::optional<std::pair<address, std::string>> label_next_to(const attribute& a, const fact_base& fb) {
  const address& first = a.layout.front();
  std::vector<address> candidates;
  if (first.row > 1) candidates.push_back({first.sheet, first.col, first.row - 1});
  if (first.col > 1) candidates.push_back({first.sheet, first.col - 1, first.row});
  for (const auto& c : candidates) {
    if (!fb.is_label(c)) continue;
    const auto* t = std::get_if<text_cell>(fb.book().find(c));
    return std::make_pair(c, t ? t->value : std::string());
  }
  return std::nullopt;
}

}  // namespace

model decompile(const workbook& wb) {
  model m;
  m.multi_sheet = wb.sheets().size() > 1;
  for (const auto& [a, content] : wb.cells()) {
    std::visit(overloaded{
                   [&](const number_cell& n) { m.attributes.push_back(single_cell(a, m.multi_sheet, num{n.value}, true)); },
                   [&](const text_cell& t) { m.attributes.push_back(single_cell(a, m.multi_sheet, str{t.value}, true)); },
                   [&](const formula_cell& f) { m.attributes.push_back(single_cell(a, m.multi_sheet, f.ast, false)); },
               },
               content);
  }
  sort_model(m);
  return m;
}

workbook compile(const model& m) {
  workbook wb;
  std::map<address, std::string> owner;
  auto claim = [&](const address& cell, const std::string& name) {
    auto [it, fresh] = owner.emplace(cell, name);
    if (!fresh)
      throw conflict("attributes '" + it->second + "' and '" + name + "' both occupy " + to_a1(cell, true));
  };
  auto resolve = resolver_for(m, nullptr, true);
  for (const auto& a : m.attributes) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      const address& cell = a.layout[k];
      claim(cell, a.name);
      expr e = lower_attr_refs(a.exprs[k], resolve, cell);
      if (a.data[k] && e.is<num>()) {
        wb.insert(cell, number_cell{e.as<num>()->value});
      } else if (a.data[k] && e.is<str>()) {
        wb.insert(cell, text_cell{e.as<str>()->value});
      } else {
        std::string source = print_formula(e);
        wb.insert(cell, formula_cell{std::move(source), std::move(e)});
      }
    }
    for (const auto& l : a.labels) {
      claim(l.at, a.name);
      wb.insert(l.at, text_cell{l.text});
    }
  }
  return wb;
}

std::vector<std::string> validate_model(const model& m) {
  std::vector<std::string> out;
  std::set<std::string> names;
  std::map<address, std::string> owner;
  for (const auto& a : m.attributes) {
    if (!is_identifier(a.name)) out.push_back("malformed attribute name '" + a.name + "'");
    if (!names.insert(a.name).second) out.push_back("duplicate attribute name '" + a.name + "'");
    std::size_t n = std::visit(overloaded{
                                   [](const range_domain& r) { return static_cast<std::size_t>(r.n); },
                                   [](const enum_domain& e) { return e.labels.size(); },
                               },
                               a.domain);
    if (n == 0 || a.layout.size() != n || a.exprs.size() != n || a.data.size() != n) {
      out.push_back("attribute '" + a.name + "' has inconsistent sizes");
      continue;
    }
    if (auto e = std::get_if<enum_domain>(&a.domain)) {
      std::set<std::string> seen;
      for (const auto& l : e->labels)
        if (!is_identifier(l) || !seen.insert(l).second) out.push_back("attribute '" + a.name + "' has bad label '" + l + "'");
    }
    std::set<std::string> sheets;
    for (const auto& cell : a.layout) sheets.insert(cell.sheet);
    if (sheets.size() > 1) out.push_back("attribute '" + a.name + "' spans several sheets");
    auto claim = [&](const address& cell) {
      auto [it, fresh] = owner.emplace(cell, a.name);
      if (!fresh) out.push_back("cell " + to_a1(cell, true) + " is used by '" + it->second + "' and '" + a.name + "'");
    };
    for (const auto& cell : a.layout) claim(cell);
    for (const auto& l : a.labels) claim(l.at);
  }
  for (const auto& a : m.attributes) {
    for (const auto& e : a.exprs) {
      visit(e, [&](const expr& node) {
        auto check = [&](const std::string& name, const index_expr& ix) {
          const attribute* target = m.find(name);
          if (!target)
            out.push_back("'" + a.name + "' refers to unknown attribute '" + name + "'");
          else if (!target->position(ix))
            out.push_back("'" + a.name + "' refers to " + cell_ref_text(*target, ix) + " outside its domain");
        };
        if (auto r = node.as<attr_ref>()) check(r->attr, r->index);
        if (auto r = node.as<attr_range>()) {
          check(r->attr, r->from);
          check(r->attr, r->to);
        }
      });
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transforms

std::string describe(const operation& op) {
  return std::visit(overloaded{
                        [](const group_op& g) {
                          std::string cells;
                          for (const auto& c : g.cells) cells += (cells.empty() ? "" : ",") + to_a1(c);
                          return "group " + cells + " as " + g.name;
                        },
                        [](const rename_op& r) { return "rename " + r.from + " to " + r.to; },
                        [](const ungroup_op& u) { return "ungroup " + u.name; },
                        [](const name_from_label_op& n) { return "name " + n.name; },
                        [](const reindex_op& r) { return "reindex " + r.name; },
                        [](const generalize_op& g) { return "generalize " + g.name; },
                    },
                    op);
}

model apply_group(const model& m, const group_op& op) {
  if (op.cells.empty()) throw invalid("a group needs at least one cell");
  if (!is_identifier(op.name)) throw invalid("malformed attribute name '" + op.name + "'");
  std::set<address> distinct(op.cells.begin(), op.cells.end());
  if (distinct.size() != op.cells.size()) throw invalid("group cells must be distinct");
  for (const auto& c : op.cells)
    if (c.sheet != op.cells.front().sheet) throw invalid("a group cannot span several sheets");

  std::vector<std::string> sources;
  std::set<std::string> merged;
  for (const auto& c : op.cells) {
    const attribute* a = m.owner_of(c);
    if (!a) throw not_found("cell " + to_a1(c, m.multi_sheet) + " is not part of the model");
    if (a->size() != 1 || std::find(a->layout.begin(), a->layout.end(), c) == a->layout.end())
      throw conflict("cell " + to_a1(c, m.multi_sheet) + " already belongs to attribute '" + a->name + "'");
    sources.push_back(a->name);
    merged.insert(a->name);
  }
  if (m.find(op.name) && !merged.count(op.name))
    throw conflict("attribute '" + op.name + "' already exists");

  model out = m;
  lower_names(out, merged);
  attribute g;
  g.name = op.name;
  g.domain = range_domain{static_cast<int>(op.cells.size())};
  for (std::size_t k = 0; k < op.cells.size(); ++k) {
    const attribute& src = *out.find(sources[k]);
    g.layout.push_back(op.cells[k]);
    g.exprs.push_back(src.exprs.front());
    g.data.push_back(src.data.front());
    g.labels.insert(g.labels.end(), src.labels.begin(), src.labels.end());
  }
  for (const auto& name : merged) remove_attribute(out, name);
  out.attributes.push_back(std::move(g));

  substitution subst;
  for (std::size_t k = 0; k < op.cells.size(); ++k)
    subst.emplace(op.cells[k], attr_ref{op.name, index_const{static_cast<int>(k + 1)}});
  for (auto& a : out.attributes)
    for (auto& e : a.exprs) e = rewrite_refs(e, subst);
  sort_model(out);
  return out;
}

model apply_rename(const model& m, const rename_op& op) {
  require(m, op.from);
  if (op.from == op.to) return m;
  if (!is_identifier(op.to)) throw invalid("malformed attribute name '" + op.to + "'");
  if (m.find(op.to)) throw conflict("attribute '" + op.to + "' already exists");
  model out = m;
  out.find(op.from)->name = op.to;
  rename_refs(out, op.from, op.to);
  return out;
}

model apply_ungroup(const model& m, const ungroup_op& op) {
  require(m, op.name);
  model out = m;
  lower_names(out, {op.name});
  attribute src = *out.find(op.name);
  remove_attribute(out, op.name);
  auto names = out.names();
  auto add = [&](attribute a) {
    if (!names.insert(a.name).second) throw conflict("attribute '" + a.name + "' already exists");
    out.attributes.push_back(std::move(a));
  };
  for (std::size_t k = 0; k < src.size(); ++k) add(single_cell(src.layout[k], m.multi_sheet, src.exprs[k], src.data[k]));
  for (const auto& l : src.labels) add(single_cell(l.at, m.multi_sheet, str{l.text}, true));
  sort_model(out);
  return out;
}

std::optional<std::string> infer_name(const model& m, std::string_view attr, const fact_base& fb) {
  auto found = label_next_to(require(m, attr), fb);
  if (!found) return std::nullopt;
  std::string name = sanitize_identifier(found->second);
  if (name.empty()) return std::nullopt;
  return name;
}

model apply_name_from_label(const model& m, const name_from_label_op& op, const fact_base& fb, std::string* note) {
  const attribute& a = require(m, op.name);
  auto skip = [&](const std::string& why) {
    if (note) *note = why;
    return m;
  };
  auto found = label_next_to(a, fb);
  if (!found) return skip("no label above or left of '" + op.name + "'");
  const attribute* label = m.owner_of(found->first);
  if (!label || label->size() != 1 || label->name == op.name)
    return skip("label at " + to_a1(found->first, m.multi_sheet) + " is not a single-cell attribute");
  std::string base = sanitize_identifier(found->second);
  if (base.empty()) return skip("label '" + found->second + "' does not yield a name");

  std::set<std::string> used = m.names();
  used.erase(op.name);
  used.erase(label->name);
  std::string name = unique_name(base, used);

  model out = m;
  std::string label_name = label->name;
  remove_attribute(out, label_name);
  attribute* target = out.find(op.name);
  target->labels.push_back({found->first, found->second});
  target->name = name;
  rename_refs(out, op.name, name);
  return out;
}

model apply_reindex(const model& m, const reindex_op& op, const fact_base& fb) {
  const attribute& a = require(m, op.name);
  if (!std::holds_alternative<range_domain>(a.domain)) throw invalid("'" + op.name + "' already has labelled indices");
  std::vector<std::string> labels;
  if (!op.labels.empty()) {
    if (op.labels.size() != a.size())
      throw invalid("'" + op.name + "' has " + std::to_string(a.size()) + " elements but " +
                    std::to_string(op.labels.size()) + " labels were given");
    for (const auto& l : op.labels) labels.push_back(sanitize_identifier(l));
  } else {
    // Nearest label scanning upward row by row, each row leftward from the
    // cell's own column.
    for (const auto& cell : a.layout) {
      std::optional<std::string> found;
      for (int row = cell.row - 1; row >= 1 && !found; --row)
        for (int col = cell.col; col >= 1 && !found; --col) {
          address c{cell.sheet, col, row};
          if (fb.is_label(c)) found = std::get<text_cell>(*fb.book().find(c)).value;
        }
      if (!found) throw conflict("no label above " + to_a1(cell, m.multi_sheet) + " to index '" + op.name + "' by");
      labels.push_back(sanitize_identifier(*found));
    }
  }
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.empty()) throw invalid("index labels must contain letters or digits");
    if (!seen.insert(l).second) throw conflict("index label '" + l + "' occurs twice in '" + op.name + "'");
  }

  model out = m;
  out.find(op.name)->domain = enum_domain{labels};
  auto relabel = [&](index_expr& ix) {
    if (auto c = std::get_if<index_const>(&ix); c && c->value >= 1 && static_cast<std::size_t>(c->value) <= labels.size())
      ix = index_label{labels[c->value - 1]};
  };
  for (auto& attr : out.attributes)
    for (auto& e : attr.exprs)
      e = transform(e, [&](expr node) -> expr {
        if (auto* r = std::get_if<attr_ref>(&node.node); r && r->attr == op.name) relabel(r->index);
        if (auto* r = std::get_if<attr_range>(&node.node); r && r->attr == op.name) {
          relabel(r->from);
          relabel(r->to);
        }
        return node;
      });
  return out;
}

std::optional<expr> generalize(const model& m, std::string_view name) {
  const attribute& a = require(m, name);
  if (!std::holds_alternative<range_domain>(a.domain))
    throw invalid("'" + a.name + "' has labelled indices; only numbered attributes generalize");
  for (std::size_t k = 0; k < a.size(); ++k)
    if (has_plain_refs(a.exprs[k]))
      throw conflict("'" + a.name + "' still refers to ungrouped cells (at " + to_a1(a.layout[k], m.multi_sheet) +
                     "); group them first");

  auto to_param = [](index_expr& ix) {
    if (auto c = std::get_if<index_const>(&ix)) ix = index_param{c->value - 1};
  };
  expr tmpl = transform(a.exprs.front(), [&](expr node) -> expr {
    if (auto* r = std::get_if<attr_ref>(&node.node)) to_param(r->index);
    if (auto* r = std::get_if<attr_range>(&node.node)) {
      to_param(r->from);
      to_param(r->to);
    }
    return node;
  });
  for (std::size_t k = 1; k < a.size(); ++k)
    if (!(instantiate(tmpl, static_cast<int>(k + 1)) == a.exprs[k])) return std::nullopt;
  return tmpl;
}

expr instantiate(const expr& tmpl, int i) {
  auto fix = [i](index_expr& ix) {
    if (auto p = std::get_if<index_param>(&ix)) ix = index_const{i + p->offset};
  };
  return transform(tmpl, [&](expr node) -> expr {
    if (auto* r = std::get_if<attr_ref>(&node.node)) fix(r->index);
    if (auto* r = std::get_if<attr_range>(&node.node)) {
      fix(r->from);
      fix(r->to);
    }
    return node;
  });
}

model apply_generalize(const model& m, const generalize_op& op) {
  if (!generalize(m, op.name)) throw conflict("the equations of '" + op.name + "' do not share one template");
  model out = m;
  out.find(op.name)->generalized = true;
  return out;
}

model apply(const model& m, const operation& op, const fact_base& fb, std::string* note) {
  return std::visit(overloaded{
                        [&](const group_op& o) { return apply_group(m, o); },
                        [&](const rename_op& o) { return apply_rename(m, o); },
                        [&](const ungroup_op& o) { return apply_ungroup(m, o); },
                        [&](const name_from_label_op& o) { return apply_name_from_label(m, o, fb, note); },
                        [&](const reindex_op& o) { return apply_reindex(m, o, fb); },
                        [&](const generalize_op& o) { return apply_generalize(m, o); },
                    },
                    op);
}

std::vector<operation> match_to_transforms(const std::vector<match>& matches, const fact_base& fb,
                                           const std::set<std::string>& taken) {
  std::set<std::string> used = taken;
  std::set<address> claimed;
  std::vector<group_op> groups;
  for (const auto& mt : matches) {
    for (const auto& b : mt.bindings) {
      group_op g;
      for (const auto& c : b.cells) {
        if (fb.is_label(c) || claimed.count(c)) continue;
        claimed.insert(c);
        g.cells.push_back(c);
      }
      if (g.cells.empty()) continue;
      g.name = unique_name(b.rule, used);
      used.insert(g.name);
      groups.push_back(std::move(g));
    }
  }
  std::vector<operation> out;
  for (const auto& g : groups) out.push_back(g);
  for (const auto& g : groups) out.push_back(name_from_label_op{g.name});
  return out;
}

// ---------------------------------------------------------------------------
// Listing

std::string emit_mm(const model& m) {
  std::string header = "<";
  std::vector<std::string> equations;
  std::set<std::string> scalars;
  for (const auto& a : m.attributes)
    if (auto* r = std::get_if<range_domain>(&a.domain); r && r->n == 1) scalars.insert(a.name);
  bool first = true;
  for (const auto& a : m.attributes) {
    if (!first) header += ' ';
    first = false;
    bool scalar = false;
    std::visit(overloaded{
                   [&](const range_domain& r) {
                     scalar = r.n == 1;
                     header += scalar ? a.name : a.name + "[1.." + std::to_string(r.n) + "]";
                   },
                   [&](const enum_domain& e) {
                     header += a.name + "{";
                     for (std::size_t k = 0; k < e.labels.size(); ++k) header += (k ? "," : "") + e.labels[k];
                     header += "}";
                   },
               },
               a.domain);

    bool all_data = std::all_of(a.data.begin(), a.data.end(), [](bool d) { return d; });
    bool any_data = std::any_of(a.data.begin(), a.data.end(), [](bool d) { return d; });
    bool numeric = std::all_of(a.exprs.begin(), a.exprs.end(), [](const expr& e) { return e.is<num>(); });
    if (all_data && numeric) continue;

    if (!any_data && std::holds_alternative<range_domain>(a.domain) && (a.size() >= 2 || a.generalized) &&
        std::none_of(a.exprs.begin(), a.exprs.end(), has_plain_refs)) {
      if (auto tmpl = generalize(m, a.name)) {
        equations.push_back(a.name + "[all t] = " + print_listing(*tmpl, &scalars));
        continue;
      }
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
      std::string lhs = scalar ? a.name : a.name + "[" + to_string(a.index_at(k)) + "]";
      equations.push_back(lhs + " = " + print_listing(a.exprs[k], &scalars));
    }
  }
  header += ">\n";
  if (equations.empty()) return header;
  std::string out = header + "where\n";
  for (const auto& e : equations) out += e + "\n";
  return out;
}

}  // namespace sheetgram
