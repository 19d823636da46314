#include "sheetgram/session.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sheetgram/error.hpp"

namespace sheetgram {

namespace {

const std::string& str_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw bad_payload(std::string("expected string field '") + key + "'");
  return it->get_ref<const std::string&>();
}

std::string opt_str_field(const json& j, const char* key, const std::string& fallback = {}) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw bad_payload(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string default_sheet(const workbook& wb) {
  auto sheets = wb.sheets();
  return sheets.empty() ? "Sheet1" : sheets.front();
}

}  // namespace

session::session() : fb_(std::make_unique<fact_base>(workbook{})) {}

void session::load(workbook wb) {
  auto fb = std::make_unique<fact_base>(wb);
  model_ = decompile(wb);
  wb_ = std::move(wb);
  fb_ = std::move(fb);
  pending_.clear();
  history_.clear();
}

void session::load_facts(std::string_view text) { load(load_facts_text(text)); }

void session::load_csv(std::string_view text, const std::string& sheet) { load(load_csv_grid_text(text, sheet)); }

std::vector<diagnostic> session::load_grammar(const std::string& name, std::string_view text) {
  if (name.empty()) throw invalid("grammar name must not be empty");
  grammar g = parse_grammar(text);
  auto diags = validate_grammar(g, reg_);
  grammars_.insert_or_assign(name, std::move(g));
  return diags;
}

void session::define_predicate(const std::string& name, std::string_view text) {
  reg_.define(name, parse_predicate(text));
}

const grammar* session::find_grammar(const std::string& name) const {
  auto it = grammars_.find(name);
  return it == grammars_.end() ? nullptr : &it->second;
}

const std::vector<match>& session::match_rule(const std::string& grammar_name, const std::string& rule) {
  const grammar* g = find_grammar(grammar_name);
  if (!g) throw not_found("no grammar named '" + grammar_name + "'");
  auto diags = validate_grammar(*g, reg_);
  if (!diags.empty()) throw conflict("grammar '" + grammar_name + "' has errors: " + diags.front().message);
  std::vector<std::string> rules = rule.empty() ? g->roots() : std::vector<std::string>{rule};
  if (!rule.empty() && !g->contains(rule)) throw not_found("grammar '" + grammar_name + "' has no rule '" + rule + "'");
  std::vector<match> all;
  for (const auto& r : rules) {
    auto found = match_all(*g, r, *fb_, reg_);
    std::move(found.begin(), found.end(), std::back_inserter(all));
  }
  pending_ = select_cover(all);
  return pending_;
}

std::vector<std::string> session::accept(const std::vector<std::size_t>& indices) {
  std::vector<match> chosen;
  for (auto i : indices) {
    if (i >= pending_.size())
      throw invalid("suggestion " + std::to_string(i) + " does not exist (" + std::to_string(pending_.size()) +
                    " pending)");
    chosen.push_back(pending_[i]);
  }
  auto ops = match_to_transforms(chosen, *fb_, model_.names());
  model m = model_;
  std::vector<frame> frames;
  std::vector<std::string> notes;
  for (const auto& op : ops) {
    std::string note;
    model next = sheetgram::apply(m, op, *fb_, &note);
    if (!note.empty()) {
      notes.push_back(note);
      continue;
    }
    frames.push_back({describe(op), std::move(m)});
    m = std::move(next);
  }
  model_ = std::move(m);
  for (auto& f : frames) history_.push_back(std::move(f));
  return notes;
}

std::optional<std::string> session::apply(const operation& op) {
  std::string note;
  model next = sheetgram::apply(model_, op, *fb_, &note);
  if (!note.empty()) return note;
  history_.push_back({describe(op), std::move(model_)});
  model_ = std::move(next);
  return std::nullopt;
}

void session::undo() {
  if (history_.empty()) throw conflict("nothing to undo");
  model_ = std::move(history_.back().prior);
  history_.pop_back();
}

std::vector<std::string> session::history() const {
  std::vector<std::string> out;
  for (const auto& f : history_) out.push_back(f.description);
  return out;
}

std::string session::export_as(const std::string& format) const {
  if (format == "mm") return emit_mm(model_);
  if (format == "facts") return export_facts(compile(model_));
  if (format == "json") return json{{"mm", emit_mm(model_)}, {"model", model_json(model_)}}.dump(2) + "\n";
  throw invalid("unknown export format '" + format + "' (expected mm, facts or json)");
}

json session::execute(const json& command) {
  if (!command.is_object()) throw bad_payload("a command must be a JSON object");
  const std::string& type = str_field(command, "type");
  json reply = json::object();

  auto transform = [&](operation op) {
    if (auto note = apply(op)) reply["note"] = *note;
  };

  if (type == "load") {
    std::string facts = opt_str_field(command, "facts");
    std::string csv = opt_str_field(command, "csv");
    if (command.contains("csv"))
      load_csv(csv, opt_str_field(command, "sheet", "Sheet1"));
    else if (command.contains("facts"))
      load_facts(facts);
    else
      throw bad_payload("load needs 'facts' or 'csv'");
  } else if (type == "grammar") {
    reply["diagnostics"] = diagnostics_json(load_grammar(str_field(command, "name"), str_field(command, "text")));
  } else if (type == "predicate") {
    define_predicate(str_field(command, "name"), str_field(command, "text"));
  } else if (type == "match") {
    json matches = json::array();
    for (const auto& m : match_rule(str_field(command, "grammar"), opt_str_field(command, "rule")))
      matches.push_back(match_json(m));
    reply["matches"] = std::move(matches);
  } else if (type == "accept") {
    std::vector<std::size_t> indices;
    if (auto it = command.find("indices"); it != command.end() && !it->is_null()) {
      if (!it->is_array()) throw bad_payload("'indices' must be an array");
      for (const auto& i : *it) {
        if (!i.is_number_unsigned()) throw bad_payload("'indices' must hold non-negative integers");
        indices.push_back(i.get<std::size_t>());
      }
    } else {
      for (std::size_t i = 0; i < pending_.size(); ++i) indices.push_back(i);
    }
    auto notes = accept(indices);
    if (!notes.empty()) reply["notes"] = notes;
  } else if (type == "group") {
    group_op op{{}, str_field(command, "name")};
    auto it = command.find("cells");
    if (it == command.end()) throw bad_payload("group needs 'cells'");
    std::string sheet = opt_str_field(command, "sheet", default_sheet(wb_));
    auto add = [&](const json& c) {
      if (!c.is_string()) throw bad_payload("'cells' must hold A1 references");
      auto cells = parse_cells(c.get<std::string>(), sheet);
      op.cells.insert(op.cells.end(), cells.begin(), cells.end());
    };
    if (it->is_array())
      for (const auto& c : *it) add(c);
    else
      add(*it);
    transform(op);
  } else if (type == "rename") {
    transform(rename_op{str_field(command, "from"), str_field(command, "to")});
  } else if (type == "ungroup") {
    transform(ungroup_op{str_field(command, "name")});
  } else if (type == "name") {
    transform(name_from_label_op{str_field(command, "name")});
  } else if (type == "reindex") {
    reindex_op op{str_field(command, "name"), {}};
    if (auto it = command.find("labels"); it != command.end() && !it->is_null()) {
      if (!it->is_array()) throw bad_payload("'labels' must be an array");
      for (const auto& l : *it) {
        if (!l.is_string()) throw bad_payload("'labels' must hold strings");
        op.labels.push_back(l.get<std::string>());
      }
    }
    transform(op);
  } else if (type == "generalize") {
    transform(generalize_op{str_field(command, "name")});
  } else if (type == "undo") {
    undo();
  } else if (type == "export") {
    reply["text"] = export_as(opt_str_field(command, "format", "mm"));
  } else {
    throw bad_payload("unknown command type '" + type + "'");
  }
  reply["mm"] = emit_mm(model_);
  reply["model"] = model_json(model_);
  reply["history"] = history();
  return reply;
}

// ---------------------------------------------------------------------------
// JSON projections

json address_json(const address& a) {
  return {{"sheet", a.sheet}, {"col", a.col}, {"row", a.row}, {"a1", to_a1(a)}};
}

json model_json(const model& m) {
  json attrs = json::array();
  for (const auto& a : m.attributes) {
    json j;
    j["name"] = a.name;
    std::visit(overloaded{
                   [&](const range_domain& r) { j["domain"] = {{"kind", "range"}, {"size", r.n}}; },
                   [&](const enum_domain& e) { j["domain"] = {{"kind", "enum"}, {"labels", e.labels}}; },
               },
               a.domain);
    json cells = json::array(), exprs = json::array(), data = json::array(), labels = json::array();
    for (std::size_t k = 0; k < a.size(); ++k) {
      cells.push_back(to_a1(a.layout[k], m.multi_sheet));
      exprs.push_back(print_listing(a.exprs[k]));
      data.push_back(static_cast<bool>(a.data[k]));
    }
    for (const auto& l : a.labels) labels.push_back({{"cell", to_a1(l.at, m.multi_sheet)}, {"text", l.text}});
    j["cells"] = std::move(cells);
    j["exprs"] = std::move(exprs);
    j["data"] = std::move(data);
    j["labels"] = std::move(labels);
    j["generalized"] = a.generalized;
    attrs.push_back(std::move(j));
  }
  return {{"attributes", std::move(attrs)}, {"multi_sheet", m.multi_sheet}};
}

json grid_json(const fact_base& fb) {
  json cells = json::array();
  for (const auto& [a, content] : fb.book().cells()) {
    std::string kind = std::visit(overloaded{
                                      [](const number_cell&) { return "num"; },
                                      [](const text_cell&) { return "str"; },
                                      [](const formula_cell&) { return "formula"; },
                                  },
                                  content);
    if (fb.is_label(a)) kind = "label";
    cells.push_back({{"sheet", a.sheet}, {"col", a.col}, {"row", a.row}, {"kind", kind}, {"display", display_text(content)}});
  }
  json sheets = json::array();
  for (const auto& name : fb.book().sheets()) {
    auto b = fb.book().bounds_of(name);
    sheets.push_back({{"name", name}, {"max_col", b.max_col}, {"max_row", b.max_row}});
  }
  return {{"cells", std::move(cells)}, {"sheets", std::move(sheets)}};
}

json match_json(const match& m) {
  json bindings = json::array();
  for (const auto& b : m.bindings) {
    json cells = json::array();
    for (const auto& a : b.cells) cells.push_back(address_json(a));
    bindings.push_back({{"rule", b.rule}, {"cells", std::move(cells)}, {"predicates", b.predicates}});
  }
  json cells = json::array();
  for (const auto& a : m.cells()) cells.push_back(address_json(a));
  return {{"rule", m.rule},
          {"anchor", address_json(m.anchor)},
          {"end", address_json(m.end)},
          {"bindings", std::move(bindings)},
          {"cells", std::move(cells)}};
}

json diagnostics_json(const std::vector<diagnostic>& d) {
  json out = json::array();
  for (const auto& x : d) out.push_back({{"rule", x.rule}, {"message", x.message}});
  return out;
}

std::vector<address> parse_cells(std::string_view text, const std::string& sheet) {
  std::size_t colon = std::string_view::npos;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\'') quoted = !quoted;
    if (text[i] == ':' && !quoted) colon = i;
  }
  if (colon == std::string_view::npos) return {parse_address(text, sheet)};
  address from = parse_address(text.substr(0, colon), sheet);
  address to = parse_address(text.substr(colon + 1), from.sheet);
  if (to.sheet != from.sheet) throw invalid("a range cannot span sheets: " + std::string(text));
  int c0 = std::min(from.col, to.col), c1 = std::max(from.col, to.col);
  int r0 = std::min(from.row, to.row), r1 = std::max(from.row, to.row);
  if (static_cast<long long>(c1 - c0 + 1) * (r1 - r0 + 1) > 1000000) throw invalid("range too large: " + std::string(text));
  std::vector<address> out;
  for (int c = c0; c <= c1; ++c)
    for (int r = r0; r <= r1; ++r) out.push_back({from.sheet, c, r});
  return out;
}

// ---------------------------------------------------------------------------
// REPL

namespace {

const char* repl_help =
    "commands:\n"
    "  load PATH [SHEET]          load a fact file, or a CSV grid when PATH ends in .csv\n"
    "  grammar NAME PATH          load a grammar file\n"
    "  predicate NAME EXPR        define a predicate, e.g. predicate num_or_formula number OR formula\n"
    "  match GRAMMAR [RULE]       suggest groupings\n"
    "  accept [all | I ...]       apply suggestions by index\n"
    "  group NAME CELL...         group cells (A1 refs or ranges such as C2:C4)\n"
    "  rename OLD NEW\n"
    "  name ATTR                  name an attribute after its label\n"
    "  ungroup ATTR\n"
    "  reindex ATTR [LABEL...]    index an attribute by labels\n"
    "  generalize ATTR\n"
    "  show [mm|model|matches|grid|history]\n"
    "  undo\n"
    "  export mm|facts|json [PATH]\n"
    "  quit\n";

std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string rest_after(const std::string& line, std::size_t n_words) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n_words; ++i) {
    pos = line.find_first_not_of(" \t", pos);
    pos = line.find_first_of(" \t", pos);
    if (pos == std::string::npos) return {};
  }
  pos = line.find_first_not_of(" \t", pos);
  return pos == std::string::npos ? std::string() : line.substr(pos);
}

void need(const std::vector<std::string>& w, std::size_t n, const char* usage) {
  if (w.size() < n) throw invalid(std::string("usage: ") + usage);
}

std::string show_model(const model& m) {
  std::string out;
  for (const auto& a : m.attributes) {
    out += a.name;
    std::visit(overloaded{
                   [&](const range_domain& r) { out += "[1.." + std::to_string(r.n) + "]"; },
                   [&](const enum_domain& e) {
                     out += "{";
                     for (std::size_t k = 0; k < e.labels.size(); ++k) out += (k ? "," : "") + e.labels[k];
                     out += "}";
                   },
               },
               a.domain);
    out += " @";
    for (const auto& c : a.layout) out += " " + to_a1(c, m.multi_sheet);
    for (const auto& l : a.labels) out += " (label " + to_a1(l.at, m.multi_sheet) + ")";
    out += "\n";
  }
  return out;
}

std::string show_matches(const std::vector<match>& ms) {
  if (ms.empty()) return "no pending suggestions\n";
  std::string out;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    out += std::to_string(i) + ": " + ms[i].rule + " at " + to_a1(ms[i].anchor) + ":";
    for (const auto& b : ms[i].bindings) {
      if (b.cells.empty()) continue;
      out += " " + b.rule + "(";
      for (std::size_t k = 0; k < b.cells.size(); ++k) out += (k ? " " : "") + to_a1(b.cells[k]);
      out += ")";
    }
    out += "\n";
  }
  return out;
}

std::string show_grid(const fact_base& fb) {
  std::string out;
  for (const auto& [a, content] : fb.book().cells()) {
    out += to_a1(a, true) + "\t";
    out += fb.is_label(a) ? "label" : std::holds_alternative<number_cell>(content) ? "num"
                                      : std::holds_alternative<text_cell>(content) ? "str"
                                                                                   : "formula";
    out += "\t" + display_text(content) + "\n";
  }
  return out;
}

std::string repl_dispatch(session& s, const std::string& line, bool& quit) {
  auto w = words(line);
  if (w.empty() || w.front().front() == '#') return {};
  const std::string& cmd = w.front();
  auto mm = [&] { return emit_mm(s.current()); };
  auto with_note = [&](const std::optional<std::string>& note) {
    return note ? "note: " + *note + "\n" : mm();
  };
  std::string sheet = s.facts().book().sheets().empty() ? "Sheet1" : s.facts().book().sheets().front();

  if (cmd == "quit" || cmd == "exit") {
    quit = true;
    return {};
  }
  if (cmd == "help") return repl_help;
  if (cmd == "load") {
    need(w, 2, "load PATH [SHEET]");
    std::string text = read_file(w[1]);
    bool csv = w[1].size() >= 4 && w[1].compare(w[1].size() - 4, 4, ".csv") == 0;
    if (csv) {
      std::string name = w.size() > 2 ? w[2] : w[1];
      if (w.size() <= 2) {
        auto slash = name.find_last_of('/');
        if (slash != std::string::npos) name = name.substr(slash + 1);
        name = name.substr(0, name.size() - 4);
      }
      s.load_csv(text, name);
    } else {
      s.load_facts(text);
    }
    return mm();
  }
  if (cmd == "grammar") {
    need(w, 3, "grammar NAME PATH");
    auto diags = s.load_grammar(w[1], read_file(w[2]));
    std::string out = "grammar " + w[1] + " loaded (" + std::to_string(s.find_grammar(w[1])->rules().size()) + " rules)\n";
    for (const auto& d : diags) out += "  " + d.rule + ": " + d.message + "\n";
    return out;
  }
  if (cmd == "predicate") {
    need(w, 3, "predicate NAME EXPR");
    s.define_predicate(w[1], rest_after(line, 2));
    return "predicate " + w[1] + " defined\n";
  }
  if (cmd == "match") {
    need(w, 2, "match GRAMMAR [RULE]");
    return show_matches(s.match_rule(w[1], w.size() > 2 ? w[2] : std::string()));
  }
  if (cmd == "accept") {
    std::vector<std::size_t> indices;
    if (w.size() == 1 || w[1] == "all") {
      for (std::size_t i = 0; i < s.pending().size(); ++i) indices.push_back(i);
    } else {
      for (std::size_t k = 1; k < w.size(); ++k) {
        if (w[k].find_first_not_of("0123456789") != std::string::npos || w[k].size() > 9)
          throw invalid("not a suggestion index: " + w[k]);
        indices.push_back(std::stoul(w[k]));
      }
    }
    std::string out;
    for (const auto& n : s.accept(indices)) out += "note: " + n + "\n";
    return out + mm();
  }
  if (cmd == "group") {
    need(w, 3, "group NAME CELL...");
    group_op op{{}, w[1]};
    for (std::size_t k = 2; k < w.size(); ++k) {
      auto cells = parse_cells(w[k], sheet);
      op.cells.insert(op.cells.end(), cells.begin(), cells.end());
    }
    return with_note(s.apply(op));
  }
  if (cmd == "rename") {
    need(w, 3, "rename OLD NEW");
    return with_note(s.apply(rename_op{w[1], w[2]}));
  }
  if (cmd == "name") {
    need(w, 2, "name ATTR");
    return with_note(s.apply(name_from_label_op{w[1]}));
  }
  if (cmd == "ungroup") {
    need(w, 2, "ungroup ATTR");
    return with_note(s.apply(ungroup_op{w[1]}));
  }
  if (cmd == "reindex") {
    need(w, 2, "reindex ATTR [LABEL...]");
    return with_note(s.apply(reindex_op{w[1], std::vector<std::string>(w.begin() + 2, w.end())}));
  }
  if (cmd == "generalize") {
    need(w, 2, "generalize ATTR");
    return with_note(s.apply(generalize_op{w[1]}));
  }
  if (cmd == "undo") {
    s.undo();
    return mm();
  }
  if (cmd == "show") {
    std::string what = w.size() > 1 ? w[1] : "mm";
    if (what == "mm") return mm();
    if (what == "model") return show_model(s.current());
    if (what == "matches") return show_matches(s.pending());
    if (what == "grid") return show_grid(s.facts());
    if (what == "history") {
      std::string out;
      auto h = s.history();
      for (std::size_t i = 0; i < h.size(); ++i) out += std::to_string(i + 1) + ". " + h[i] + "\n";
      return out.empty() ? "history is empty\n" : out;
    }
    throw invalid("usage: show [mm|model|matches|grid|history]");
  }
  if (cmd == "export") {
    need(w, 2, "export mm|facts|json [PATH]");
    std::string text = s.export_as(w[1]);
    if (w.size() < 3) return text;
    std::ofstream out(w[2], std::ios::binary);
    if (!(out << text)) throw error(errc::io, "cannot write " + w[2]);
    return "wrote " + w[2] + "\n";
  }
  throw invalid("unknown command '" + cmd + "' (try help)");
}

}  // namespace

std::string repl_execute(session& s, const std::string& line, bool& quit) {
  quit = false;
  try {
    return repl_dispatch(s, line, quit);
  } catch (const std::exception& e) {
    return std::string("error: ") + e.what() + "\n";
  }
}

// ---------------------------------------------------------------------------
// discover

discover_output discover(const discover_input& in) {
  if (in.emit != "mm" && in.emit != "json") throw invalid("unknown output format '" + in.emit + "'");
  if (!in.facts.empty() && !in.csv.empty()) throw invalid("give either facts or a CSV grid, not both");
  workbook wb = !in.csv.empty() ? load_csv_grid_text(in.csv, in.sheet.empty() ? "Sheet1" : in.sheet)
                                : load_facts_text(in.facts);
  grammar g = parse_grammar(in.grammar);
  predicate_registry reg;
  auto diags = validate_grammar(g, reg);
  if (!diags.empty()) {
    std::string msg = "grammar has errors:";
    for (const auto& d : diags) msg += "\n  " + d.rule + ": " + d.message;
    throw invalid(msg);
  }
  std::vector<std::string> rules;
  if (in.rule.empty()) {
    rules = g.roots();
  } else {
    if (!g.contains(in.rule)) throw not_found("grammar has no rule '" + in.rule + "'");
    rules.push_back(in.rule);
  }

  fact_base fb(wb);
  model m = decompile(wb);
  std::vector<match> all;
  for (const auto& r : rules) {
    auto found = match_all(g, r, fb, reg);
    std::move(found.begin(), found.end(), std::back_inserter(all));
  }
  discover_output out;
  for (const auto& op : match_to_transforms(select_cover(all), fb, m.names())) {
    try {
      std::string note;
      m = apply(m, op, fb, &note);
      if (!note.empty()) out.warnings.push_back(note);
    } catch (const error& e) {
      out.warnings.push_back("skipped " + describe(op) + ": " + e.what());
    }
  }
  if (in.emit == "json")
    out.text = json{{"mm", emit_mm(m)}, {"model", model_json(m)}}.dump(2) + "\n";
  else
    out.text = emit_mm(m);
  return out;
}

}  // namespace sheetgram
