#include "sheetgram/cell_model.hpp"

#include <algorithm>
#include <sstream>

#include "sheetgram/error.hpp"

namespace sheetgram {

formula_cell make_formula(std::string source, const address& host) {
  expr ast = parse_formula(source, host);
  return formula_cell{std::move(source), std::move(ast)};
}

bool workbook::insert(const address& a, cell_content content) {
  auto [it, inserted] = cells_.emplace(a, std::move(content));
  if (inserted) grow(a);
  return inserted;
}

void workbook::set(const address& a, cell_content content) {
  cells_.insert_or_assign(a, std::move(content));
  grow(a);
}

void workbook::grow(const address& a) {
  auto& b = bounds_[a.sheet];
  b.max_col = std::max(b.max_col, a.col);
  b.max_row = std::max(b.max_row, a.row);
}

const cell_content* workbook::find(const address& a) const {
  auto it = cells_.find(a);
  return it == cells_.end() ? nullptr : &it->second;
}

std::vector<std::string> workbook::sheets() const {
  std::vector<std::string> out;
  out.reserve(bounds_.size());
  for (const auto& [name, b] : bounds_) out.push_back(name);
  return out;
}

bounds workbook::bounds_of(std::string_view sheet) const {
  auto it = bounds_.find(sheet);
  return it == bounds_.end() ? bounds{} : it->second;
}

std::string display_text(const cell_content& c) {
  return std::visit(overloaded{
                        [](const number_cell& n) { return format_number(n.value); },
                        [](const text_cell& t) { return t.value; },
                        [](const formula_cell& f) { return f.source; },
                    },
                    c);
}

// ---------------------------------------------------------------------------
// Fact files

namespace {

std::string escape_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_text(std::string_view s, std::size_t line, std::size_t column) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (i + 1 >= s.size()) throw parse_error("dangling backslash in text payload", line, column + i);
    switch (s[++i]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case '\\': out += '\\'; break;
      default: throw parse_error("unknown escape '\\" + std::string(1, s[i]) + "'", line, column + i - 1);
    }
  }
  return out;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

workbook load_facts(std::istream& in) {
  workbook wb;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (blank(line) || line.front() == '#') continue;

    std::string_view fields[5];
    std::size_t starts[5];
    std::size_t pos = 0;
    for (int f = 0; f < 4; ++f) {
      auto tab = line.find('\t', pos);
      if (tab == std::string_view::npos)
        throw parse_error("expected 5 tab-separated fields, found " + std::to_string(f + 1), line_no, 1);
      starts[f] = pos + 1;
      fields[f] = line.substr(pos, tab - pos);
      pos = tab + 1;
    }
    starts[4] = pos + 1;
    fields[4] = line.substr(pos);

    if (fields[0].empty()) throw parse_error("empty sheet name", line_no, starts[0]);
    address a{std::string(fields[0]), 0, 0};
    try {
      a.col = letters_to_col(fields[1]);
    } catch (const error& e) {
      throw parse_error(e.what(), line_no, starts[1]);
    }
    auto row = parse_decimal(fields[2]);
    if (!row || *row < 1 || *row != static_cast<double>(static_cast<long long>(*row)) || *row > max_row ||
        fields[2].find_first_not_of("0123456789") != std::string_view::npos)
      throw parse_error("malformed row '" + std::string(fields[2]) + "'", line_no, starts[2]);
    a.row = static_cast<int>(*row);

    cell_content content = number_cell{0};
    std::string_view kind = fields[3];
    if (kind == "num") {
      auto v = parse_decimal(fields[4]);
      if (!v) throw parse_error("malformed number '" + std::string(fields[4]) + "'", line_no, starts[4]);
      content = number_cell{*v};
    } else if (kind == "str") {
      content = text_cell{unescape_text(fields[4], line_no, starts[4])};
    } else if (kind == "formula") {
      try {
        content = make_formula(std::string(fields[4]), a);
      } catch (const parse_error& e) {
        throw parse_error("in cell " + to_a1(a, true) + ": " + e.message(), line_no, starts[4] + e.column() - 1);
      }
    } else {
      throw parse_error("unknown kind '" + std::string(kind) + "' (expected num, str or formula)", line_no,
                        starts[3]);
    }
    if (!wb.insert(a, std::move(content)))
      throw parse_error("duplicate address " + to_a1(a, true), line_no, 1);
  }
  return wb;
}

workbook load_facts_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return load_facts(in);
}

std::string export_facts(const workbook& wb) {
  std::string out;
  for (const auto& [a, content] : wb.cells()) {
    if (a.sheet.find_first_of("\t\n\r") != std::string::npos)
      throw invalid("sheet name cannot be written to a fact file: " + a.sheet);
    out += a.sheet;
    out += '\t';
    out += col_to_letters(a.col);
    out += '\t';
    out += std::to_string(a.row);
    out += '\t';
    std::visit(overloaded{
                   [&](const number_cell& n) { out += "num\t" + format_number(n.value); },
                   [&](const text_cell& t) { out += "str\t" + escape_text(t.value); },
                   [&](const formula_cell& f) {
                     if (f.source.find_first_of("\n\r") != std::string::npos)
                       throw invalid("formula at " + to_a1(a, true) + " contains a line break");
                     out += "formula\t" + f.source;
                   },
               },
               content);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV grids

workbook load_csv_grid(std::istream& in, const std::string& sheet) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_csv_grid_text(text, sheet);
}

workbook load_csv_grid_text(std::string_view text, const std::string& sheet) {
  if (sheet.empty()) throw invalid("CSV grids need a sheet name");
  workbook wb;
  int row = 1, col = 1;
  std::size_t i = 0;
  std::size_t line = 1;

  auto store = [&](std::string field) {
    if (field.empty()) return;
    address a{sheet, col, row};
    if (field.front() == '=') {
      try {
        wb.insert(a, make_formula(std::move(field), a));
      } catch (const parse_error& e) {
        throw parse_error("in cell " + to_a1(a) + ": " + e.message(), line, e.column());
      }
    } else if (auto v = parse_decimal(field)) {
      wb.insert(a, number_cell{*v});
    } else {
      wb.insert(a, text_cell{std::move(field)});
    }
  };

  while (i < text.size()) {
    std::string field;
    if (text[i] == '"') {
      std::size_t open_line = line;
      ++i;
      for (;;) {
        if (i >= text.size()) throw parse_error("unterminated quoted field", open_line, 1);
        char c = text[i++];
        if (c == '"') {
          if (i < text.size() && text[i] == '"') {
            field += '"';
            ++i;
            continue;
          }
          break;
        }
        if (c == '\n') ++line;
        field += c;
      }
      if (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r')
        throw parse_error("unexpected character after closing quote", line, 1);
    } else {
      while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') field += text[i++];
    }
    store(std::move(field));

    if (i >= text.size()) break;
    if (text[i] == ',') {
      ++i;
      ++col;
      if (i >= text.size()) break;
      continue;
    }
    if (text[i] == '\r') ++i;
    if (i < text.size() && text[i] == '\n') ++i;
    ++line;
    ++row;
    col = 1;
  }
  return wb;
}

}  // namespace sheetgram
