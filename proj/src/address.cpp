#include "sheetgram/address.hpp"

#include <cctype>

#include "sheetgram/error.hpp"

namespace sheetgram {

std::string col_to_letters(int col) {
  if (col < 1) throw invalid("column must be >= 1, got " + std::to_string(col));
  std::string out;
  while (col > 0) {
    int rem = (col - 1) % 26;
    out.insert(out.begin(), static_cast<char>('A' + rem));
    col = (col - 1) / 26;
  }
  return out;
}

int letters_to_col(std::string_view letters) {
  if (letters.empty()) throw invalid("empty column letters");
  long long col = 0;
  for (char c : letters) {
    if (c < 'A' || c > 'Z') throw invalid("not a column letter: '" + std::string(1, c) + "'");
    col = col * 26 + (c - 'A' + 1);
    if (col > max_col) throw invalid("column out of range: " + std::string(letters));
  }
  return static_cast<int>(col);
}

namespace {

bool plain_sheet_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

}  // namespace

std::string quote_sheet(std::string_view sheet) {
  bool plain = !sheet.empty() && !std::isdigit(static_cast<unsigned char>(sheet.front()));
  for (char c : sheet) plain = plain && plain_sheet_char(c);
  if (plain) return std::string(sheet);
  std::string out = "'";
  for (char c : sheet) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

std::string to_a1(const address& a, bool with_sheet) {
  std::string cell = col_to_letters(a.col) + std::to_string(a.row);
  if (!with_sheet) return cell;
  return quote_sheet(a.sheet) + "!" + cell;
}

address parse_address(std::string_view text, std::string_view default_sheet) {
  auto fail = [&](const std::string& msg, std::size_t pos) -> parse_error {
    return parse_error(msg + " in reference '" + std::string(text) + "'", 0, pos + 1);
  };

  std::size_t pos = 0;
  std::string sheet(default_sheet);
  if (auto bang = text.rfind('!'); bang != std::string_view::npos) {
    std::string_view prefix = text.substr(0, bang);
    if (prefix.size() >= 2 && prefix.front() == '\'' && prefix.back() == '\'') {
      sheet.clear();
      for (std::size_t i = 1; i + 1 < prefix.size(); ++i) {
        sheet += prefix[i];
        if (prefix[i] == '\'' && i + 2 < prefix.size() && prefix[i + 1] == '\'') ++i;
      }
    } else {
      sheet = std::string(prefix);
    }
    if (sheet.empty()) throw fail("empty sheet name", 0);
    pos = bang + 1;
  }

  if (pos < text.size() && text[pos] == '$') ++pos;
  std::size_t letters_start = pos;
  std::string letters;
  while (pos < text.size() && std::isalpha(static_cast<unsigned char>(text[pos]))) {
    letters += static_cast<char>(std::toupper(static_cast<unsigned char>(text[pos])));
    ++pos;
  }
  if (letters.empty()) throw fail("expected column letters", letters_start);
  if (pos < text.size() && text[pos] == '$') ++pos;
  std::size_t digits_start = pos;
  long long row = 0;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    row = row * 10 + (text[pos] - '0');
    if (row > max_row) throw fail("row out of range", digits_start);
    ++pos;
  }
  if (pos == digits_start) throw fail("expected row digits", digits_start);
  if (pos != text.size()) throw fail("unexpected character", pos);
  if (row < 1) throw fail("row must be >= 1", digits_start);

  int col = 0;
  try {
    col = letters_to_col(letters);
  } catch (const error&) {
    throw fail("column out of range", letters_start);
  }
  return address{sheet, col, static_cast<int>(row)};
}

}  // namespace sheetgram
