#include <doctest.h>

#include <random>

#include "sheetgram/error.hpp"
#include "support.hpp"

using namespace sheetgram;
using sgtest::at;

TEST_CASE("parse_address") {
  CHECK(parse_address("A1", "S") == address{"S", 1, 1});
  CHECK(parse_address("C2", "Sheet1") == address{"Sheet1", 3, 2});
  CHECK(parse_address("AA10", "Sheet1") == address{"Sheet1", 27, 10});
  CHECK(parse_address("$B$7", "S") == address{"S", 2, 7});
  CHECK(parse_address("b7", "S") == address{"S", 2, 7});
  CHECK(parse_address("Other!C3", "S") == address{"Other", 3, 3});
  CHECK(parse_address("'My sheet'!C3", "S") == address{"My sheet", 3, 3});

  for (const char* bad : {"", "1A", "A", "A0", "A1x", "!A1", "A-1"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_address(bad, "S"), parse_error);
  }
  try {
    parse_address("A1x", "S");
  } catch (const parse_error& e) {
    CHECK(e.column() == 3);
    CHECK(e.line() == 0);
  }
}

TEST_CASE("column letters") {
  CHECK(col_to_letters(1) == "A");
  CHECK(col_to_letters(3) == "C");
  CHECK(col_to_letters(26) == "Z");
  CHECK(col_to_letters(27) == "AA");
  CHECK(col_to_letters(52) == "AZ");
  CHECK(col_to_letters(703) == "AAA");
  CHECK_THROWS_AS(col_to_letters(0), error);
  CHECK_THROWS_AS(letters_to_col(""), error);
  CHECK_THROWS_AS(letters_to_col("a"), error);
  CHECK_THROWS_AS(letters_to_col("XFE"), error);

  // Independent decoder: sum of digit * 26^k with digits 1..26.
  for (int n = 1; n <= max_col; ++n) {
    std::string s = col_to_letters(n);
    long v = 0;
    for (char c : s) v = v * 26 + (c - 'A' + 1);
    REQUIRE(v == n);
    REQUIRE(letters_to_col(s) == n);
  }
}

TEST_CASE("to_a1 and sheet quoting") {
  CHECK(to_a1(address{"Sheet1", 3, 2}) == "C2");
  CHECK(to_a1(address{"Sheet2", 3, 2}, true) == "Sheet2!C2");
  CHECK(to_a1(address{"My sheet", 1, 1}, true) == "'My sheet'!A1");
  CHECK(parse_address(to_a1(address{"It's", 4, 9}, true), "x") == address{"It's", 4, 9});
}

TEST_CASE("load_facts examples") {
  auto wb = load_facts_text("Sheet1\tA\t1\tstr\tIncome\n");
  REQUIRE(wb.size() == 1);
  CHECK(*cell_at(wb, at("A1")) == cell_content{text_cell{"Income"}});

  CHECK(load_facts_text("").empty());
  CHECK(load_facts_text("# only a comment\n\n").empty());

  auto f = load_facts_text("Sheet1\tC\t2\tformula\t=A2-B2\n");
  auto* c = std::get_if<formula_cell>(cell_at(f, at("C2")));
  REQUIRE(c);
  CHECK(c->ast == make_binary(binary_op::sub, make_ref(at("A2")), make_ref(at("B2"))));
  CHECK(c->source == "=A2-B2");
}

TEST_CASE("load_facts payloads and errors") {
  auto wb = load_facts_text("S\tA\t1\tstr\t  padded  \nS\tA\t2\tstr\ttab\\there\\nnew\\\\\nS\tA\t3\tnum\t-1.5e2\n");
  CHECK(*wb.find(address{"S", 1, 1}) == cell_content{text_cell{"  padded  "}});
  CHECK(*wb.find(address{"S", 1, 2}) == cell_content{text_cell{"tab\there\nnew\\"}});
  CHECK(*wb.find(address{"S", 1, 3}) == cell_content{number_cell{-150}});

  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      load_facts_text(text);
    } catch (const parse_error& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("S\tA\t1\tnum\t1\nS\tA\t1\tnum\t2\n") == 2);
  CHECK(line_of("# c\nS\tA\t1\tnum\n") == 2);
  CHECK(line_of("S\tA\t1\tnum\tabc\n") == 1);
  CHECK(line_of("S\tA\t0\tnum\t1\n") == 1);
  CHECK(line_of("S\ta\t1\tnum\t1\n") == 1);
  CHECK(line_of("S\tA\t1\tdate\t1\n") == 1);
  CHECK(line_of("S\tA\t1\tnum\t1\nS\tB\t3\tformula\t=A1+\n") == 2);
  try {
    load_facts_text("S\tB\t3\tformula\t=A1+\n");
  } catch (const parse_error& e) {
    CHECK(std::string(e.what()).find("S!B3") != std::string::npos);
  }
}

TEST_CASE("load_csv_grid examples") {
  auto wb = load_csv_grid_text("Income,Outgoings,Profit\n", "Sheet1");
  CHECK(wb.size() == 3);
  CHECK(*cell_at(wb, at("A1")) == cell_content{text_cell{"Income"}});
  CHECK(*cell_at(wb, at("C1")) == cell_content{text_cell{"Profit"}});

  auto row2 = load_csv_grid_text("\n,,=A2-B2\n", "Sheet1");
  REQUIRE(row2.size() == 1);
  CHECK(std::holds_alternative<formula_cell>(*cell_at(row2, at("C2"))));

  auto n = load_csv_grid_text("3.5", "Sheet1");
  CHECK(*cell_at(n, at("A1")) == cell_content{number_cell{3.5}});

  CHECK(load_csv_grid_text("", "Sheet1").empty());

  auto q = load_csv_grid_text("\"a,b\",\"say \"\"hi\"\"\"\r\n\"multi\nline\",x\n", "Q");
  CHECK(*q.find(address{"Q", 1, 1}) == cell_content{text_cell{"a,b"}});
  CHECK(*q.find(address{"Q", 2, 1}) == cell_content{text_cell{"say \"hi\""}});
  CHECK(*q.find(address{"Q", 1, 2}) == cell_content{text_cell{"multi\nline"}});
  CHECK(*q.find(address{"Q", 2, 2}) == cell_content{text_cell{"x"}});

  CHECK_THROWS_AS(load_csv_grid_text("=A1+", "S"), parse_error);
}

TEST_CASE("cell_at") {
  auto wb = sgtest::income();
  CHECK(*cell_at(wb, at("A1")) == cell_content{text_cell{"Income"}});
  CHECK(cell_at(workbook{}, at("A1")) == nullptr);
  auto* c2 = std::get_if<formula_cell>(cell_at(wb, at("C2")));
  REQUIRE(c2);
  CHECK(c2->source == "=A2-B2");
  CHECK(cell_at(wb, at("D9")) == nullptr);
}

TEST_CASE("csv and facts agree on the income grid") {
  CHECK(load_csv_grid_text(sgtest::fixture("income.csv"), "Sheet1") == sgtest::income());
}

TEST_CASE("bounds and sheets") {
  workbook wb;
  CHECK(wb.bounds_of("S") == bounds{0, 0});
  std::mt19937 rng(7);
  bounds prev{0, 0};
  for (int i = 0; i < 300; ++i) {
    address a{"S", std::uniform_int_distribution<int>(1, 40)(rng), std::uniform_int_distribution<int>(1, 40)(rng)};
    wb.set(a, number_cell{1});
    bounds b = wb.bounds_of("S");
    REQUIRE(b.max_col >= prev.max_col);
    REQUIRE(b.max_row >= prev.max_row);
    REQUIRE(b.max_col >= a.col);
    REQUIRE(b.max_row >= a.row);
    prev = b;
  }
  wb.set(address{"B", 1, 1}, number_cell{2});
  CHECK(wb.sheets() == std::vector<std::string>{"B", "S"});
  CHECK_FALSE(wb.insert(address{"B", 1, 1}, number_cell{3}));
  CHECK(*wb.find(address{"B", 1, 1}) == cell_content{number_cell{2}});
}

TEST_CASE("facts round trip on random workbooks") {
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    workbook wb = sgtest::random_workbook(rng, 12, i % 3 ? "Sheet1" : "Data sheet");
    std::string text = export_facts(wb);
    workbook back = load_facts_text(text);
    REQUIRE(back == wb);
    REQUIRE(back.sheets() == wb.sheets());
    REQUIRE(export_facts(back) == text);
  }
}

TEST_CASE("csv then facts round trip") {
  std::string csv = sgtest::fixture("income.csv");
  workbook wb = load_csv_grid_text(csv, "Sheet1");
  CHECK(load_facts_text(export_facts(wb)) == wb);
}

TEST_CASE("export is ordered and numbers keep 15 digits") {
  workbook wb;
  wb.set(address{"S", 2, 1}, number_cell{0.1 + 0.2});
  wb.set(address{"S", 1, 2}, number_cell{1e20});
  wb.set(address{"S", 1, 1}, text_cell{"x"});
  CHECK(export_facts(wb) == "S\tA\t1\tstr\tx\nS\tB\t1\tnum\t0.3\nS\tA\t2\tnum\t1e+20\n");
}
