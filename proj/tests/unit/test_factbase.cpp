#include <doctest.h>

#include <random>

#include "sheetgram/error.hpp"
#include "support.hpp"

using namespace sheetgram;
using sgtest::at;

namespace {

workbook book(std::initializer_list<std::pair<const char*, const char*>> cells) {
  workbook wb;
  for (const auto& [a1, text] : cells) {
    address a = at(a1);
    std::string t = text;
    if (!t.empty() && t[0] == '=')
      wb.set(a, make_formula(t, a));
    else if (auto v = parse_decimal(t))
      wb.set(a, number_cell{*v});
    else
      wb.set(a, text_cell{t});
  }
  return wb;
}

std::set<address> cells(std::initializer_list<const char*> a1s) {
  std::set<address> out;
  for (const char* a : a1s) out.insert(at(a));
  return out;
}

void check_symmetry(const fact_base& fb) {
  std::set<address> universe;
  for (const auto& [a, c] : fb.book().cells()) {
    universe.insert(a);
    for (const auto& d : fb.depends_on(a)) universe.insert(d);
  }
  for (const auto& c : universe)
    for (const auto& d : universe)
      REQUIRE((fb.depends_on(c).count(d) != 0) == (fb.dependents(d).count(c) != 0));
}

}  // namespace

TEST_CASE("build on the income grid") {
  fact_base fb(sgtest::income());
  CHECK(fb.depends_on(at("C2")) == cells({"A2", "B2"}));
  CHECK(fb.dependents(at("A2")) == cells({"C2"}));
  fact_base empty{workbook{}};
  CHECK(empty.labels().empty());
  CHECK(empty.depends_on(at("A1")).empty());
  CHECK(empty.dependents(at("A1")).empty());
}

TEST_CASE("is_label") {
  fact_base fb(sgtest::income());
  CHECK(fb.is_label(at("A1")));
  CHECK_FALSE(fb.is_label(at("Z9")));
  CHECK_FALSE(fb.is_label(at("A2")));
  CHECK(fb.labels() == cells({"A1", "B1", "C1"}));

  fact_base concat(book({{"A1", "Hello"}, {"B1", "=CONCATENATE(A1,\"!\")"}}));
  CHECK_FALSE(concat.is_label(at("A1")));
  CHECK(concat.labels().empty());
}

TEST_CASE("depends_on and dependents") {
  fact_base fb(sgtest::income());
  CHECK(fb.depends_on(at("C3")) == cells({"A3", "B3"}));
  CHECK(fb.depends_on(at("A3")).empty());
  fact_base sum(book({{"B1", "=SUM(A1:A3)"}}));
  CHECK(sum.depends_on(at("B1")) == cells({"A1", "A2", "A3"}));
  CHECK(sum.dependents(at("A2")) == cells({"B1"}));
}

TEST_CASE("depends_on_transitive") {
  fact_base chain(book({{"A1", "1"}, {"B1", "=A1"}, {"C1", "=B1"}}));
  CHECK(chain.depends_on_transitive(at("C1")) == cells({"B1", "A1"}));
  CHECK(chain.depends_on_transitive(at("A1")).empty());
  fact_base fb(sgtest::income());
  CHECK(fb.depends_on_transitive(at("C2")) == cells({"A2", "B2"}));

  fact_base loop(book({{"A1", "=B1"}, {"B1", "=A1"}}));
  CHECK(loop.depends_on_transitive(at("A1")) == cells({"A1", "B1"}));
}

TEST_CASE("detect_cycles") {
  fact_base two(book({{"A1", "=B1"}, {"B1", "=A1"}}));
  CHECK(two.detect_cycles() == std::vector<std::vector<address>>{{at("A1"), at("B1")}});
  CHECK(fact_base(sgtest::income()).detect_cycles().empty());
  fact_base self(book({{"A1", "=A1"}}));
  CHECK(self.detect_cycles() == std::vector<std::vector<address>>{{at("A1")}});
  fact_base mixed(book({{"A1", "=B1+1"}, {"B1", "=C1"}, {"C1", "=A1"}, {"D1", "=D1"}, {"E1", "=A1"}}));
  CHECK(mixed.detect_cycles() == std::vector<std::vector<address>>{{at("A1"), at("B1"), at("C1")}, {at("D1")}});
}

TEST_CASE("copy_of") {
  fact_base fb(sgtest::income());
  CHECK(fb.copy_of(at("C2"), at("C3")));
  CHECK(fb.copy_of(at("C2"), at("C2")));
  CHECK_FALSE(fb.copy_of(at("A2"), at("A2")));
  fact_base swapped(book({{"C2", "=A2-B2"}, {"C3", "=B3-A3"}}));
  CHECK_FALSE(swapped.copy_of(at("C2"), at("C3")));
  fact_base textual(book({{"C2", "=A2-B2"}, {"C3", "=A2-B2"}}));
  CHECK_FALSE(textual.copy_of(at("C2"), at("C3")));
}

TEST_CASE("column_all_copies") {
  fact_base fb(sgtest::income());
  CHECK(fb.column_all_copies("Sheet1", 3, 2, 4));
  CHECK(fb.column_all_copies("Sheet1", 3, 3, 3));
  CHECK_FALSE(fb.column_all_copies("Sheet1", 3, 1, 4));
  CHECK_FALSE(fb.column_all_copies("Sheet1", 1, 2, 4));
  fact_base with_num(book({{"C2", "=A2-B2"}, {"C3", "5"}, {"C4", "=A4-B4"}}));
  CHECK_FALSE(with_num.column_all_copies("Sheet1", 3, 2, 4));
}

TEST_CASE("built-in predicates") {
  fact_base fb(sgtest::income());
  predicate_registry reg;
  CHECK(eval_predicate(reg, "label", fb, at("A1")));
  CHECK(eval_predicate(reg, "empty", fb, at("H8")));
  CHECK(eval_predicate(reg, "formula", fb, at("C2")));
  CHECK(eval_predicate(reg, "number", fb, at("A2")));
  CHECK(eval_predicate(reg, "cell", fb, at("A2")));
  CHECK(eval_predicate(reg, "cell", fb, at("C2")));
  CHECK_FALSE(eval_predicate(reg, "cell", fb, at("A1")));
  CHECK(eval_predicate(reg, "text", fb, at("A1")));
  CHECK_FALSE(eval_predicate(reg, "empty", fb, at("A1")));
  CHECK_THROWS_AS(eval_predicate(reg, "labell", fb, at("A1")), error);

  fact_base concat(book({{"A1", "Hello"}, {"B1", "=A1"}}));
  CHECK(eval_predicate(reg, "cell", concat, at("A1")));
}

TEST_CASE("user predicates combine built-ins") {
  fact_base fb(sgtest::income());
  predicate_registry reg;
  reg.define("data", parse_predicate("number OR (text AND NOT label)"));
  CHECK(reg.eval("data", fb, at("A2")));
  CHECK_FALSE(reg.eval("data", fb, at("A1")));
  CHECK_FALSE(reg.eval("data", fb, at("C2")));
  reg.define("calc_or_data", parse_predicate("formula OR data"));
  CHECK(reg.eval("calc_or_data", fb, at("C2")));
  CHECK(parse_predicate("NOT NOT label") == pred_negate(pred_negate(pred("label"))));
  CHECK(parse_predicate("a OR b AND c") == pred_any(pred("a"), pred_all(pred("b"), pred("c"))));

  CHECK_THROWS_AS(reg.define("label", parse_predicate("cell")), error);
  CHECK_THROWS_AS(reg.define("later", parse_predicate("missing")), error);
  CHECK_THROWS_AS(parse_predicate("label AND"), parse_error);
  CHECK_THROWS_AS(parse_predicate("(label"), parse_error);
}

TEST_CASE("symmetry and label independence on fixtures") {
  for (const auto& wb : {sgtest::income(), sgtest::property(),
                         book({{"A1", "=B1"}, {"B1", "=A1"}, {"C1", "=SUM(A1:B3)"}})}) {
    fact_base fb(wb);
    check_symmetry(fb);
    for (const auto& [a, c] : wb.cells())
      for (const auto& d : fb.depends_on(a)) REQUIRE_FALSE(fb.is_label(d));
  }
}

TEST_CASE("copy_of is an equivalence on random workbooks") {
  std::mt19937 rng(17);
  for (int i = 0; i < 100; ++i) {
    fact_base fb(sgtest::random_workbook(rng, 8));
    std::vector<address> formulas;
    for (const auto& [a, c] : fb.book().cells())
      if (std::holds_alternative<formula_cell>(c)) formulas.push_back(a);
    for (const auto& x : formulas) {
      REQUIRE(fb.copy_of(x, x));
      for (const auto& y : formulas) {
        REQUIRE(fb.copy_of(x, y) == fb.copy_of(y, x));
        if (!fb.copy_of(x, y)) continue;
        for (const auto& z : formulas)
          if (fb.copy_of(y, z)) REQUIRE(fb.copy_of(x, z));
      }
    }
  }
}

TEST_CASE("transitive dependencies match a BFS oracle") {
  std::mt19937 rng(19);
  for (int i = 0; i < 100; ++i) {
    workbook wb = sgtest::random_workbook(rng, 8);
    fact_base fb(wb);
    check_symmetry(fb);
    for (int c = 1; c <= 9; ++c)
      for (int r = 1; r <= 9; ++r) {
        address a{"Sheet1", c, r};
        REQUIRE(fb.depends_on_transitive(a) == sgtest::bfs_reach(wb, a));
      }
  }
}
