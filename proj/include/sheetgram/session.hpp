#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sheetgram/arrows.hpp"
#include "sheetgram/cell_model.hpp"
#include "sheetgram/factbase.hpp"
#include "sheetgram/grammar.hpp"

namespace sheetgram {

using json = nlohmann::json;

/// An interactive restructuring session: one workbook, its fact base, the
/// current model, loaded grammars, the last match suggestions and an undo
/// stack with one frame per applied transform.
///
/// Every mutating call either succeeds completely or throws and leaves the
/// session as it was.
class session {
 public:
  session();

  void load(workbook wb);
  void load_facts(std::string_view text);
  void load_csv(std::string_view text, const std::string& sheet);

  /// Parses and stores a grammar; returns its validation diagnostics.
  std::vector<diagnostic> load_grammar(const std::string& name, std::string_view text);
  void define_predicate(const std::string& name, std::string_view text);

  /// Matches `rule` (every root rule when empty) and keeps the selected cover
  /// as the pending suggestions.
  const std::vector<match>& match_rule(const std::string& grammar_name, const std::string& rule);
  /// Applies the transforms derived from the chosen suggestions. Returns the
  /// notes produced by naming steps that found no label.
  std::vector<std::string> accept(const std::vector<std::size_t>& indices);
  /// Returns a note when the operation was a no-op.
  std::optional<std::string> apply(const operation& op);
  void undo();

  /// "mm", "facts" or "json".
  std::string export_as(const std::string& format) const;

  const model& current() const { return model_; }
  const fact_base& facts() const { return *fb_; }
  const predicate_registry& predicates() const { return reg_; }
  const std::vector<match>& pending() const { return pending_; }
  std::vector<std::string> history() const;
  std::size_t depth() const { return history_.size(); }
  const grammar* find_grammar(const std::string& name) const;

  /// Runs one command object, e.g. {"type":"rename","from":"x","to":"y"}.
  /// The reply carries the fresh listing under "mm".
  json execute(const json& command);

 private:
  struct frame {
    std::string description;
    model prior;
  };

  workbook wb_;
  std::unique_ptr<fact_base> fb_;
  predicate_registry reg_;
  model model_;
  std::map<std::string, grammar> grammars_;
  std::vector<match> pending_;
  std::vector<frame> history_;
};

// ---------------------------------------------------------------------------
// JSON projections

json address_json(const address& a);
json model_json(const model& m);
json grid_json(const fact_base& fb);
json match_json(const match& m);
json diagnostics_json(const std::vector<diagnostic>& d);

/// Reads "C2", "Sheet2!C2" or a range "C2:C4" against `default_sheet`.
/// Ranges expand column-major, so "A2:B3" gives A2, A3, B2, B3.
std::vector<address> parse_cells(std::string_view text, const std::string& default_sheet);

// ---------------------------------------------------------------------------
// REPL

/// Executes one REPL line. Errors are reported in the returned text; `quit`
/// is set by the quit command.
std::string repl_execute(session& s, const std::string& line, bool& quit);

// ---------------------------------------------------------------------------
// Non-interactive pipeline

struct discover_input {
  std::string facts;
  std::string csv;
  std::string sheet;
  std::string grammar;
  /// Empty: every rule that no other rule refers to.
  std::string rule;
  /// "mm" or "json".
  std::string emit = "mm";
};

struct discover_output {
  std::string text;
  std::vector<std::string> warnings;
};

/// load -> match -> select cover -> transforms -> listing.
discover_output discover(const discover_input& in);

}  // namespace sheetgram
