#include <unistd.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "http_server.hpp"
#include "sheetgram/sheetgram.h"

namespace {

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

std::string stem(const std::string& path) {
  auto slash = path.find_last_of('/');
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = name.find_last_of('.');
  return dot == std::string::npos || dot == 0 ? name : name.substr(0, dot);
}

int report(const std::string& what) {
  std::cerr << "sheetgram: " << what << "\n";
  return 1;
}

struct discover_args {
  std::string facts, csv, sheet, grammar, rule, emit = "mm", out;
};

int run_discover(const discover_args& a) {
  std::string facts, csv, grammar;
  if (!a.facts.empty() && !read_file(a.facts, facts)) return report("cannot read " + a.facts);
  if (!a.csv.empty() && !read_file(a.csv, csv)) return report("cannot read " + a.csv);
  if (!read_file(a.grammar, grammar)) return report("cannot read " + a.grammar);
  std::string sheet = a.sheet.empty() && !a.csv.empty() ? stem(a.csv) : a.sheet;

  sg_discover_options opt{};
  opt.facts = a.facts.empty() ? nullptr : facts.c_str();
  opt.csv = a.csv.empty() ? nullptr : csv.c_str();
  opt.sheet = sheet.empty() ? nullptr : sheet.c_str();
  opt.grammar = grammar.c_str();
  opt.rule = a.rule.empty() ? nullptr : a.rule.c_str();
  opt.emit = a.emit.c_str();
  char* output = nullptr;
  char* warnings = nullptr;
  if (sg_discover(&opt, &output, &warnings) != SG_OK) return report(sg_last_error());

  std::istringstream ws(warnings);
  for (std::string line; std::getline(ws, line);) std::cerr << "warning: " << line << "\n";
  std::string text = output;
  sg_string_free(output);
  sg_string_free(warnings);

  if (a.out.empty()) {
    std::cout << text << std::flush;
    return 0;
  }
  std::ofstream out(a.out, std::ios::binary);
  if (!(out << text)) return report("cannot write " + a.out);
  return 0;
}

int run_repl(const std::string& facts_path, const std::string& grammar_path) {
  sg_session* s = nullptr;
  if (sg_session_create(&s) != SG_OK) return report(sg_last_error());
  bool interactive = isatty(STDIN_FILENO);
  auto exec = [&](const std::string& line) {
    char* out = nullptr;
    int quit = 0;
    if (sg_session_repl(s, line.c_str(), &out, &quit) != SG_OK) {
      std::cerr << "error: " << sg_last_error() << "\n";
      return false;
    }
    std::cout << out << std::flush;
    sg_string_free(out);
    return quit != 0;
  };
  if (!facts_path.empty()) exec("load " + facts_path);
  if (!grammar_path.empty()) exec("grammar " + stem(grammar_path) + " " + grammar_path);
  for (std::string line;;) {
    if (interactive) std::cout << "> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (exec(line)) break;
  }
  sg_session_destroy(s);
  return 0;
}

sheetgram_tools::http_server* active = nullptr;

void on_signal(int) {
  if (active) active->stop();
}

int run_serve(const std::string& host, int port, const std::string& static_dir, long idle) {
  sg_service* svc = nullptr;
  if (sg_service_create(idle, &svc) != SG_OK) return report(sg_last_error());
  sheetgram_tools::http_server server(svc, static_dir);
  int bound = server.bind(host, port);
  if (bound < 0) {
    sg_service_destroy(svc);
    return report("cannot listen on " + host + ":" + std::to_string(port));
  }
  std::cerr << "listening on http://" << host << ":" << bound << "\n";
  active = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  bool ok = server.run();
  active = nullptr;
  sg_service_destroy(svc);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discover the structure of spreadsheets with 2D grammars"};
  app.require_subcommand(1);

  discover_args d;
  auto* discover = app.add_subcommand("discover", "Match a grammar and print the restructured listing");
  auto* facts_opt = discover->add_option("--facts", d.facts, "Fact file")->check(CLI::ExistingFile);
  auto* csv_opt = discover->add_option("--csv", d.csv, "CSV grid")->check(CLI::ExistingFile);
  facts_opt->excludes(csv_opt);
  discover->add_option("--sheet", d.sheet, "Sheet name for CSV input (default: file stem)");
  discover->add_option("--grammar", d.grammar, "Grammar file")->required()->check(CLI::ExistingFile);
  discover->add_option("--rule", d.rule, "Rule to match (default: every top-level rule)");
  discover->add_option("--emit", d.emit, "Output format")->check(CLI::IsMember({"mm", "json"}));
  discover->add_option("--out", d.out, "Write the output here instead of stdout");

  std::string repl_facts, repl_grammar;
  auto* repl = app.add_subcommand("repl", "Interactive session");
  repl->add_option("--facts", repl_facts, "Fact file (or .csv grid) to load")->check(CLI::ExistingFile);
  repl->add_option("--grammar", repl_grammar, "Grammar file to load")->check(CLI::ExistingFile);

  int port = 0;
  std::string host = "127.0.0.1", static_dir;
  long idle = 0;
  auto* serve = app.add_subcommand("serve", "HTTP session service");
  serve->add_option("--port", port, "Port")->required()->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Interface to bind");
  serve->add_option("--static", static_dir, "Directory of static files served at /")->check(CLI::ExistingDirectory);
  serve->add_option("--idle-timeout", idle, "Drop sessions idle this many seconds (0: never)");

  CLI11_PARSE(app, argc, argv);

  if (discover->parsed()) {
    if (d.facts.empty() && d.csv.empty()) return report("discover needs --facts or --csv");
    return run_discover(d);
  }
  if (repl->parsed()) return run_repl(repl_facts, repl_grammar);
  return run_serve(host, port, static_dir, idle);
}
