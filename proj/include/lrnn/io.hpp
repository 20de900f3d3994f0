#pragma once

// File formats around the clause language.
//
//   example set:  #example <id>          section header
//                 <weight> :: <ground atom>.
//   query file:   #example <id>
//                 <target> :: <ground atom>.     ('?' = no target)
//   parameters:   param <clause-file>:<ordinal>[:conj|:disj] = <decimal>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lrnn/errors.hpp"
#include "lrnn/grounder.hpp"
#include "lrnn/logic.hpp"
#include "lrnn/trainer.hpp"

namespace lrnn {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

namespace detail {

struct Section {
  std::string id;
  std::vector<std::pair<Statement, Statement::Clause>> rows;
};

inline std::vector<Section> parse_sections(std::string_view text, const std::string& source) {
  std::vector<Section> out;
  std::set<std::string> ids;
  for (Statement& st : parse_statements(text, source)) {
    if (auto* d = std::get_if<Statement::Directive>(&st.item)) {
      if (d->name != "example") throw ParseError(source, st.line, st.column, "unknown directive #" + d->name);
      if (d->argument.empty() || d->argument.find_first_of(" \t") != std::string::npos) {
        throw ParseError(source, st.line, st.column, "#example needs a single id");
      }
      if (!ids.insert(d->argument).second) {
        throw ParseError(source, st.line, st.column, "duplicate example id '" + d->argument + "'");
      }
      out.push_back({d->argument, {}});
      continue;
    }
    auto& c = std::get<Statement::Clause>(st.item);
    if (out.empty()) throw ParseError(source, st.line, st.column, "fact before the first #example header");
    if (!c.body.empty()) throw ParseError(source, st.line, st.column, "only facts are allowed here");
    if (!c.head.is_ground()) throw ParseError(source, st.line, st.column, "atom must be ground");
    Statement::Clause copy = c;
    out.back().rows.emplace_back(std::move(st), std::move(copy));
  }
  return out;
}

}  // namespace detail

inline std::vector<Example> parse_examples(std::string_view text, const std::string& source = "<examples>") {
  std::vector<Example> out;
  for (auto& sec : detail::parse_sections(text, source)) {
    Example ex{sec.id, {}};
    for (auto& [st, c] : sec.rows) {
      if (!c.weight) throw ParseError(source, st.line, st.column, "example facts need a numeric weight");
      ex.facts.push_back({std::move(c.head), *c.weight, std::nullopt});
    }
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::vector<Query> parse_queries(std::string_view text, const std::string& source = "<queries>") {
  std::vector<Query> out;
  for (auto& sec : detail::parse_sections(text, source)) {
    for (auto& [st, c] : sec.rows) {
      const double t = c.weight.value_or(std::numeric_limits<double>::quiet_NaN());
      if (c.weight && !(t >= 0.0 && t <= 1.0)) {
        throw ParseError(source, st.line, st.column, "target must lie in [0,1]");
      }
      out.push_back({sec.id, std::move(c.head), t});
    }
  }
  return out;
}

inline std::string render_params(const ParameterStore& params) {
  std::string out;
  for (const Parameter& p : params) out += "param " + p.id + " = " + format_double(p.value) + "\n";
  return out;
}

/// Overwrites values in `params` by id. Unknown ids are an error; ids not
/// mentioned keep their current value.
inline void load_params(std::string_view text, ParameterStore& params, const std::string& source = "<params>") {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('%');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw, id, eq, val;
    if (!(ls >> kw)) continue;
    if (kw != "param" || !(ls >> id >> eq >> val) || eq != "=") {
      throw ParseError(source, lineno, 1, "expected 'param <id> = <value>'");
    }
    std::string rest;
    if (ls >> rest) throw ParseError(source, lineno, 1, "trailing text after value");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
    if (ec != std::errc() || ptr != val.data() + val.size()) {
      throw ParseError(source, lineno, 1, "malformed value '" + val + "'");
    }
    auto idx = params.find(id);
    if (!idx) throw ParseError(source, lineno, 1, "unknown parameter '" + id + "'");
    params.set_value(*idx, v);
  }
}

}  // namespace lrnn
