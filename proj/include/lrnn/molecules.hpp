#pragma once

// Synthetic molecule sets for the soft-clustering template. Molecules are
// random trees over the atom types c, o, n, h; the label is the planted rule
// "contains an O-H bond". Atom types are unary facts, bonds binary facts in
// both directions.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lrnn/grounder.hpp"
#include "lrnn/logic.hpp"
#include "lrnn/trainer.hpp"

namespace lrnn::molecules {

struct Molecule {
  std::string id;
  std::vector<std::string> types;  // per atom: "c", "o", "n" or "h"
  std::vector<std::pair<std::size_t, std::size_t>> bonds;  // undirected
  bool label = false;
};

inline bool has_oh_bond(const Molecule& m) {
  for (const auto& [a, b] : m.bonds) {
    const auto& ta = m.types[a];
    const auto& tb = m.types[b];
    if ((ta == "o" && tb == "h") || (ta == "h" && tb == "o")) return true;
  }
  return false;
}

/// `count` molecules, half positive (rounded up), 4-8 atoms each.
inline std::vector<Molecule> generate(std::size_t count, std::uint64_t seed) {
  static const char* kTypes[] = {"c", "o", "n", "h"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size_dist(4, 8);
  std::uniform_int_distribution<std::size_t> type_dist(0, 3);
  const std::size_t want_pos = (count + 1) / 2;
  std::size_t pos = 0, neg = 0;
  std::vector<Molecule> out;
  while (out.size() < count) {
    Molecule m;
    const std::size_t n = size_dist(rng);
    for (std::size_t i = 0; i < n; ++i) m.types.emplace_back(kTypes[type_dist(rng)]);
    for (std::size_t i = 1; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> parent(0, i - 1);
      m.bonds.emplace_back(parent(rng), i);
    }
    m.label = has_oh_bond(m);
    if (m.label ? pos >= want_pos : neg >= count - want_pos) continue;
    (m.label ? pos : neg)++;
    m.id = "mol" + std::to_string(out.size() + 1);
    out.push_back(std::move(m));
  }
  return out;
}

inline Example to_example(const Molecule& m) {
  Example ex{m.id, {}};
  auto atom = [](std::size_t i) { return Term::constant("a" + std::to_string(i + 1)); };
  for (std::size_t i = 0; i < m.types.size(); ++i) ex.facts.push_back({Atom{m.types[i], {atom(i)}}, 1.0, std::nullopt});
  for (const auto& [a, b] : m.bonds) {
    ex.facts.push_back({Atom{"bond", {atom(a), atom(b)}}, 1.0, std::nullopt});
    ex.facts.push_back({Atom{"bond", {atom(b), atom(a)}}, 1.0, std::nullopt});
  }
  return ex;
}

inline Query to_query(const Molecule& m, const std::string& target_predicate = "explosive") {
  return {m.id, Atom{target_predicate, {}}, m.label ? 1.0 : 0.0};
}

inline std::string examples_text(const std::vector<Molecule>& ms) {
  std::string out;
  for (const Molecule& m : ms) {
    out += "#example " + m.id + "\n";
    for (const GroundFact& f : to_example(m).facts) out += format_double(f.value) + " :: " + render(f.atom) + ".\n";
  }
  return out;
}

inline std::string queries_text(const std::vector<Molecule>& ms, const std::string& target_predicate = "explosive") {
  std::string out;
  for (const Molecule& m : ms) {
    out += "#example " + m.id + "\n" + (m.label ? "1" : "0") + " :: " + target_predicate + ".\n";
  }
  return out;
}

}  // namespace lrnn::molecules
