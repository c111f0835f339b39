// SMILES reader producing heavy-atom molecular graphs.
//
// Supported: organic-subset atoms, bracket atoms (isotope, chirality, H
// count, charge and atom class are parsed and discarded), explicit bonds
// - = # : / \, branches, ring closures (digits and %nn), dot-separated
// fragments, aromatic lowercase notation. Hydrogens are stripped from the
// result. All failures throw ParseError carrying the byte offset.
#pragma once

#include "gwm/mol.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwm {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail_smiles {

inline const std::set<std::string>& organic_symbols() {
  static const std::set<std::string> s{"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"};
  return s;
}

inline const std::set<std::string>& aromatic_symbols() {
  static const std::set<std::string> s{"b", "c", "n", "o", "p", "s", "se", "as", "te"};
  return s;
}

inline std::string canonical_symbol(std::string sym) {
  sym[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sym[0])));
  return sym;
}

struct PendingBond {
  // nullopt = bond character not written; type decided by aromaticity later.
  std::optional<BondType> type;
  std::size_t offset = 0;
};

struct Builder {
  std::vector<Atom> atoms;
  struct Edge {
    int a, b;
    std::optional<BondType> type;  // nullopt = default bond, resolve later
    std::size_t offset;
  };
  std::vector<Edge> edges;

  void add_edge(int a, int b, std::optional<BondType> type, std::size_t offset) {
    if (a == b) throw ParseError("smiles: ring closure bonds atom to itself", offset);
    for (const Edge& e : edges)
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a))
        throw ParseError("smiles: duplicate bond", offset);
    edges.push_back({a, b, type, offset});
  }
};

// Bonds written without a bond character between two aromatic atoms are
// aromatic only when they sit on a cycle of the aromatic subgraph; a lone
// connection between two rings (a bridge) is a single bond. Explicit ':'
// stays aromatic regardless.
inline std::vector<bool> bridge_flags(const Builder& g, const std::vector<int>& edge_ids) {
  const int n = static_cast<int>(g.atoms.size());
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < edge_ids.size(); ++k) {
    const auto& e = g.edges[static_cast<std::size_t>(edge_ids[k])];
    adj[static_cast<std::size_t>(e.a)].push_back({e.b, static_cast<int>(k)});
    adj[static_cast<std::size_t>(e.b)].push_back({e.a, static_cast<int>(k)});
  }
  std::vector<bool> bridge(edge_ids.size(), false);
  std::vector<int> disc(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  int timer = 0;
  // Iterative DFS lowlink bridge finding.
  struct Frame {
    int v, parent_edge;
    std::size_t next;
  };
  for (int root = 0; root < n; ++root) {
    if (disc[static_cast<std::size_t>(root)] != -1) continue;
    std::vector<Frame> stack{{root, -1, 0}};
    disc[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      auto& nb = adj[static_cast<std::size_t>(f.v)];
      if (f.next < nb.size()) {
        auto [u, eid] = nb[f.next++];
        if (eid == f.parent_edge) continue;
        if (disc[static_cast<std::size_t>(u)] == -1) {
          disc[static_cast<std::size_t>(u)] = low[static_cast<std::size_t>(u)] = timer++;
          stack.push_back({u, eid, 0});
        } else {
          low[static_cast<std::size_t>(f.v)] =
              std::min(low[static_cast<std::size_t>(f.v)], disc[static_cast<std::size_t>(u)]);
        }
      } else {
        const int v = f.v, pe = f.parent_edge;
        stack.pop_back();
        if (!stack.empty()) {
          const int p = stack.back().v;
          low[static_cast<std::size_t>(p)] =
              std::min(low[static_cast<std::size_t>(p)], low[static_cast<std::size_t>(v)]);
          if (low[static_cast<std::size_t>(v)] > disc[static_cast<std::size_t>(p)])
            bridge[static_cast<std::size_t>(pe)] = true;
        }
      }
    }
  }
  return bridge;
}

}  // namespace detail_smiles

inline MolGraph parse_smiles(const std::string& s) {
  using namespace detail_smiles;
  if (s.empty()) throw ParseError("smiles: empty string", 0);

  Builder g;
  std::vector<std::pair<int, std::size_t>> branch_stack;  // (atom, '(' offset)
  std::map<int, std::pair<int, PendingBond>> open_rings;  // ring number -> (atom, bond)
  int prev = -1;
  PendingBond pending;  // bond to apply before the next atom
  bool have_pending_char = false;

  std::size_t i = 0;
  const std::size_t n = s.size();

  auto attach = [&](int atom_idx, std::size_t offset) {
    if (prev >= 0) {
      g.add_edge(prev, atom_idx, have_pending_char ? pending.type : std::nullopt, offset);
    } else if (have_pending_char) {
      throw ParseError("smiles: bond with no preceding atom", pending.offset);
    }
    prev = atom_idx;
    pending = {};
    have_pending_char = false;
  };

  auto read_ring_number = [&]() -> int {
    if (s[i] == '%') {
      if (i + 2 >= n || !std::isdigit(static_cast<unsigned char>(s[i + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s[i + 2])))
        throw ParseError("smiles: '%' needs two digits", i);
      const int num = (s[i + 1] - '0') * 10 + (s[i + 2] - '0');
      i += 3;
      return num;
    }
    const int num = s[i] - '0';
    ++i;
    return num;
  };

  auto handle_ring = [&](std::size_t offset) {
    const int num = read_ring_number();
    if (prev < 0) throw ParseError("smiles: ring closure before any atom", offset);
    auto it = open_rings.find(num);
    if (it == open_rings.end()) {
      open_rings[num] = {prev, have_pending_char ? pending : PendingBond{std::nullopt, offset}};
      pending = {};
      have_pending_char = false;
      return;
    }
    auto [other, first_bond] = it->second;
    open_rings.erase(it);
    std::optional<BondType> type;
    const std::optional<BondType> second = have_pending_char ? pending.type : std::nullopt;
    if (first_bond.type && second && *first_bond.type != *second)
      throw ParseError("smiles: ring closure bond characters disagree", offset);
    type = first_bond.type ? first_bond.type : second;
    g.add_edge(other, prev, type, offset);
    pending = {};
    have_pending_char = false;
  };

  while (i < n) {
    const char c = s[i];
    const std::size_t offset = i;
    if (c == '(') {
      if (prev < 0) throw ParseError("smiles: branch before any atom", offset);
      branch_stack.push_back({prev, offset});
      ++i;
    } else if (c == ')') {
      if (branch_stack.empty()) throw ParseError("smiles: unbalanced ')'", offset);
      if (have_pending_char) throw ParseError("smiles: dangling bond before ')'", pending.offset);
      prev = branch_stack.back().first;
      branch_stack.pop_back();
      ++i;
    } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\') {
      if (have_pending_char) throw ParseError("smiles: two bond characters in a row", offset);
      BondType t = BondType::Single;
      if (c == '=') t = BondType::Double;
      else if (c == '#') t = BondType::Triple;
      else if (c == ':') t = BondType::Aromatic;
      pending = {t, offset};
      have_pending_char = true;
      ++i;
    } else if (c == '.') {
      if (have_pending_char) throw ParseError("smiles: bond before '.'", pending.offset);
      prev = -1;
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
      handle_ring(offset);
    } else if (c == '[') {
      ++i;
      // isotope
      while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      if (i >= n) throw ParseError("smiles: unterminated bracket atom", offset);
      // element symbol
      std::string sym;
      bool aromatic = false;
      if (s[i] == '*') {
        sym = "*";
        ++i;
      } else if (std::isupper(static_cast<unsigned char>(s[i]))) {
        sym += s[i++];
        if (i < n && std::islower(static_cast<unsigned char>(s[i])) && s[i] != 'b' &&
            std::string("cdefghiklmnoprstuyav").find(s[i]) != std::string::npos) {
          // two-letter element inside brackets (Cl, Br, Na, Si, ...)
          sym += s[i++];
        }
      } else if (std::islower(static_cast<unsigned char>(s[i]))) {
        sym += s[i++];
        if (i < n && std::islower(static_cast<unsigned char>(s[i])) &&
            aromatic_symbols().count(sym + s[i]))
          sym += s[i++];
        if (!aromatic_symbols().count(sym))
          throw ParseError("smiles: unknown aromatic symbol '" + sym + "'", offset);
        aromatic = true;
        sym = canonical_symbol(sym);
      } else {
        throw ParseError("smiles: bad bracket atom", i);
      }
      // chirality
      while (i < n && s[i] == '@') ++i;
      // explicit hydrogen count
      if (i < n && s[i] == 'H') {
        ++i;
        while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      }
      // charge
      while (i < n && (s[i] == '+' || s[i] == '-')) {
        ++i;
        while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      }
      // atom class
      if (i < n && s[i] == ':') {
        ++i;
        if (i >= n || !std::isdigit(static_cast<unsigned char>(s[i])))
          throw ParseError("smiles: atom class needs digits", i);
        while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      }
      if (i >= n || s[i] != ']') throw ParseError("smiles: expected ']'", i < n ? i : n - 1);
      ++i;
      g.atoms.push_back({sym, aromatic});
      attach(static_cast<int>(g.atoms.size()) - 1, offset);
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      std::string sym(1, c);
      if (i + 1 < n && std::islower(static_cast<unsigned char>(s[i + 1])) &&
          organic_symbols().count(sym + s[i + 1]))
        sym += s[i + 1];
      if (!organic_symbols().count(sym))
        throw ParseError("smiles: unknown atom '" + sym + "'", offset);
      i += sym.size();
      g.atoms.push_back({sym, false});
      attach(static_cast<int>(g.atoms.size()) - 1, offset);
    } else if (std::islower(static_cast<unsigned char>(c))) {
      std::string sym(1, c);  // two-letter aromatics (se, as) must be bracketed
      if (!aromatic_symbols().count(sym))
        throw ParseError("smiles: unknown aromatic atom '" + sym + "'", offset);
      ++i;
      g.atoms.push_back({canonical_symbol(sym), true});
      attach(static_cast<int>(g.atoms.size()) - 1, offset);
    } else if (c == '*') {
      ++i;
      g.atoms.push_back({"*", false});
      attach(static_cast<int>(g.atoms.size()) - 1, offset);
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      break;  // trailing whitespace / title section ends the molecule
    } else {
      throw ParseError(std::string("smiles: unknown token '") + c + "'", offset);
    }
  }

  if (!branch_stack.empty()) throw ParseError("smiles: unbalanced '('", branch_stack.back().second);
  if (have_pending_char) throw ParseError("smiles: dangling bond at end", pending.offset);
  if (!open_rings.empty())
    throw ParseError("smiles: unmatched ring closure " + std::to_string(open_rings.begin()->first),
                     open_rings.begin()->second.second.offset);
  if (g.atoms.empty()) throw ParseError("smiles: no atoms", 0);

  // Resolve default bonds: aromatic only when both ends are aromatic and the
  // bond is not a bridge of the aromatic-candidate subgraph.
  std::vector<int> candidates;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& ed = g.edges[e];
    const bool arom_pair = g.atoms[static_cast<std::size_t>(ed.a)].aromatic &&
                           g.atoms[static_cast<std::size_t>(ed.b)].aromatic;
    if (arom_pair && (!ed.type || *ed.type == BondType::Aromatic))
      candidates.push_back(static_cast<int>(e));
  }
  auto bridges = detail_smiles::bridge_flags(g, candidates);

  std::vector<BondType> resolved(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    resolved[e] = g.edges[e].type.value_or(BondType::Single);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& ed = g.edges[static_cast<std::size_t>(candidates[k])];
    if (ed.type && *ed.type == BondType::Aromatic) continue;  // written ':' stays aromatic
    resolved[static_cast<std::size_t>(candidates[k])] =
        bridges[k] ? BondType::Single : BondType::Aromatic;
  }

  // Strip hydrogens, remap indices.
  MolGraph mol;
  std::vector<int> remap(g.atoms.size(), -1);
  for (std::size_t a = 0; a < g.atoms.size(); ++a) {
    if (g.atoms[a].symbol == "H") continue;
    remap[a] = mol.atom_count();
    mol.atoms.push_back(g.atoms[a]);
  }
  if (mol.atoms.empty()) throw ParseError("smiles: no heavy atoms", 0);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& ed = g.edges[e];
    const int a = remap[static_cast<std::size_t>(ed.a)];
    const int b = remap[static_cast<std::size_t>(ed.b)];
    if (a < 0 || b < 0) continue;  // bond to stripped hydrogen
    mol.bonds.push_back({a, b, resolved[e]});
  }
  return mol;
}

}  // namespace gwm
