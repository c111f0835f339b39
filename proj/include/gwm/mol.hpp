// Molecular graphs: heavy atoms as nodes, typed bonds as undirected edges.
#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwm {

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

enum class BondType : std::uint8_t { Single = 0, Double = 1, Triple = 2, Aromatic = 3 };
inline constexpr int kBondTypes = 4;

struct Atom {
  std::string symbol;     // element, canonical capitalization ("C", "Cl", "Se")
  bool aromatic = false;  // written lowercase in the source
};

struct Bond {
  int a = 0;
  int b = 0;
  BondType type = BondType::Single;
};

struct MolGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;

  int atom_count() const { return static_cast<int>(atoms.size()); }
  int bond_count() const { return static_cast<int>(bonds.size()); }

  std::array<int, kBondTypes> bond_histogram() const {
    std::array<int, kBondTypes> h{0, 0, 0, 0};
    for (const Bond& b : bonds) ++h[static_cast<int>(b.type)];
    return h;
  }

  std::vector<std::vector<int>> neighbor_lists() const {
    std::vector<std::vector<int>> adj(atoms.size());
    for (const Bond& b : bonds) {
      adj[static_cast<std::size_t>(b.a)].push_back(b.b);
      adj[static_cast<std::size_t>(b.b)].push_back(b.a);
    }
    return adj;
  }
};

}  // namespace gwm
