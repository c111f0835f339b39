// Labeled molecule datasets loaded from CSV (a "smiles" column plus one
// column per task; empty cells are missing labels).
#pragma once

#include "gwm/csv.hpp"
#include "gwm/featurize.hpp"
#include "gwm/mol.hpp"
#include "gwm/smiles.hpp"
#include "gwm/wl_split.hpp"

#include <string>
#include <vector>

namespace gwm {

struct Dataset {
  std::vector<LabeledMol> items;
  std::vector<std::string> task_names;
  AtomVocab vocab;

  int task_count() const { return static_cast<int>(task_names.size()); }

  SplitIndices split(double train_frac, double val_frac, double test_frac,
                     std::uint64_t seed) const {
    return skeleton_split_by(
        items.size(), [&](std::size_t i) -> const MolGraph& { return items[i].mol; },
        train_frac, val_frac, test_frac, seed);
  }

  std::vector<LabeledMol> take(const std::vector<int>& idx) const {
    std::vector<LabeledMol> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(items[static_cast<std::size_t>(i)]);
    return out;
  }
};

inline Dataset dataset_from_table(const CsvTable& table) {
  const int smiles_col = table.column("smiles");
  if (smiles_col < 0) throw DataError("dataset: no 'smiles' column in header");

  Dataset ds;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (static_cast<int>(c) != smiles_col) ds.task_names.push_back(table.header[c]);

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    LabeledMol item;
    item.smiles = row[static_cast<std::size_t>(smiles_col)];
    try {
      item.mol = parse_smiles(item.smiles);
    } catch (const ParseError& e) {
      throw DataError("dataset row " + std::to_string(r + 2) + " ('" + item.smiles +
                      "'): " + e.what());
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (static_cast<int>(c) == smiles_col) continue;
      const std::string& cell = row[c];
      if (cell.empty()) {
        item.labels.push_back(0.0);
        item.label_present.push_back(false);
      } else {
        try {
          std::size_t pos = 0;
          const double v = std::stod(cell, &pos);
          if (pos != cell.size()) throw std::invalid_argument(cell);
          item.labels.push_back(v);
          item.label_present.push_back(true);
        } catch (const std::exception&) {
          throw DataError("dataset row " + std::to_string(r + 2) + ": bad label '" + cell + "'");
        }
      }
    }
    ds.items.push_back(std::move(item));
  }
  if (ds.items.empty()) throw DataError("dataset: no rows");

  std::vector<MolGraph> mols;
  mols.reserve(ds.items.size());
  for (const auto& it : ds.items) mols.push_back(it.mol);
  ds.vocab = build_vocab(mols.begin(), mols.end());
  return ds;
}

inline Dataset load_dataset(const std::string& path) { return dataset_from_table(read_csv(path)); }

}  // namespace gwm
