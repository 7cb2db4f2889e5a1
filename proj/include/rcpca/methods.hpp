#pragma once

#include "rcpca/dataset.hpp"
#include "rcpca/metrics.hpp"
#include "rcpca/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rcpca {

// Published stationary equation attached to a preset, if any.
enum class StationaryForm {
  None,
  Basic,          // one of the ten mode/exponent combinations
  MixedCarroll,   // correlation blocks first, covariance blocks after
  FreeExponent,   // redundancy presets: resolved from the run's m
};

struct MethodPreset {
  std::string name;
  double m = 2.0;
  bool m_free = false;             // m may be overridden at run time
  double tau_blocks = 1.0;
  double tau_superblock = 1.0;
  std::size_t correlation_blocks = 0;  // mixed preset: blocks 1..K use tau = 0
  std::string citation;
  std::string description;
  std::optional<int> basic_row;
  StationaryForm form = StationaryForm::None;

  ModeSelector modes(std::size_t blocks) const;
};

// Catalog lookup. "mixed_carroll:K" selects K correlation blocks (default 1);
// "basic_m<m>_<XY>" gives a basic combination: exponent m, Mode X blocks, Mode Y superblock.
MethodPreset preset(const std::string& name);
const std::vector<MethodPreset>& catalog();
std::vector<std::string> preset_names();

struct StationaryReport {
  std::string equation;   // human-readable form that was checked
  VectorXd image;         // right side evaluated at y_{B+1}
  double residual = 0.0;  // || y/|y| - image/|image| ||
};

StationaryReport verify_stationary(const MethodPreset& preset, const Solution& solution,
                                   const BlockSet& set);
// Same check on an arbitrary superblock component y (basic_m2_AB and free presets
// without a listed form fall back to the generic residual, which needs w).
StationaryReport verify_stationary(const MethodPreset& preset, const VectorXd& y_super,
                                   const BlockSet& set, double m);

struct GuideEntry {
  Mode blocks;
  Mode superblock;
  std::string generalization;
  std::string objective;
};

GuideEntry guide(Mode blocks, Mode superblock);

// Multiblock methods whose stationary equations are known but which do not
// maximize any known criterion; listed for reference only.
struct DocumentedMethod {
  int number;
  std::string name;
  std::string stationary_equation;
};
const std::vector<DocumentedMethod>& documented_only_methods();

}  // namespace rcpca
