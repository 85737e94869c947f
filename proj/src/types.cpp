#include "panelmix/types.hpp"

#include <cmath>

#include "panelmix/errors.hpp"

namespace panelmix {

void PanelData::validate() const {
  if (y.rows() < 1 || y.cols() < 1) throw InputError("panel: need T >= 1 and N >= 1");
  if (!y.allFinite()) throw InputError("panel: non-finite outcome");
  if (dynamic) {
    if (y0.size() != y.cols()) throw InputError("panel: y0 length must equal N in dynamic mode");
    if (!y0.allFinite()) throw InputError("panel: non-finite initial condition");
  }
  if (!z.empty()) {
    if (static_cast<int>(z.size()) != y.cols()) throw InputError("panel: covariate block count != N");
    const auto p = z.front().cols();
    for (const auto& zi : z) {
      if (zi.rows() != y.rows() || zi.cols() != p) throw InputError("panel: ragged covariate block");
      if (!zi.allFinite()) throw InputError("panel: non-finite covariate");
    }
  }
  if (lag_offset < 0) throw InputError("panel: negative lag offset");
}

void MixingMeasure::validate() const {
  if (atoms.empty()) throw InputError("measure: no atoms");
  if (weights.size() != static_cast<Eigen::Index>(atoms.size()))
    throw InputError("measure: weight/atom length mismatch");
  if ((weights.array() < 0.0).any()) throw InputError("measure: negative weight");
  if (std::fabs(weights.sum() - 1.0) > 1e-12) throw InputError("measure: weights must sum to 1");
  for (const auto& a : atoms) {
    if (!(a.sigma2 > 0.0)) throw InputError("measure: nonpositive variance atom");
    if (!std::isfinite(a.alpha) || !std::isfinite(a.sigma2)) throw InputError("measure: non-finite atom");
  }
}

void ModelParams::validate() const {
  measure().validate();
  if (gamma && !(std::fabs(*gamma) < 1.0)) throw InputError("params: |gamma| must be < 1");
  if (!beta.allFinite()) throw InputError("params: non-finite beta");
}

Eigen::VectorXi Allocations::counts(int n_components) const {
  Eigen::VectorXi n = Eigen::VectorXi::Zero(n_components);
  for (Eigen::Index i = 0; i < chi.size(); ++i) {
    const int k = chi[i];
    if (k < 1 || k > n_components) throw InputError("allocations: label outside 1..K");
    ++n[k - 1];
  }
  return n;
}

int Allocations::n_filled(int n_components) const {
  return static_cast<int>((counts(n_components).array() > 0).count());
}

}  // namespace panelmix
