#pragma once

#include <string>
#include <vector>

#include "panelmix/sampler.hpp"
#include "panelmix/types.hpp"

namespace panelmix::io {

struct LoadReport {
  int n_units = 0;
  int n_periods = 0;
  int n_covariates = 0;
  int n_dropped = 0;
  std::vector<std::string> dropped_units;
};

// Long-format panel: header unit_id,time,y,z1..zp, one row per (unit, time).
// Units without full coverage of the time grid are dropped. In dynamic mode
// the earliest usable period is consumed as y0; covariates are shifted by
// lag_offset so that the stored row t carries z_{i,t-h}.
PanelData load_panel(const std::string& path, bool dynamic, int lag_offset,
                     LoadReport* report = nullptr);

// Writes a panel in pre-aligned form (reload with lag_offset = 0): period 0
// carries y0 in dynamic mode, periods 1..T carry outcomes with the covariate
// rows that enter them.
void write_panel_csv(const std::string& path, const PanelData& data);

// Canonical on-disk draw format: draw_id,block,index,value.
void write_draws_csv(const std::string& path, const DrawStore& store);
DrawStore read_draws_csv(const std::string& path);

void write_truth_json(const std::string& path, const ModelParams& params, const Allocations& alloc);

}  // namespace panelmix::io
