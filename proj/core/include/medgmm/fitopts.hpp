#pragma once

namespace medgmm {

struct FitOptions {
  long iterations = 15000;
  long burnin = 5000;
  int thin = 10;
  int sw_every = 10;         // Potts: one cluster sweep per this many iterations (0 disables)
  int dmh_inner_sweeps = 1;  // Potts: auxiliary-field sweeps per double-MH proposal
  int refresh_every = 500;   // recompute running residuals this often

  void validate() const;
};

}  // namespace medgmm
