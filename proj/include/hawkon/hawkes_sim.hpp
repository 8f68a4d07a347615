#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hawkon/graphon.hpp"
#include "hawkon/intensity_field.hpp"
#include "hawkon/model.hpp"

namespace hawkon {

struct SpikeRecord {
  double T = 0.0;
  std::vector<std::vector<double>> times;  // strictly increasing per neuron
  // filled by the coupled run: the auxiliary process driven by the limit
  // intensity through the same noise, plus the one-sided acceptance counts
  std::optional<std::vector<std::vector<double>>> limit_times;
  std::vector<long long> delta;

  int n() const { return static_cast<int>(times.size()); }
  long long total() const;
  long long total_limit() const;

  // neuron_id,time  (plus a process column for coupled records)
  void write_csv(const std::string& path) const;
  // coupled only: neuron_id,count_micro,count_limit,delta
  void write_summary_csv(const std::string& path) const;
};

struct SimOptions {
  double T = 1.0;
  std::uint64_t seed = 0;
  long long max_events = 10'000'000;
};

// Thinning simulation of the interacting system on the sampled graph. Fully
// reproducible from (graph, model, seed): every neuron consumes its own
// counter-based stream.
SpikeRecord simulate(const InteractionGraph& graph, const HawkesModel& model,
                     const SimOptions& opts);

// Same, plus the auxiliary process with intensity limit(t, x_i) built from the
// same per-neuron noise: candidate heights are drawn once under the common
// dominating bound and tested against both intensities.
SpikeRecord simulate_coupled(const InteractionGraph& graph, const HawkesModel& model,
                             const IntensityField& limit, const SimOptions& opts);

// Step field of the per-neuron drive
//   U_i(t) = u0(t, x_i) + (kappa_i/n) sum_j xi_ij sum_{u in Z_j, u<t} h(t-u)
// on a uniform grid of `knots` times over [0, T], cells of mass 1/n.
IntensityField spatial_profile(const SpikeRecord& record, const InteractionGraph& graph,
                               const HawkesModel& model, double T, int knots);

// Per-neuron sup over t of |Z_i(t) - Zbar_i(t)| for a coupled record.
std::vector<long long> coupling_sup(const SpikeRecord& record);

}  // namespace hawkon
