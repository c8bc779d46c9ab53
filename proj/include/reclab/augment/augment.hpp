#pragma once

#include <cstdint>
#include <vector>

#include "reclab/augment/sample.hpp"
#include "reclab/baselines/itemknn.hpp"
#include "reclab/common/rng.hpp"
#include "reclab/data/types.hpp"

namespace reclab::augment {

// How each training sample is randomly perturbed: exactly one of
// drop / mask / substitute / leave-alone, drawn per sample.
struct PerturbationPolicy {
  double p_drop = 0.1;
  double p_mask = 0.1;
  double p_substitute = 0.1;
  double p_none = 0.7;
  int substitute_top_k = 5;
  std::uint64_t seed = 0;

  void validate() const;  // probabilities >= 0 summing to 1 within 1e-12
};

// Turns a length-n trip into the n-1 samples ([c1],c2), ([c1,c2],c3), ...
// Per-step arrays are sliced alongside the prefix; each label carries the
// followed city and its country.
std::vector<PrefixSample> expand_prefixes(const TripSample& trip);

// Applies one randomly drawn perturbation to the prefix (never the label):
// drop removes a uniform position (mask fallback on length-1 prefixes so the
// prefix never empties), mask replaces the city id with the mask token, and
// substitute swaps in one of the city's top-k similarity neighbors, chosen
// uniformly among real vocabulary ids. Cities without usable neighbors fall
// back to mask. Deterministic for a fixed rng state.
PrefixSample perturb(const PrefixSample& sample,
                     const PerturbationPolicy& policy,
                     const baselines::SimilarityIndex& similarity,
                     const data::Vocabulary& vocab, Rng& rng);

// Prefix-expands every trip with at least `min_trip_len` cities and perturbs
// each sample independently. Pass a distinct `epoch` to redraw perturbations
// between passes; output is deterministic for fixed (trips, policy, epoch).
std::vector<PrefixSample> augment_dataset(
    const std::vector<TripSample>& trips, const PerturbationPolicy& policy,
    const baselines::SimilarityIndex& similarity, const data::Vocabulary& vocab,
    int min_trip_len = 4, std::uint64_t epoch = 0);

}  // namespace reclab::augment
