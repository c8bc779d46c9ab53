#pragma once

#include <cstdint>
#include <vector>

#include "reclab/augment/sample.hpp"
#include "reclab/model/narm.hpp"

namespace reclab::train {

// Builds one batch from a contiguous run of samples. Prefixes longer than
// `window` keep their most recent steps; shorter ones are right-padded.
model::Batch to_batch(const std::vector<augment::PrefixSample>& samples,
                      std::size_t begin, std::size_t end, int window);

// Deterministically shuffled (per seed and epoch) batches of `batch_size`,
// final partial batch included. Pass shuffle=false to keep sample order.
std::vector<model::Batch> make_batches(
    const std::vector<augment::PrefixSample>& samples, int window,
    int batch_size, std::uint64_t seed, std::uint64_t epoch,
    bool shuffle = true);

// The one sample per trip the unaugmented variant trains on (and every
// variant validates on): full history minus the final city, which is the
// label.
augment::PrefixSample final_transition(const augment::TripSample& trip);
std::vector<augment::PrefixSample> final_transitions(
    const std::vector<augment::TripSample>& trips);

}  // namespace reclab::train
