#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "driftbench/data.hpp"
#include "driftbench/rng.hpp"

namespace driftbench {

enum class BufferPolicy { reservoir, fifo };

const char* to_string(BufferPolicy p);
BufferPolicy buffer_policy_from_string(const std::string& s);

struct BufferEntry {
    Example example;
    int insertion_phase = 0;
};

// Episodic store with a fixed capacity. reservoir keeps every offered item
// with probability capacity/seen (Vitter's Algorithm R); fifo evicts the
// oldest entry when full. Single-owner mutable state: one training run owns
// one buffer.
class ReplayBuffer {
  public:
    ReplayBuffer(std::size_t capacity, BufferPolicy policy, std::uint64_t seed);

    // Offers one example; insertion phase is taken from example.phase_origin.
    // A capacity-0 buffer counts the offer but stores nothing.
    void offer(const Example& example);

    // Offers `quota` examples drawn uniformly without replacement from
    // phase.train (all of them when quota exceeds the phase size), in an
    // order randomized by the buffer's generator.
    void ingest_phase(const PhaseDataset& phase, std::size_t quota);

    // Fraction of entries per insertion phase; sums to 1.
    // Throws ConfigError when the buffer is empty.
    std::map<int, double> distribution() const;

    const std::vector<BufferEntry>& entries() const { return entries_; }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t seen_count() const { return seen_count_; }
    BufferPolicy policy() const { return policy_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    Rng& rng() { return rng_; }
    const Rng& rng() const { return rng_; }

    // Checkpoint support: entries + seen_count + generator state.
    std::string rng_state() const { return rng_.save_state(); }
    static ReplayBuffer restore(std::size_t capacity, BufferPolicy policy,
                                std::uint64_t seen_count, std::vector<BufferEntry> entries,
                                const std::string& rng_state);

  private:
    std::size_t capacity_;
    BufferPolicy policy_;
    std::uint64_t seen_count_ = 0;
    std::vector<BufferEntry> entries_; // fifo keeps these in insertion order
    Rng rng_;
};

struct MixConfig {
    double lambda = 0.5; // fraction of the batch drawn from the buffer
    int batch_size = 128;
};

void validate(const MixConfig& mix);

// Mixed mini-batch realizing the (1-lambda, lambda) source split:
// round(lambda*B) uniform draws from the buffer plus the rest from
// current.train, shuffled. An empty buffer yields B current draws with no
// extra randomness consumed, so phase 1 matches plain sequential training
// draw-for-draw. All randomness comes from `rng` (the training stream), not
// the buffer's insertion generator.
std::vector<Example> sample_mixed_batch(const ReplayBuffer& buffer, const PhaseDataset& current,
                                        const MixConfig& mix, Rng& rng);

} // namespace driftbench
