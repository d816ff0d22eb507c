#include "driftbench/replay.hpp"

#include <algorithm>
#include <cmath>

#include "driftbench/errors.hpp"

namespace driftbench {

const char* to_string(BufferPolicy p) {
    return p == BufferPolicy::reservoir ? "reservoir" : "fifo";
}

BufferPolicy buffer_policy_from_string(const std::string& s) {
    if (s == "reservoir") return BufferPolicy::reservoir;
    if (s == "fifo") return BufferPolicy::fifo;
    throw ConfigError("unknown buffer policy: " + s);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, BufferPolicy policy, std::uint64_t seed)
    : capacity_(capacity), policy_(policy), rng_(seed) {}

void ReplayBuffer::offer(const Example& example) {
    seen_count_ += 1;
    if (capacity_ == 0) return;
    if (entries_.size() < capacity_) {
        entries_.push_back(BufferEntry{example, example.phase_origin});
        return;
    }
    if (policy_ == BufferPolicy::reservoir) {
        // Algorithm R: item n stays with probability C/n, replacing a
        // uniformly random slot.
        const std::size_t j = rng_.below(static_cast<std::size_t>(seen_count_));
        if (j < capacity_) {
            entries_[j] = BufferEntry{example, example.phase_origin};
        }
    } else {
        entries_.erase(entries_.begin()); // oldest first
        entries_.push_back(BufferEntry{example, example.phase_origin});
    }
}

void ReplayBuffer::ingest_phase(const PhaseDataset& phase, std::size_t quota) {
    const std::size_t n = phase.train.size();
    const std::size_t take = std::min(quota, n);
    if (take == 0) return;
    // partial Fisher-Yates: uniform subset without replacement, randomized order
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng_.below(n - i);
        std::swap(idx[i], idx[j]);
    }
    for (std::size_t i = 0; i < take; ++i) offer(phase.train[idx[i]]);
}

std::map<int, double> ReplayBuffer::distribution() const {
    if (entries_.empty()) throw ConfigError("buffer_distribution: empty buffer");
    std::map<int, double> counts;
    for (const BufferEntry& e : entries_) counts[e.insertion_phase] += 1.0;
    const double inv = 1.0 / static_cast<double>(entries_.size());
    for (auto& [phase, c] : counts) c *= inv;
    return counts;
}

ReplayBuffer ReplayBuffer::restore(std::size_t capacity, BufferPolicy policy,
                                   std::uint64_t seen_count, std::vector<BufferEntry> entries,
                                   const std::string& rng_state) {
    if (entries.size() > capacity) {
        throw DataFormatError("buffer restore: entries exceed capacity");
    }
    if (seen_count < entries.size()) {
        throw DataFormatError("buffer restore: seen_count below entry count");
    }
    ReplayBuffer buf(capacity, policy, 0);
    buf.seen_count_ = seen_count;
    buf.entries_ = std::move(entries);
    buf.rng_.restore_state(rng_state);
    return buf;
}

void validate(const MixConfig& mix) {
    if (!(mix.lambda >= 0.0 && mix.lambda <= 1.0)) {
        throw ConfigError("mix: lambda must lie in [0,1]");
    }
    if (mix.batch_size < 1) throw ConfigError("mix: batch_size must be positive");
}

std::vector<Example> sample_mixed_batch(const ReplayBuffer& buffer, const PhaseDataset& current,
                                        const MixConfig& mix, Rng& rng) {
    validate(mix);
    if (current.train.empty()) throw ConfigError("sample_mixed_batch: empty current phase");
    const std::size_t batch = static_cast<std::size_t>(mix.batch_size);
    std::vector<Example> out;
    out.reserve(batch);

    if (buffer.empty()) {
        for (std::size_t i = 0; i < batch; ++i) {
            out.push_back(current.train[rng.below(current.train.size())]);
        }
        return out;
    }

    const std::size_t from_buffer =
        static_cast<std::size_t>(std::llround(mix.lambda * static_cast<double>(batch)));
    const std::size_t from_current = batch - from_buffer;
    for (std::size_t i = 0; i < from_buffer; ++i) {
        out.push_back(buffer.entries()[rng.below(buffer.size())].example);
    }
    for (std::size_t i = 0; i < from_current; ++i) {
        out.push_back(current.train[rng.below(current.train.size())]);
    }
    // Fisher-Yates shuffle so source order carries no signal
    for (std::size_t i = out.size(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(out[i - 1], out[j]);
    }
    return out;
}

} // namespace driftbench
