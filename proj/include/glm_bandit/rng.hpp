#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace glm_bandit {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure function of
/// (counter, key); no state.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

/// What a random stream is used for. Each purpose gets an independent stream.
enum class Purpose : std::uint32_t {
    theta = 1,
    contexts = 2,
    rewards = 3,
    policy = 4,
    validation = 5,
    directions = 6,
};

/// Counter-based random stream addressed by (master seed, replication,
/// purpose, round, substream). Two streams with different addresses never share a
/// Philox counter, so draws are reproducible regardless of the order in
/// which streams are consumed or which thread consumes them.
///
/// The distributions are implemented here rather than taken from <random>
/// because the standard distributions are implementation-defined.
class CounterRng {
  public:
    CounterRng(std::uint64_t master_seed, std::uint32_t replication, Purpose purpose,
               std::uint32_t round, std::uint32_t substream = 0)
        : key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)},
          replication_(replication),
          purpose_(static_cast<std::uint32_t>(purpose) | (substream << 8)),
          round_(round) {}

    std::uint32_t next_u32() {
        if (lane_ == 4) {
            block_ = philox4x32_10({block_index_, round_, replication_, purpose_}, key_);
            ++block_index_;
            lane_ = 0;
        }
        return block_[lane_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1).
    double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Uniform integer in [0, n) by rejection; n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t draw = next_u64();
        while (draw >= limit) draw = next_u64();
        return draw % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

  private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t replication_;
    std::uint32_t purpose_;
    std::uint32_t round_;
    std::uint32_t block_index_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int lane_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace glm_bandit
