#pragma once

// Two-sided discretised Brownian motion driven by a counter-based generator.
//
// The increment at absolute grid index k is a pure function of (seed, k, component),
// so the noise shift theta_{m dt} is an index relabelling and the path can be
// extended in either direction without touching increments already drawn.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "qpsde/errors.hpp"
#include "qpsde/stats.hpp"

namespace qpsde {

/// Philox4x32-10 block function (Salmon et al., SC'11).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            ctr = single_round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static Counter single_round(const Counter& c, const Key& k) noexcept {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Stream tags separate independent uses of the same (seed, index) counter space.
enum class Stream : std::uint32_t { brownian = 0, jitter = 1 };

/// Uniform in the open interval (0, 1) from 53 hashed bits.
inline double hashed_uniform(std::uint64_t seed, std::int64_t index, std::uint32_t component,
                             Stream stream = Stream::brownian) noexcept {
    const auto k = static_cast<std::uint64_t>(index);
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32), component,
                                  static_cast<std::uint32_t>(stream)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const auto out = Philox4x32::generate(ctr, key);
    const std::uint64_t bits = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal variate for (seed, index, component) via the inverse CDF.
inline double hashed_normal(std::uint64_t seed, std::int64_t index, std::uint32_t component) noexcept {
    return stats::normal_quantile(hashed_uniform(seed, index, component));
}

/// Uniform grid of step dt; index k sits at time k*dt.
struct TimeGrid {
    double dt = 1e-3;
    std::int64_t k_min = 0;
    std::int64_t k_max = 0;

    explicit TimeGrid(double step, std::int64_t lo = 0, std::int64_t hi = 0) : dt(step), k_min(lo), k_max(hi) {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("TimeGrid: dt must be positive and finite");
        if (k_min > 0 || k_max < 0) throw DomainError("TimeGrid: index window must contain 0");
    }

    double time(std::int64_t k) const noexcept { return static_cast<double>(k) * dt; }

    /// Smallest grid index whose time is at or after t.
    std::int64_t index_at_or_after(double t) const { return static_cast<std::int64_t>(std::ceil(t / dt - 1e-9)); }

    /// Grid index nearest to t.
    std::int64_t nearest_index(double t) const { return std::llround(t / dt); }

    /// Window grown to include k. Never affects the increments of any NoisePath.
    TimeGrid extended_to(std::int64_t k) const {
        TimeGrid g = *this;
        g.k_min = std::min(g.k_min, k);
        g.k_max = std::max(g.k_max, k);
        return g;
    }
};

/// A realisation omega of the two-sided Brownian motion on a TimeGrid.
/// `offset` accumulates theta-shifts: increment k of this path is increment k + offset of the base path.
class NoisePath {
public:
    NoisePath(std::uint64_t seed, std::size_t dim, TimeGrid grid, std::int64_t offset = 0)
        : seed_(seed), dim_(dim), grid_(grid), offset_(offset), sqrt_dt_(std::sqrt(grid.dt)) {
        if (dim == 0) throw DomainError("NoisePath: dimension must be positive");
    }

    NoisePath(std::uint64_t seed, std::size_t dim, double dt) : NoisePath(seed, dim, TimeGrid(dt)) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t dim() const noexcept { return dim_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    double dt() const noexcept { return grid_.dt; }
    std::int64_t offset() const noexcept { return offset_; }

    /// W((k+1)dt) - W(k dt), written into out (size dim).
    void increment(std::int64_t k, std::span<double> out) const noexcept {
        const std::int64_t absolute = k + offset_;
        for (std::size_t j = 0; j < dim_; ++j)
            out[j] = sqrt_dt_ * hashed_normal(seed_, absolute, static_cast<std::uint32_t>(j));
    }

    std::vector<double> increment(std::int64_t k) const {
        std::vector<double> out(dim_);
        increment(k, out);
        return out;
    }

    /// W(k dt) with W(0) = 0: the partial sum of increments, negated for k < 0.
    std::vector<double> brownian_value(std::int64_t k) const {
        std::vector<double> w(dim_, 0.0), dw(dim_);
        if (k >= 0) {
            for (std::int64_t i = 0; i < k; ++i) {
                increment(i, dw);
                for (std::size_t j = 0; j < dim_; ++j) w[j] += dw[j];
            }
        } else {
            for (std::int64_t i = k; i < 0; ++i) {
                increment(i, dw);
                for (std::size_t j = 0; j < dim_; ++j) w[j] += dw[j];
            }
            for (double& v : w) v = -v;
        }
        return w;
    }

    /// theta_{m dt} omega: increment k of the result is increment k + m of this path.
    NoisePath shifted(std::int64_t m) const { return NoisePath(seed_, dim_, grid_, offset_ + m); }

private:
    std::uint64_t seed_;
    std::size_t dim_;
    TimeGrid grid_;
    std::int64_t offset_;
    double sqrt_dt_;
};

inline NoisePath shift(const NoisePath& path, std::int64_t m) { return path.shifted(m); }

inline std::vector<double> sample_increment(const NoisePath& path, std::int64_t k) { return path.increment(k); }

inline std::vector<double> brownian_value(const NoisePath& path, std::int64_t k) { return path.brownian_value(k); }

}  // namespace qpsde
