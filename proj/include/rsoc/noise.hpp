#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "rsoc/philox.hpp"
#include "rsoc/time_grid.hpp"

namespace rsoc {

// Pre-drawn Gaussian increments for one simulation block: per path, per step,
// d components with mean 0 and variance dt. Entirely determined by
// (seed, block_index, path, step, component), so two policies evaluated on
// the same block consume identical increments (common random numbers) and
// disjoint block indices give independent streams.
class NoiseBlock {
public:
    NoiseBlock(TimeGrid grid, std::size_t n_paths, std::size_t d,
               std::uint64_t seed, std::uint64_t block_index)
        : grid_(grid), n_paths_(n_paths), d_(d), seed_(seed), block_index_(block_index) {
        if (n_paths < 1) throw std::invalid_argument("NoiseBlock: need n_paths >= 1");
        if (d < 1) throw std::invalid_argument("NoiseBlock: need d >= 1");
        const double sqrt_dt = std::sqrt(grid_.dt());
        const std::size_t steps = grid_.n_steps();
        increments_.resize(n_paths_ * steps * d_);
        const auto block32 = static_cast<std::uint32_t>(block_index);
        for (std::size_t p = 0; p < n_paths_; ++p)
            for (std::size_t k = 0; k < steps; ++k)
                for (std::size_t j = 0; j < d_; ++j)
                    increments_[(p * steps + k) * d_ + j] =
                        sqrt_dt * counter_normal(seed, block32,
                                                 static_cast<std::uint32_t>(p),
                                                 static_cast<std::uint32_t>(k),
                                                 static_cast<std::uint32_t>(j));
    }

    struct Aggregate {};
    NoiseBlock(Aggregate, const NoiseBlock& fine, std::size_t factor)
        : grid_(fine.grid_.t0(), fine.grid_.horizon(), fine.grid_.n_steps() / factor),
          n_paths_(fine.n_paths_), d_(fine.d_), seed_(fine.seed_), block_index_(fine.block_index_) {
        const std::size_t steps = grid_.n_steps();
        increments_.assign(n_paths_ * steps * d_, 0.0);
        for (std::size_t p = 0; p < n_paths_; ++p)
            for (std::size_t K = 0; K < steps; ++K)
                for (std::size_t s = 0; s < factor; ++s)
                    for (std::size_t j = 0; j < d_; ++j)
                        increments_[(p * steps + K) * d_ + j] += fine.dw(p, K * factor + s, j);
    }

    const TimeGrid& grid() const { return grid_; }
    std::size_t n_paths() const { return n_paths_; }
    std::size_t dim() const { return d_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t block_index() const { return block_index_; }

    // dW component j of step k on path p
    double dw(std::size_t p, std::size_t k, std::size_t j) const {
        return increments_[(p * grid_.n_steps() + k) * d_ + j];
    }

    const std::vector<double>& increments() const { return increments_; }

private:
    TimeGrid grid_;
    std::size_t n_paths_;
    std::size_t d_;
    std::uint64_t seed_;
    std::uint64_t block_index_;
    std::vector<double> increments_;
};

inline std::shared_ptr<const NoiseBlock> generate_noise(const TimeGrid& grid,
                                                        std::size_t n_paths, std::size_t d,
                                                        std::uint64_t seed,
                                                        std::uint64_t block_index) {
    return std::make_shared<const NoiseBlock>(grid, n_paths, d, seed, block_index);
}

// Aggregate a fine block onto a grid coarser by an integer factor: the same
// Brownian paths seen at a lower resolution. Drives strong-error studies.
inline std::shared_ptr<const NoiseBlock> coarsen_noise(const NoiseBlock& fine,
                                                       std::size_t factor) {
    if (factor < 1 || fine.grid().n_steps() % factor != 0)
        throw std::invalid_argument("coarsen_noise: factor must divide the step count");
    auto out = std::make_shared<NoiseBlock>(NoiseBlock::Aggregate{}, fine, factor);
    return out;
}

} // namespace rsoc
