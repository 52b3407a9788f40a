#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace gfab {

/// Per-user, per-packet-index blocklengths in symbols (K rows, Q_th + 1 columns).
/// The transmission time of an entry follows from the bandwidth: T = n / W.
class BlocklengthMatrix {
public:
    BlocklengthMatrix() = default;
    BlocklengthMatrix(int users, int blocks, double w_hz, double fill = 0.0)
        : users_(users), blocks_(blocks), w_hz_(w_hz), n_(static_cast<size_t>(users) * blocks, fill) {
        if (users < 1 || blocks < 1) throw std::invalid_argument("BlocklengthMatrix: empty shape");
        if (!(w_hz > 0.0)) throw std::invalid_argument("BlocklengthMatrix: bandwidth must be positive");
    }

    /// Every entry set to the blocklength of a fixed TTI.
    static BlocklengthMatrix from_tti(int users, int blocks, double w_hz, double tti_s) {
        return BlocklengthMatrix(users, blocks, w_hz, tti_s * w_hz);
    }

    int users() const { return users_; }
    int blocks() const { return blocks_; }
    double w_hz() const { return w_hz_; }

    double& operator()(int k, int q) { return n_[index(k, q)]; }
    double operator()(int k, int q) const { return n_[index(k, q)]; }

    double tti(int k, int q) const { return (*this)(k, q) / w_hz_; }

    std::span<const double> row(int k) const {
        return {n_.data() + static_cast<size_t>(k) * blocks_, static_cast<size_t>(blocks_)};
    }
    std::span<double> row(int k) {
        return {n_.data() + static_cast<size_t>(k) * blocks_, static_cast<size_t>(blocks_)};
    }

    std::vector<double> column(int q) const {
        std::vector<double> c(users_);
        for (int k = 0; k < users_; ++k) c[k] = (*this)(k, q);
        return c;
    }
    void set_column(int q, std::span<const double> values) {
        for (int k = 0; k < users_; ++k) (*this)(k, q) = values[k];
    }

    bool all_nonnegative() const {
        return std::all_of(n_.begin(), n_.end(), [](double v) { return v >= 0.0; });
    }

    /// Nearest positive integer symbol count per entry.
    BlocklengthMatrix rounded() const {
        BlocklengthMatrix out = *this;
        for (double& v : out.n_) v = std::max(1.0, std::round(v));
        return out;
    }

    const std::vector<double>& values() const { return n_; }

    bool operator==(const BlocklengthMatrix&) const = default;

private:
    size_t index(int k, int q) const { return static_cast<size_t>(k) * blocks_ + q; }

    int users_ = 0;
    int blocks_ = 0;
    double w_hz_ = 1.0;
    std::vector<double> n_;
};

}  // namespace gfab
