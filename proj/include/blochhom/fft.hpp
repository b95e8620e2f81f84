#pragma once

#include <memory>
#include <span>
#include <vector>

#include "blochhom/common.hpp"

namespace blochhom {

/// In-place complex FFT on a 1D or 2D periodic array (row-major, last index fastest).
///
/// Forward uses the kernel exp(-2 i pi k j / n); backward applies the inverse
/// including the 1/n normalisation. Plans are built with FFTW_ESTIMATE so the
/// arithmetic does not depend on timing measurements.
class FftPlan {
public:
    FftPlan();
    explicit FftPlan(std::vector<int> shape);
    ~FftPlan();

    FftPlan(FftPlan&&) noexcept;
    FftPlan& operator=(FftPlan&&) noexcept;
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    void forward(std::span<cxd> data) const;
    void backward(std::span<cxd> data) const;

    std::size_t size() const { return size_; }
    const std::vector<int>& shape() const { return shape_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::vector<int> shape_;
    std::size_t size_ = 0;
};

/// Signed integer frequency of FFT bin i for a length-n transform.
inline int fft_frequency(int i, int n) { return i <= (n - 1) / 2 ? i : i - n; }

}  // namespace blochhom
