#include "blochhom/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <numeric>

namespace blochhom {

namespace {
// FFTW's planner is not thread safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

struct FftPlan::Impl {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

FftPlan::FftPlan(std::vector<int> shape) : impl_(std::make_unique<Impl>()), shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 2) throw ConfigError("FFT supports 1D and 2D arrays only");
    size_ = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                            [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
    std::vector<cxd> scratch(size_);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(planner_mutex());
    impl_->forward = fftw_plan_dft(static_cast<int>(shape_.size()), shape_.data(), buf, buf, FFTW_FORWARD, flags);
    impl_->backward = fftw_plan_dft(static_cast<int>(shape_.size()), shape_.data(), buf, buf, FFTW_BACKWARD, flags);
    if (!impl_->forward || !impl_->backward) throw NumericalError("FFTW planning failed");
}

FftPlan::~FftPlan() {
    if (!impl_) return;
    std::lock_guard lock(planner_mutex());
    if (impl_->forward) fftw_destroy_plan(impl_->forward);
    if (impl_->backward) fftw_destroy_plan(impl_->backward);
}

FftPlan::FftPlan() = default;
FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&& other) noexcept {
    if (this != &other) {
        FftPlan tmp(std::move(*this));
        impl_ = std::move(other.impl_);
        shape_ = std::move(other.shape_);
        size_ = other.size_;
    }
    return *this;
}

void FftPlan::forward(std::span<cxd> data) const {
    if (data.size() != size_) throw ConfigError("FFT size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(impl_->forward, p, p);
}

void FftPlan::backward(std::span<cxd> data) const {
    if (data.size() != size_) throw ConfigError("FFT size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(impl_->backward, p, p);
    const double scale = 1.0 / static_cast<double>(size_);
    for (auto& v : data) v *= scale;
}

}  // namespace blochhom
