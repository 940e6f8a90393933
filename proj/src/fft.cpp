#include "qmeas/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace qmeas::fft {
namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanKey {
    std::size_t n, howmany;
    std::ptrdiff_t stride, dist;
    int sign;
    bool operator<(const PlanKey& o) const {
        return std::tie(n, howmany, stride, dist, sign) <
               std::tie(o.n, o.howmany, o.stride, o.dist, o.sign);
    }
};

// Thread-local plan cache. Plans are created against a scratch buffer with
// FFTW_ESTIMATE | FFTW_UNALIGNED and then executed on caller arrays via
// fftw_execute_dft, which is valid for unaligned plans of matching geometry.
class PlanCache {
  public:
    fftw_plan get(const PlanKey& k) {
        auto it = plans_.find(k);
        if (it != plans_.end()) return it->second;
        std::lock_guard<std::mutex> lock(planner_mutex());
        const std::size_t need = k.howmany * static_cast<std::size_t>(k.dist) +
                                 k.n * static_cast<std::size_t>(k.stride);
        if (scratch_.size() < need) scratch_.resize(need);
        int n = static_cast<int>(k.n);
        fftw_complex* buf = reinterpret_cast<fftw_complex*>(scratch_.data());
        fftw_plan p = fftw_plan_many_dft(
            1, &n, static_cast<int>(k.howmany), buf, nullptr,
            static_cast<int>(k.stride), static_cast<int>(k.dist), buf, nullptr,
            static_cast<int>(k.stride), static_cast<int>(k.dist), k.sign,
            FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(k, p);
        return p;
    }
    ~PlanCache() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }

  private:
    std::map<PlanKey, fftw_plan> plans_;
    std::vector<std::complex<double>> scratch_;
};

PlanCache& cache() {
    thread_local PlanCache c;
    return c;
}

void execute(const PlanKey& k, const std::complex<double>* in, std::complex<double>* out) {
    fftw_plan p = cache().get(k);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

}  // namespace

void forward(std::size_t n, const std::complex<double>* in, std::complex<double>* out) {
    execute({n, 1, 1, 0, FFTW_FORWARD}, in, out);
}

void inverse(std::size_t n, const std::complex<double>* in, std::complex<double>* out) {
    execute({n, 1, 1, 0, FFTW_BACKWARD}, in, out);
    const double s = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] *= s;
}

void forward_many(std::size_t n, std::size_t howmany, std::ptrdiff_t stride,
                  std::ptrdiff_t dist, const std::complex<double>* in,
                  std::complex<double>* out) {
    execute({n, howmany, stride, dist, FFTW_FORWARD}, in, out);
}

void inverse_many(std::size_t n, std::size_t howmany, std::ptrdiff_t stride,
                  std::ptrdiff_t dist, const std::complex<double>* in,
                  std::complex<double>* out) {
    execute({n, howmany, stride, dist, FFTW_BACKWARD}, in, out);
    const double s = 1.0 / static_cast<double>(n);
    for (std::size_t t = 0; t < howmany; ++t)
        for (std::size_t i = 0; i < n; ++i) out[t * dist + i * stride] *= s;
}

}  // namespace qmeas::fft
