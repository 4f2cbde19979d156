#include "dyadgc/timeseries.hpp"

#include <vector>

namespace dyadgc {

BinaryMask median_filter(const BinaryMask& m, int kernel) {
    if (kernel < 1 || kernel % 2 == 0)
        throw ConfigError("median_filter: kernel must be odd and >= 1, got " +
                          std::to_string(kernel));
    const Eigen::Index n = m.size();
    const Eigen::Index half = kernel / 2;
    std::vector<Eigen::Index> prefix(static_cast<std::size_t>(n) + 1, 0);
    for (Eigen::Index i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + (m[i] ? 1 : 0);

    BinaryMask::Bits out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
        const Eigen::Index ones = prefix[hi + 1] - prefix[lo];
        out(i) = 2 * ones > hi - lo + 1;
    }
    return BinaryMask(std::move(out), m.start_frame());
}

}  // namespace dyadgc
