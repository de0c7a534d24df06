#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace mmh {

struct McEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t n = 0;
};

// Sample mean and standard error (sample standard deviation / sqrt(n)),
// accumulated in index order around the first sample. Identical samples give
// exactly that value and a zero standard error.
inline McEstimate summarize(std::span<const double> samples)
{
    McEstimate out;
    out.n = samples.size();
    if (samples.empty()) return out;
    const double shift = samples.front();
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double s : samples) {
        const double d = s - shift;
        sum += d;
        sum_sq += d * d;
    }
    const double n = static_cast<double>(samples.size());
    out.mean = shift + sum / n;
    if (samples.size() > 1) {
        const double var = (sum_sq - sum * sum / n) / (n - 1.0);
        out.std_err = std::sqrt(std::max(var, 0.0) / n);
    }
    return out;
}

}  // namespace mmh
