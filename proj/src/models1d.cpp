#include "krn/models1d.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace krn {

double normal_cdf(double t) { return 0.5 * std::erfc(-t / M_SQRT2); }

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Measure1D normal(double mean, double variance) {
    if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(mean))
        throw InvalidArgument("normal: variance must be positive and finite");
    const double sd = std::sqrt(variance);
    Measure1D m;
    m.cdf = [mean, sd](double t) { return normal_cdf((t - mean) / sd); };
    m.density = [mean, sd](double t) {
        const double z = (t - mean) / sd;
        return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
    };
    m.descriptor = "normal:" + fmt(mean) + ":" + fmt(variance);
    return m;
}

KernelModel1D gaussian_kernel(double variance) {
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw InvalidArgument("gaussian_kernel: variance must be positive");
    KernelModel1D k;
    k.at = [variance](double x) { return normal(x, variance); };
    k.descriptor = "gaussian_kernel:" + fmt(variance);
    return k;
}

Measure1D exact_gaussian_posterior(double prior_mean, double prior_var,
                                   double like_var, double obs) {
    if (!(prior_var > 0.0) || !(like_var > 0.0))
        throw InvalidArgument("exact_gaussian_posterior: variances must be positive");
    const double post_var = 1.0 / (1.0 / prior_var + 1.0 / like_var);
    const double post_mean = post_var * (prior_mean / prior_var + obs / like_var);
    return normal(post_mean, post_var);
}

double posterior_tail_query(const Measure1D& posterior, double threshold) {
    return 1.0 - posterior.cdf(threshold);
}

Measure1D parse_measure_descriptor(const std::string& text) {
    std::istringstream in(text);
    std::string tag, mean_s, var_s;
    if (!std::getline(in, tag, ':'))
        throw InvalidArgument("empty measure descriptor");
    if (tag != "normal")
        throw InvalidArgument("unknown measure family '" + tag + "'");
    if (!std::getline(in, mean_s, ':') || !std::getline(in, var_s, ':'))
        throw InvalidArgument("expected normal:<mean>:<variance>, got '" + text + "'");
    try {
        return normal(std::stod(mean_s), std::stod(var_s));
    } catch (const std::logic_error&) {
        throw InvalidArgument("bad number in measure descriptor '" + text + "'");
    }
}

}  // namespace krn
