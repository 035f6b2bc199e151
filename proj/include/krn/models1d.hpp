#pragma once

#include <functional>
#include <string>

#include "krn/errors.hpp"

namespace krn {

/// A continuous distribution on the real line given by its CDF, with an
/// optional density and a printable descriptor (e.g. "normal:0:1").
struct Measure1D {
    std::function<double(double)> cdf;
    std::function<double(double)> density;  // may be empty
    std::string descriptor;
};

/// A continuous kernel x -> distribution.
struct KernelModel1D {
    std::function<Measure1D(double)> at;
    std::string descriptor;
};

/// Standard normal CDF via erfc, absolute error well below 1e-10.
double normal_cdf(double t);

Measure1D normal(double mean, double variance);

/// x -> normal(x, variance).
KernelModel1D gaussian_kernel(double variance);

/// Conjugate closed form: posterior of a normal prior under one Gaussian
/// observation.
Measure1D exact_gaussian_posterior(double prior_mean, double prior_var,
                                   double like_var, double obs);

double posterior_tail_query(const Measure1D& posterior, double threshold);

/// Parses "normal:<mean>:<variance>".
Measure1D parse_measure_descriptor(const std::string& text);

}  // namespace krn
