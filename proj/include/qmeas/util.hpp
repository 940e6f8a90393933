#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace qmeas {

using cplx = std::complex<double>;

// Pairwise (cascade) summation. Used for every statistical reduction so that
// aggregate values do not depend on chunking or thread count.
double pairwise_sum(std::span<const double> v);

// Mean and unbiased variance of a sample, both via pairwise summation.
double sample_mean(std::span<const double> v);
double sample_variance(std::span<const double> v);

// Central moment of given order about the sample mean.
double central_moment(std::span<const double> v, int order);

// Pearson correlation coefficient.
double pearson_corr(std::span<const double> a, std::span<const double> b);

// Format a double with 17 significant digits, locale independent.
std::string fmt17(double v);

// Damerau-Levenshtein distance, used for "did you mean" config suggestions.
std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace qmeas
