#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace metastable {

std::vector<double> linspace(double lo, double hi, int n);

// Bisection on a bracketing interval [a,b] with f(a)*f(b) <= 0.
// Refines until |b-a| <= xtol.  Returns the midpoint of the final bracket.
double bisect_root(const std::function<double(double)>& f, double a, double b, double xtol);

// Bisection on a boolean predicate that is false at `lo` and true at `hi`
// (monotone switch); returns the smallest argument where `pred` holds,
// up to xtol.
double bisect_predicate(const std::function<bool(double)>& pred, double lo, double hi, double xtol);

// Golden-section maximization of f on [a,b] to tolerance xtol in the argument.
double golden_max(const std::function<double(double)>& f, double a, double b, double xtol);

// FNV-1a 64-bit content hash used for cache keys and run manifests.
std::uint64_t fnv1a64(const std::string& data);
std::uint64_t fnv1a64_file(const std::string& path);

std::string format_double(double v);  // shortest round-trip-ish fixed formatting, locale-free

// splitmix64; used to derive independent per-path RNG seeds from one master seed.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace metastable
