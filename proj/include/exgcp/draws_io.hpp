#pragma once

#include <filesystem>
#include <iosfwd>

#include "exgcp/mcmc.hpp"

namespace exgcp {

enum class DrawsFormat { kBinary, kCsv };

/// Binary layout (little-endian): "EXGCPDR1", u64 T, u64 n_draws, u64 M,
/// f64 domain[4], f64 stp[4]; then per draw f64 theta[4] and per slice
/// f64 lambda*, u64 K, u64 n_observed, u64 n_stored, n_stored x (f64 x, y, z).
void write_draws(std::ostream& out, const PosteriorDraws& draws, DrawsFormat format);
void write_draws(const std::filesystem::path& path, const PosteriorDraws& draws,
                 DrawsFormat format);

/// Reads either format, detected from the leading bytes.
PosteriorDraws read_draws(std::istream& in);
PosteriorDraws read_draws(const std::filesystem::path& path);

}  // namespace exgcp
