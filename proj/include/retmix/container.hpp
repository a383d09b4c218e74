#pragma once

#include <string>

#include "retmix/grid.hpp"
#include "retmix/panel.hpp"
#include "retmix/rotate.hpp"
#include "retmix/spectra.hpp"

namespace retmix {

// Columnar binary container: <base>.bin holds the numeric blocks back to
// back (little-endian, column-major float64 unless a block says int64),
// <base>.json is the sidecar with the block table and type metadata.
// The exact byte layout is documented in docs/formats.md.

void writeReturnPanel(const ReturnPanel& panel, const std::string& basePath);
ReturnPanel readReturnPanel(const std::string& basePath);

void writeNormalizedPanel(const NormalizedPanel& panel, const std::string& basePath);
NormalizedPanel readNormalizedPanel(const std::string& basePath);

void writePriceGrid(const PriceGrid& grid, const std::string& basePath);
PriceGrid readPriceGrid(const std::string& basePath);

void writeMatrix(const CorrelationMatrix& matrix, const std::string& basePath);
CorrelationMatrix readMatrix(const std::string& basePath);

void writeSpectrum(const SpectralDecomposition& spec, const std::string& basePath);
SpectralDecomposition readSpectrum(const std::string& basePath);

void writeRotatedPanel(const RotatedPanel& rotated, const std::string& basePath);
RotatedPanel readRotatedPanel(const std::string& basePath);

/// Container type string from the sidecar, for dispatch and diagnostics.
std::string containerType(const std::string& basePath);

}  // namespace retmix
