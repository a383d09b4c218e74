#include "retmix/container.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "retmix/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container files are little-endian; big-endian hosts need byte swaps");

namespace retmix {

namespace {

constexpr const char* kFormat = "retmix-container-v1";

struct BlockWriter {
    std::ofstream bin;
    nlohmann::json blocks = nlohmann::json::array();
    std::size_t offset = 0;

    explicit BlockWriter(const std::string& path) : bin(path, std::ios::binary) {
        if (!bin) throw DataError("cannot open " + path + " for writing");
    }

    void add(const std::string& name, const double* data, std::int64_t rows, std::int64_t cols) {
        const std::size_t bytes = sizeof(double) * static_cast<std::size_t>(rows * cols);
        bin.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(bytes));
        blocks.push_back({{"name", name},
                          {"dtype", "float64"},
                          {"rows", rows},
                          {"cols", cols},
                          {"offset_bytes", offset}});
        offset += bytes;
    }

    void addInt64(const std::string& name, const std::int64_t* data, std::int64_t count) {
        const std::size_t bytes = sizeof(std::int64_t) * static_cast<std::size_t>(count);
        bin.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(bytes));
        blocks.push_back({{"name", name},
                          {"dtype", "int64"},
                          {"rows", count},
                          {"cols", 1},
                          {"offset_bytes", offset}});
        offset += bytes;
    }
};

class BlockReader {
public:
    explicit BlockReader(const std::string& basePath) : binPath_(basePath + ".bin") {
        std::ifstream side(basePath + ".json");
        if (!side) throw DataError("cannot open container sidecar " + basePath + ".json");
        try {
            side >> sidecar_;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed container sidecar " + basePath + ".json: " + e.what());
        }
        if (sidecar_.value("format", "") != kFormat) {
            throw DataError("unknown container format in " + basePath + ".json");
        }
    }

    const nlohmann::json& sidecar() const { return sidecar_; }

    Eigen::MatrixXd matrix(const std::string& name) const {
        const auto block = findBlock(name, "float64");
        Eigen::MatrixXd out(block.at("rows").get<std::int64_t>(),
                            block.at("cols").get<std::int64_t>());
        readRaw(block, out.data(), sizeof(double) * static_cast<std::size_t>(out.size()));
        return out;
    }

    std::vector<std::int64_t> int64s(const std::string& name) const {
        const auto block = findBlock(name, "int64");
        std::vector<std::int64_t> out(static_cast<std::size_t>(block.at("rows").get<std::int64_t>()));
        readRaw(block, out.data(), sizeof(std::int64_t) * out.size());
        return out;
    }

private:
    nlohmann::json findBlock(const std::string& name, const std::string& dtype) const {
        for (const auto& block : sidecar_.at("blocks")) {
            if (block.at("name") == name) {
                if (block.at("dtype") != dtype) {
                    throw DataError("container block " + name + " has dtype " +
                                    block.at("dtype").get<std::string>() + ", expected " + dtype);
                }
                return block;
            }
        }
        throw DataError("container lacks block " + name);
    }

    void readRaw(const nlohmann::json& block, void* dst, std::size_t bytes) const {
        std::ifstream bin(binPath_, std::ios::binary);
        if (!bin) throw DataError("cannot open container data " + binPath_);
        bin.seekg(static_cast<std::streamoff>(block.at("offset_bytes").get<std::size_t>()));
        bin.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
        if (bin.gcount() != static_cast<std::streamsize>(bytes)) {
            throw DataError("container data truncated in " + binPath_);
        }
    }

    std::string binPath_;
    nlohmann::json sidecar_;
};

void writeSidecar(const std::string& basePath, nlohmann::json doc) {
    std::ofstream side(basePath + ".json");
    if (!side) throw DataError("cannot open " + basePath + ".json for writing");
    side << doc.dump(2) << "\n";
}

nlohmann::json baseSidecar(const std::string& type, const BlockWriter& writer) {
    nlohmann::json doc;
    doc["format"] = kFormat;
    doc["type"] = type;
    doc["byte_order"] = "little-endian";
    doc["layout"] = "column-major";
    doc["blocks"] = writer.blocks;
    return doc;
}

std::vector<std::pair<int, int>> readRanges(const nlohmann::json& arr) {
    std::vector<std::pair<int, int>> out;
    for (const auto& r : arr) out.emplace_back(r.at(0).get<int>(), r.at(1).get<int>());
    return out;
}

nlohmann::json writeRanges(const std::vector<std::pair<int, int>>& ranges) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [b, e] : ranges) arr.push_back({b, e});
    return arr;
}

void expectType(const BlockReader& reader, const std::string& type, const std::string& basePath) {
    if (reader.sidecar().value("type", "") != type) {
        throw DataError("container " + basePath + " has type '" +
                        reader.sidecar().value("type", "") + "', expected '" + type + "'");
    }
}

}  // namespace

std::string containerType(const std::string& basePath) {
    return BlockReader(basePath).sidecar().value("type", "");
}

void writeReturnPanel(const ReturnPanel& panel, const std::string& basePath) {
    BlockWriter writer(basePath + ".bin");
    writer.add("returns", panel.returns.data(), panel.rows(), panel.cols());
    auto doc = baseSidecar("return_panel", writer);
    doc["tickers"] = panel.tickers;
    doc["delta_seconds"] = panel.deltaSeconds;
    doc["delta_label"] = panel.deltaLabel;
    doc["segments"] = writeRanges(panel.segments);
    nlohmann::json flagged = nlohmann::json::array();
    for (std::size_t c = 0; c < panel.boundaryFlags.size(); ++c) {
        if (panel.boundaryFlags[c]) flagged.push_back(c);
    }
    doc["boundary_return_indices"] = flagged;
    doc["has_boundary_flags"] = !panel.boundaryFlags.empty();
    writeSidecar(basePath, std::move(doc));
}

ReturnPanel readReturnPanel(const std::string& basePath) {
    BlockReader reader(basePath);
    expectType(reader, "return_panel", basePath);
    const auto& doc = reader.sidecar();
    ReturnPanel panel;
    panel.returns = reader.matrix("returns");
    panel.tickers = doc.at("tickers").get<std::vector<std::string>>();
    panel.deltaSeconds = doc.at("delta_seconds").get<double>();
    panel.deltaLabel = doc.at("delta_label").get<std::string>();
    panel.segments = readRanges(doc.at("segments"));
    if (doc.value("has_boundary_flags", false)) {
        panel.boundaryFlags.assign(static_cast<std::size_t>(panel.cols()), 0);
        for (const auto& idx : doc.at("boundary_return_indices")) {
            panel.boundaryFlags.at(idx.get<std::size_t>()) = 1;
        }
    }
    return panel;
}

void writeNormalizedPanel(const NormalizedPanel& panel, const std::string& basePath) {
    BlockWriter writer(basePath + ".bin");
    writer.add("values", panel.values.data(), panel.rows(), panel.cols());
    auto doc = baseSidecar("normalized_panel", writer);
    doc["tickers"] = panel.tickers;
    doc["mode"] = to_string(panel.mode);
    doc["slice_id"] = panel.sliceId;
    doc["delta_label"] = panel.deltaLabel;
    doc["epoch_ranges"] = writeRanges(panel.epochRanges);
    doc["row_means"] = panel.rowMeans;
    doc["row_stds"] = panel.rowStds;
    doc["col_means"] = panel.colMeans;
    doc["col_stds"] = panel.colStds;
    writeSidecar(basePath, std::move(doc));
}

NormalizedPanel readNormalizedPanel(const std::string& basePath) {
    BlockReader reader(basePath);
    expectType(reader, "normalized_panel", basePath);
    const auto& doc = reader.sidecar();
    NormalizedPanel panel;
    panel.values = reader.matrix("values");
    panel.tickers = doc.at("tickers").get<std::vector<std::string>>();
    panel.mode = normalizationModeFromString(doc.at("mode").get<std::string>());
    panel.sliceId = doc.at("slice_id").get<std::string>();
    panel.deltaLabel = doc.value("delta_label", "");
    panel.epochRanges = readRanges(doc.at("epoch_ranges"));
    panel.rowMeans = doc.at("row_means").get<std::vector<double>>();
    panel.rowStds = doc.at("row_stds").get<std::vector<double>>();
    panel.colMeans = doc.at("col_means").get<std::vector<double>>();
    panel.colStds = doc.at("col_stds").get<std::vector<double>>();
    return panel;
}

void writePriceGrid(const PriceGrid& grid, const std::string& basePath) {
    BlockWriter writer(basePath + ".bin");
    writer.add("prices", grid.prices.data(), grid.tickerCount(), grid.gridCount());
    writer.addInt64("times", grid.times.data(), static_cast<std::int64_t>(grid.times.size()));
    auto doc = baseSidecar("price_grid", writer);
    doc["tickers"] = grid.tickers;
    doc["delta_seconds"] = grid.deltaSeconds;
    doc["delta_label"] = grid.deltaLabel;
    doc["day_segments"] = writeRanges(grid.daySegments);
    doc["degenerate_days"] = grid.degenerateDays;
    writeSidecar(basePath, std::move(doc));
}

PriceGrid readPriceGrid(const std::string& basePath) {
    BlockReader reader(basePath);
    expectType(reader, "price_grid", basePath);
    const auto& doc = reader.sidecar();
    PriceGrid grid;
    grid.prices = reader.matrix("prices");
    grid.times = reader.int64s("times");
    grid.tickers = doc.at("tickers").get<std::vector<std::string>>();
    grid.deltaSeconds = doc.at("delta_seconds").get<double>();
    grid.deltaLabel = doc.at("delta_label").get<std::string>();
    grid.daySegments = readRanges(doc.at("day_segments"));
    grid.degenerateDays = doc.value("degenerate_days", false);
    return grid;
}

void writeMatrix(const CorrelationMatrix& matrix, const std::string& basePath) {
    BlockWriter writer(basePath + ".bin");
    writer.add("values", matrix.values.data(), matrix.dim(), matrix.dim());
    auto doc = baseSidecar("matrix", writer);
    doc["kind"] = to_string(matrix.kind);
    doc["slice_id"] = matrix.sliceId;
    doc["sample_columns"] = matrix.sampleColumns;
    writeSidecar(basePath, std::move(doc));
}

CorrelationMatrix readMatrix(const std::string& basePath) {
    BlockReader reader(basePath);
    expectType(reader, "matrix", basePath);
    const auto& doc = reader.sidecar();
    CorrelationMatrix matrix;
    matrix.values = reader.matrix("values");
    matrix.kind = matrixKindFromString(doc.at("kind").get<std::string>());
    matrix.sliceId = doc.at("slice_id").get<std::string>();
    matrix.sampleColumns = doc.at("sample_columns").get<int>();
    return matrix;
}

void writeSpectrum(const SpectralDecomposition& spec, const std::string& basePath) {
    BlockWriter writer(basePath + ".bin");
    writer.add("eigenvalues", spec.eigenvalues.data(), spec.dim(), 1);
    writer.add("eigenvectors", spec.eigenvectors.data(), spec.dim(), spec.dim());
    auto doc = baseSidecar("spectrum", writer);
    doc["kind"] = to_string(spec.sourceKind);
    doc["slice_id"] = spec.sliceId;
    doc["full_rank"] = spec.fullRank;
    doc["rank_ratio"] = spec.rankRatio;
    writeSidecar(basePath, std::move(doc));
}

SpectralDecomposition readSpectrum(const std::string& basePath) {
    BlockReader reader(basePath);
    expectType(reader, "spectrum", basePath);
    const auto& doc = reader.sidecar();
    SpectralDecomposition spec;
    spec.eigenvalues = reader.matrix("eigenvalues");
    spec.eigenvectors = reader.matrix("eigenvectors");
    spec.sourceKind = matrixKindFromString(doc.at("kind").get<std::string>());
    spec.sliceId = doc.at("slice_id").get<std::string>();
    spec.fullRank = doc.at("full_rank").get<bool>();
    spec.rankRatio = doc.at("rank_ratio").get<double>();
    return spec;
}

void writeRotatedPanel(const RotatedPanel& rotated, const std::string& basePath) {
    BlockWriter writer(basePath + ".bin");
    writer.add("rotated", rotated.rotated.data(), rotated.rows(), rotated.cols());
    writer.add("rescaled", rotated.rescaled.data(), rotated.rows(), rotated.cols());
    writer.add("eigenvalues", rotated.eigenvalues.data(), rotated.rows(), 1);
    auto doc = baseSidecar("rotated_panel", writer);
    doc["slice_id"] = rotated.sliceId;
    doc["basis_kind"] = to_string(rotated.basisKind);
    doc["degenerate_rows"] = rotated.degenerateRows;
    writeSidecar(basePath, std::move(doc));
}

RotatedPanel readRotatedPanel(const std::string& basePath) {
    BlockReader reader(basePath);
    expectType(reader, "rotated_panel", basePath);
    const auto& doc = reader.sidecar();
    RotatedPanel rotated;
    rotated.rotated = reader.matrix("rotated");
    rotated.rescaled = reader.matrix("rescaled");
    rotated.eigenvalues = reader.matrix("eigenvalues");
    rotated.sliceId = doc.at("slice_id").get<std::string>();
    rotated.basisKind = matrixKindFromString(doc.at("basis_kind").get<std::string>());
    rotated.degenerateRows = doc.at("degenerate_rows").get<std::vector<int>>();
    return rotated;
}

}  // namespace retmix
