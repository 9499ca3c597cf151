#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "invot/continuous.hpp"
#include "invot/sinkhorn.hpp"

namespace invot {

namespace fs = std::filesystem;

/// Scientific notation with 17 significant digits; parse_double(format_double(x)) == x.
std::string format_double(double x);
/// Whole-token parse. Throws ParseError at (line, column) on failure.
double parse_double(std::string_view token, int line = 0, int column = 0);

/// CSV layout: a `rows,cols` header line followed by `rows` lines of `cols`
/// comma-separated values.
void write_matrix_csv(const fs::path& path, const Matrix& m);
Matrix read_matrix_csv(const fs::path& path);

/// Vectors are stored as n x 1 matrices; reading also accepts 1 x n.
void write_vector_csv(const fs::path& path, const Vector& v);
Vector read_vector_csv(const fs::path& path);
ProbabilityVector read_probability_csv(const fs::path& path, double sumTol = 1e-12);

/// One row per pair: x coordinates then y coordinates (rows = N, cols = dX + dY).
void write_pairs_csv(const fs::path& path, const SampleSet& samples);
SampleSet read_pairs_csv(const fs::path& path, Index dimX);

/// Plot-ready table: a named header line and one row per record.
void write_table_csv(const fs::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

nlohmann::json to_json(const SolverConfig& c);
nlohmann::json to_json(const SolveReport& r);
nlohmann::json to_json(const FeedForwardNet& net);
nlohmann::json to_json(const CostModel& cost);
nlohmann::json to_json(const TrainConfig& c);

FeedForwardNet net_from_json(const nlohmann::json& j);
CostModel cost_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct Checkpoint {
  ContinuousModel model;
  TrainConfig config;
};

/// Self-describing JSON: format tag, layer dims, activation tags, flattened
/// parameters (row-major weights then biases per layer) and the TrainConfig.
void write_checkpoint(const fs::path& path, const ContinuousModel& model, const TrainConfig& config);
Checkpoint read_checkpoint(const fs::path& path);

void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

}  // namespace invot
