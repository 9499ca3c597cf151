#include "invot/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace invot {

namespace {

constexpr const char* kCheckpointFormat = "invot-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::ofstream openOut(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream openIn(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  return in;
}

Index parseCount(std::string_view token, int line, int column) {
  token = trim(token);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || v < 0)
    throw ParseError("expected a nonnegative integer, got '" + std::string(token) + "'", line, column);
  return static_cast<Index>(v);
}

/// Splits on commas; each field is reported with its 1-based starting column.
std::vector<std::pair<std::string_view, int>> splitFields(std::string_view line) {
  std::vector<std::pair<std::string_view, int>> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? line.size() : comma;
    out.emplace_back(line.substr(start, end - start), static_cast<int>(start) + 1);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void writeRow(std::ostream& out, const double* values, Index count, Index stride) {
  for (Index k = 0; k < count; ++k) {
    if (k) out << ',';
    out << format_double(values[k * stride]);
  }
  out << '\n';
}

std::vector<double> toStd(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector fromStd(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific, 16);
  if (ec != std::errc()) throw Error(ErrorCode::IoError, "number formatting failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view token, int line, int column) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError("not a number: '" + std::string(token) + "'", line, column);
  return v;
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  std::ofstream out = openOut(path);
  out << m.rows() << ',' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) writeRow(out, m.data() + i, m.cols(), m.rows());
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

Matrix read_matrix_csv(const fs::path& path) {
  std::ifstream in = openIn(path);
  std::string text;
  int lineNo = 0;
  if (!std::getline(in, text)) throw ParseError(path.string() + ": missing rows,cols header", 1, 1);
  ++lineNo;
  const auto header = splitFields(text);
  if (header.size() != 2)
    throw ParseError(path.string() + ": header must be 'rows,cols'", lineNo, 1);
  const Index rows = parseCount(header[0].first, lineNo, header[0].second);
  const Index cols = parseCount(header[1].first, lineNo, header[1].second);

  Matrix m(rows, cols);
  Index r = 0;
  while (std::getline(in, text)) {
    ++lineNo;
    if (trim(text).empty()) continue;
    if (r >= rows)
      throw Error(ErrorCode::ShapeHeaderMismatch,
                  path.string() + ": more data rows than the header's " + std::to_string(rows), lineNo);
    const auto fields = splitFields(text);
    if (static_cast<Index>(fields.size()) != cols)
      throw ParseError(path.string() + ": line " + std::to_string(lineNo) + " has " +
                           std::to_string(fields.size()) + " fields, expected " + std::to_string(cols),
                       lineNo, fields.size() > static_cast<std::size_t>(cols)
                                   ? fields[static_cast<std::size_t>(cols)].second
                                   : static_cast<int>(text.size()) + 1);
    for (Index c = 0; c < cols; ++c) {
      const auto& [tok, col] = fields[static_cast<std::size_t>(c)];
      m(r, c) = parse_double(tok, lineNo, col);
    }
    ++r;
  }
  if (r != rows)
    throw Error(ErrorCode::ShapeHeaderMismatch, path.string() + ": header declares " +
                                                    std::to_string(rows) + " rows, found " +
                                                    std::to_string(r));
  return m;
}

void write_vector_csv(const fs::path& path, const Vector& v) { write_matrix_csv(path, Matrix(v)); }

Vector read_vector_csv(const fs::path& path) {
  const Matrix m = read_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw Error(ErrorCode::DimMismatch, path.string() + ": expected a single row or column");
}

ProbabilityVector read_probability_csv(const fs::path& path, double sumTol) {
  return ProbabilityVector(read_vector_csv(path), sumTol);
}

void write_pairs_csv(const fs::path& path, const SampleSet& samples) {
  Matrix m(samples.size(), samples.dimX() + samples.dimY());
  m.leftCols(samples.dimX()) = samples.x.transpose();
  m.rightCols(samples.dimY()) = samples.y.transpose();
  write_matrix_csv(path, m);
}

SampleSet read_pairs_csv(const fs::path& path, Index dimX) {
  const Matrix m = read_matrix_csv(path);
  if (dimX < 1 || dimX >= m.cols())
    throw Error(ErrorCode::DimMismatch, path.string() + ": cannot split " + std::to_string(m.cols()) +
                                            " columns into x (" + std::to_string(dimX) + ") and y");
  SampleSet s;
  s.x = m.leftCols(dimX).transpose();
  s.y = m.rightCols(m.cols() - dimX).transpose();
  s.validate();
  return s;
}

void write_table_csv(const fs::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::ofstream out = openOut(path);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw Error(ErrorCode::DimMismatch, "table row width differs from the header");
    writeRow(out, row.data(), static_cast<Index>(row.size()), 1);
  }
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

nlohmann::json to_json(const SolverConfig& c) {
  const char* mode = c.mode == ScalingMode::Direct ? "direct" : c.mode == ScalingMode::Log ? "log" : "auto";
  return {{"epsilon", c.epsilon}, {"maxIter", c.maxIter}, {"tol", c.tol},
          {"seed", c.seed},       {"logEvery", c.logEvery}, {"mode", mode}};
}

nlohmann::json to_json(const SolveReport& r) {
  nlohmann::json j = {{"iterations", r.iterations},
                      {"converged", r.converged},
                      {"logDomain", r.logDomain},
                      {"smoothedZeros", r.smoothedZeros},
                      {"feasibilityResidual", r.feasibilityResidual},
                      {"wallClockSeconds", r.wallClockSeconds}};
  if (!r.objectiveTrace.empty()) j["finalObjective"] = r.objectiveTrace.back();
  if (r.relErrTrace && !r.relErrTrace->empty()) j["finalRelativeError"] = r.relErrTrace->back();
  return j;
}

nlohmann::json to_json(const FeedForwardNet& net) {
  return {{"layerDims", net.layerDims()},
          {"hiddenActivation", to_string(net.hiddenActivation())},
          {"outputActivation", to_string(net.outputActivation())},
          {"params", toStd(net.params())}};
}

nlohmann::json to_json(const CostModel& cost) {
  return {{"inputMode", to_string(cost.mode())}, {"dimX", cost.dimX()},
          {"dimY", cost.dimY()},                 {"scale", toStd(cost.scale())},
          {"learnScale", cost.learnScale()},     {"net", to_json(cost.net())}};
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json box = nlohmann::json::array();
  for (const auto& [lo, hi] : c.domainBox.bounds) box.push_back({lo, hi});
  return {{"learningRate", c.learningRate}, {"adamBetas", {c.adamBeta1, c.adamBeta2}},
          {"adamEps", c.adamEps},           {"batchSize", c.batchSize},
          {"nCollocation", c.nCollocation}, {"epochs", c.epochs},
          {"seed", c.seed},                 {"domainBox", box},
          {"costL2", c.costL2},             {"epsilon", c.epsilon}};
}

FeedForwardNet net_from_json(const nlohmann::json& j) {
  try {
    if (j.at("hiddenActivation").get<std::string>() != "tanh")
      throw Error(ErrorCode::InvalidArgument, "only tanh hidden layers are supported");
    FeedForwardNet net(j.at("layerDims").get<std::vector<int>>(),
                       activation_from_string(j.at("outputActivation").get<std::string>()));
    net.setParams(fromStd(j.at("params").get<std::vector<double>>()));
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed net: ") + e.what());
  }
}

CostModel cost_from_json(const nlohmann::json& j) {
  try {
    const std::string tag = j.at("inputMode").get<std::string>();
    InputMode mode = InputMode::RawPair;
    if (tag == "absdiff") mode = InputMode::AbsDiff;
    else if (tag == "scaleddiff") mode = InputMode::ScaledDiff;
    else if (tag != "raw") throw Error(ErrorCode::InvalidArgument, "unknown input mode '" + tag + "'");
    FeedForwardNet net = net_from_json(j.at("net"));
    const auto& dims = net.layerDims();
    std::vector<int> hidden(dims.begin() + 1, dims.end() - 1);
    CostModel cost(mode, j.at("dimX").get<int>(), j.at("dimY").get<int>(), hidden,
                   net.outputActivation(), fromStd(j.at("scale").get<std::vector<double>>()),
                   j.at("learnScale").get<bool>());
    if (cost.net().layerDims() != dims)
      throw Error(ErrorCode::DimMismatch, "cost net shape does not match its input mode");
    cost.net().setParams(net.params());
    return cost;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed cost model: ") + e.what());
  }
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  try {
    TrainConfig c;
    c.learningRate = j.at("learningRate").get<double>();
    c.adamBeta1 = j.at("adamBetas").at(0).get<double>();
    c.adamBeta2 = j.at("adamBetas").at(1).get<double>();
    c.adamEps = j.at("adamEps").get<double>();
    c.batchSize = j.at("batchSize").get<Index>();
    c.nCollocation = j.at("nCollocation").get<Index>();
    c.epochs = j.at("epochs").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& b : j.at("domainBox")) c.domainBox.bounds.emplace_back(b.at(0), b.at(1));
    c.costL2 = j.at("costL2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed train config: ") + e.what());
  }
}

void write_checkpoint(const fs::path& path, const ContinuousModel& model, const TrainConfig& config) {
  const nlohmann::json j = {{"format", kCheckpointFormat},
                            {"version", kCheckpointVersion},
                            {"alpha", to_json(model.alpha)},
                            {"beta", to_json(model.beta)},
                            {"cost", to_json(model.cost)},
                            {"trainConfig", to_json(config)},
                            {"rng", Rng::kAlgorithm}};
  write_json(path, j);
}

Checkpoint read_checkpoint(const fs::path& path) {
  const nlohmann::json j = read_json(path);
  if (j.value("format", "") != kCheckpointFormat || j.value("version", 0) != kCheckpointVersion)
    throw Error(ErrorCode::ParseError, path.string() + ": not a version 1 checkpoint");
  Checkpoint c{{net_from_json(j.at("alpha")), net_from_json(j.at("beta")), cost_from_json(j.at("cost"))},
               train_config_from_json(j.at("trainConfig"))};
  return c;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out = openOut(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in = openIn(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace invot
