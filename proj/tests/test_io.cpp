#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "invot/io.hpp"
#include "oracles.hpp"

using namespace invot;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "invot_test_io";
  fs::create_directories(dir);
  return dir / name;
}

void writeText(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("doubles round trip through text") {
  oracle::Draw d(101);
  for (int t = 0; t < 1000; ++t) {
    const double x = d.normal() * std::pow(10.0, d.integer(-300, 300));
    CHECK(parse_double(format_double(x)) == x);
  }
  for (double x : {0.0, -0.0, 1.0 / 3.0, std::numeric_limits<double>::denorm_min(),
                   std::numeric_limits<double>::max()})
    CHECK(parse_double(format_double(x)) == x);
  CHECK(parse_double("+2.5") == 2.5);
  CHECK_THROWS_AS(parse_double("2.5x", 3, 4), ParseError);
  CHECK_THROWS_AS(parse_double(""), ParseError);
}

TEST_CASE("matrix CSV round trip is bitwise") {
  oracle::Draw d(102);
  const Matrix m = d.matrix(5, 7, -1e3, 1e3);
  const fs::path p = scratch("m.csv");
  write_matrix_csv(p, m);
  CHECK(read_matrix_csv(p) == m);
  const Vector v = d.vector(9);
  write_vector_csv(p, v);
  CHECK(read_vector_csv(p) == v);
  writeText(p, "1,3\n0.25,0.5,0.25\n");
  CHECK(read_probability_csv(p).dim() == 3);
}

TEST_CASE("malformed CSV") {
  const fs::path p = scratch("bad.csv");
  writeText(p, "2,3\n1,2,3\n4,5\n");
  try {
    read_matrix_csv(p);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  writeText(p, "2,2\n1,2\n3,abc\n");
  try {
    read_matrix_csv(p);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 3);
  }
  writeText(p, "3,2\n1,2\n3,4\n");
  try {
    read_matrix_csv(p);
    FAIL("expected ShapeHeaderMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeHeaderMismatch);
  }
  try {
    read_matrix_csv(scratch("does-not-exist.csv"));
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
  writeText(p, "1,2\n0.7,0.7\n");
  CHECK_THROWS_AS(read_probability_csv(p), Error);
}

TEST_CASE("pairs CSV") {
  oracle::Draw d(103);
  SampleSet s;
  s.x = d.matrix(2, 11);
  s.y = d.matrix(3, 11);
  const fs::path p = scratch("pairs.csv");
  write_pairs_csv(p, s);
  const SampleSet r = read_pairs_csv(p, 2);
  CHECK(r.x == s.x);
  CHECK(r.y == s.y);
  CHECK_THROWS_AS(read_pairs_csv(p, 5), Error);
}

TEST_CASE("table CSV has a named header") {
  const fs::path p = scratch("table.csv");
  write_table_csv(p, {"iteration", "objective"}, {{1, 0.5}, {2, 0.25}});
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,objective");
}

TEST_CASE("checkpoint round trip") {
  Vector scale(2);
  scale << 0.7, 1.4;
  ContinuousModel m = make_model(2, 2, {5, 3}, InputMode::ScaledDiff, Activation::Softplus, 12, scale, true);
  oracle::Draw d(104);
  Vector p(m.numParams());
  for (Index k = 0; k < p.size(); ++k) p[k] = d.normal() / 3.0;
  m.setParams(p);
  TrainConfig c;
  c.learningRate = 3e-4;
  c.epochs = 17;
  c.seed = 42;
  c.batchSize = 64;
  c.costL2 = 1e-3;
  c.epsilon = 0.5;
  c.domainBox = DomainBox{{{0.0, 1.0}, {-1.0, 2.0}, {0.0, 1.0}, {0.0, 3.0}}};
  const fs::path path = scratch("ckpt.json");
  write_checkpoint(path, m, c);
  const Checkpoint r = read_checkpoint(path);
  CHECK(r.model.params() == m.params());
  CHECK(r.model.cost.mode() == InputMode::ScaledDiff);
  CHECK(r.model.cost.learnScale());
  CHECK(r.model.cost.scale() == m.cost.scale());
  CHECK(r.model.cost.net().outputActivation() == Activation::Softplus);
  CHECK(r.model.alpha.layerDims() == m.alpha.layerDims());
  CHECK(r.config.learningRate == c.learningRate);
  CHECK(r.config.epochs == 17);
  CHECK(r.config.seed == 42);
  CHECK(r.config.batchSize == 64);
  CHECK(r.config.costL2 == c.costL2);
  CHECK(r.config.epsilon == 0.5);
  CHECK(r.config.domainBox.bounds == c.domainBox.bounds);
  const Matrix X = d.matrix(2, 10), Y = d.matrix(2, 10);
  CHECK(r.model.G(X, Y) == m.G(X, Y));

  nlohmann::json j = read_json(path);
  CHECK(j.at("format") == "invot-checkpoint");
  j["format"] = "something-else";
  write_json(path, j);
  CHECK_THROWS_AS(read_checkpoint(path), Error);
}

TEST_CASE("report JSON") {
  SolveReport r;
  r.iterations = 3;
  r.objectiveTrace = {3.0, 2.0, 1.0};
  r.relErrTrace = std::vector<double>{0.3, 0.2, 0.1};
  r.converged = true;
  const nlohmann::json j = to_json(r);
  CHECK(j.at("iterations") == 3);
  CHECK(j.at("converged") == true);
  SolverConfig c;
  c.seed = 77;
  CHECK(to_json(c).at("seed") == 77);
}
