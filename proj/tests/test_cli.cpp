#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <unistd.h>

#include "bta/bta_io.hpp"
#include "bta/cli.hpp"
#include "doctest.h"

using namespace bta;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("btasolve-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::size_t count_lines_starting(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::size_t k = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(prefix, 0) == 0) ++k;
  }
  return k;
}

std::string value_of(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  }
  return {};
}

}  // namespace

TEST_CASE("preset expansion") {
  const auto sd = expand_preset("sd-32");
  REQUIRE(sd.has_value());
  CHECK(*sd == BtaShape{32, 1024, 0});
  CHECK(expand_preset("sd-1024")->n == 1024);
  CHECK_FALSE(expand_preset("sd-").has_value());
  CHECK_FALSE(expand_preset("sd-0").has_value());
  CHECK_FALSE(expand_preset("nr-3408").has_value());
  CHECK_FALSE(expand_preset("sd-12x").has_value());
}

TEST_CASE("generate is deterministic") {
  TempDir d;
  for (const char* name : {"x.bta", "y.bta"}) {
    const Run r = cli({"generate", "--n", "4", "--b", "2", "--a", "1", "--seed", "7", "--out-a",
                       d / name, "--out-b", d / (std::string("b_") + name)});
    REQUIRE(r.code == kExitOk);
  }
  CHECK(slurp(d / "x.bta") == slurp(d / "y.bta"));
  CHECK(slurp(d / "b_x.bta") == slurp(d / "b_y.bta"));
  CHECK(read_bta_shape(d / "x.bta") == BtaShape{4, 2, 1});
}

TEST_CASE("generate rejects invalid parameters") {
  TempDir d;
  CHECK(cli({"generate", "--n", "0", "--b", "2", "--out-a", d / "z.bta"}).code == kExitUsage);
  CHECK(cli({"generate", "--n", "3", "--b", "2", "--dominance", "0.5", "--out-a", d / "z.bta"})
            .code == kExitUsage);
  CHECK(cli({"generate", "--preset", "sd-32", "--n", "3", "--out-a", d / "z.bta"}).code ==
        kExitUsage);
  CHECK(cli({"generate", "--preset", "bogus", "--out-a", d / "z.bta"}).code == kExitUsage);
  CHECK(cli({"generate", "--n", "3", "--b", "2"}).code == kExitUsage);
  CHECK(cli({"generate", "--n", "3", "--b", "2", "--out-a", (d / "missing") + "/z.bta"}).code ==
        kExitIo);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("solve writes pattern-shaped results and dist with one part equals rgf") {
  TempDir d;
  REQUIRE(cli({"generate", "--n", "6", "--b", "3", "--a", "2", "--seed", "3", "--hermitian-b",
               "--out-a", d / "a.bta", "--out-b", d / "b.bta"})
              .code == kExitOk);
  const Run r = cli({"solve", "--algo", "rgf", "--mode", "siq", "--a-file", d / "a.bta",
                     "--b-file", d / "b.bta", "--out", d / "rgf.bta", "--counts"});
  REQUIRE(r.code == kExitOk);
  CHECK(read_bta_shape(d / "rgf.bta") == BtaShape{6, 3, 2});
  CHECK(read_bta_shape(d / "rgf_xb.bta") == BtaShape{6, 3, 2});
  CHECK(value_of(r.out, "counts.forward.bbb") == "40");  // 8 (n - 1) for the arrowhead path

  REQUIRE(cli({"solve", "--algo", "dist", "--parts", "1", "--mode", "siq", "--a-file",
               d / "a.bta", "--b-file", d / "b.bta", "--out", d / "d1.bta"})
              .code == kExitOk);
  CHECK(slurp(d / "d1.bta") == slurp(d / "rgf.bta"));
  CHECK(slurp(d / "d1_xb.bta") == slurp(d / "rgf_xb.bta"));

  REQUIRE(cli({"solve", "--algo", "dist", "--parts", "3", "--a-file", d / "a.bta", "--out",
               d / "d3.bta"})
              .code == kExitOk);
  CHECK(cli({"verify", "--candidate", d / "d3.bta", "--reference", "rgf", "--a-file", d / "a.bta",
             "--tol", "1e-9"})
            .code == kExitOk);
  for (const char* algo : {"dense", "batched"}) {
    CHECK(cli({"solve", "--algo", algo, "--a-file", d / "a.bta", "--out", d / "o.bta"}).code ==
          kExitOk);
  }
}

TEST_CASE("solve usage and failure exit codes") {
  TempDir d;
  REQUIRE(cli({"generate", "--n", "4", "--b", "2", "--out-a", d / "a.bta"}).code == kExitOk);
  CHECK(cli({"solve", "--algo", "rgf", "--mode", "siq", "--a-file", d / "a.bta", "--out",
             d / "x.bta"})
            .code == kExitUsage);
  CHECK(cli({"solve", "--algo", "dist", "--a-file", d / "a.bta", "--out", d / "x.bta"}).code ==
        kExitUsage);
  CHECK(cli({"solve", "--algo", "qr", "--a-file", d / "a.bta", "--out", d / "x.bta"}).code ==
        kExitUsage);
  CHECK(cli({"solve", "--algo", "rgf", "--a-file", d / "nope.bta", "--out", d / "x.bta"}).code ==
        kExitIo);
  {
    std::ofstream(d / "junk.bta") << "not a matrix";
  }
  CHECK(cli({"solve", "--algo", "rgf", "--a-file", d / "junk.bta", "--out", d / "x.bta"}).code ==
        kExitIo);

  write_bta(BtaMatrix(BtaShape{4, 2, 1}), fs::path(d / "zero.bta"));
  const Run sing = cli({"solve", "--algo", "rgf", "--a-file", d / "zero.bta", "--out", d / "x.bta"});
  CHECK(sing.code == kExitNumerical);
  CHECK(cli({"solve", "--algo", "dist", "--parts", "2", "--a-file", d / "zero.bta", "--out",
             d / "x.bta"})
            .code == kExitNumerical);

  // N = 4097 exceeds the dense guard; storage stays tiny with b = 1.
  REQUIRE(cli({"generate", "--n", "4097", "--b", "1", "--out-a", d / "big.bta"}).code == kExitOk);
  const Run guard = cli({"solve", "--algo", "dense", "--a-file", d / "big.bta", "--out",
                         d / "x.bta"});
  CHECK(guard.code == kExitUsage);
  CHECK(guard.err.find("4096") != std::string::npos);
}

TEST_CASE("verify reports per-class errors and the worst block") {
  TempDir d;
  REQUIRE(cli({"generate", "--n", "5", "--b", "2", "--a", "1", "--seed", "9", "--out-a",
               d / "a.bta"})
              .code == kExitOk);
  REQUIRE(cli({"solve", "--algo", "rgf", "--a-file", d / "a.bta", "--out", d / "x.bta"}).code ==
          kExitOk);

  const Run same = cli({"verify", "--candidate", d / "x.bta", "--reference", d / "x.bta"});
  CHECK(same.code == kExitOk);
  CHECK(std::stod(value_of(same.out, "worst_error")) == 0.0);
  CHECK(count_lines_starting(same.out, "class=") == 6);

  const Run dense = cli({"verify", "--candidate", d / "x.bta", "--reference", "dense",
                         "--a-file", d / "a.bta", "--tol", "1e-10"});
  CHECK(dense.code == kExitOk);
  CHECK(value_of(dense.out, "result") == "pass");

  BtaMatrix bad = read_bta(fs::path(d / "x.bta"));
  bad.upper[3](1, 0) += complex(0.5, 0.0);
  write_bta(bad, fs::path(d / "bad.bta"));
  const Run fail = cli({"verify", "--candidate", d / "bad.bta", "--reference", d / "x.bta"});
  CHECK(fail.code == kExitVerifyFailed);
  CHECK(value_of(fail.out, "worst_block") == "x_a.upper[3]");
  CHECK(value_of(fail.out, "result") == "fail");

  CHECK(cli({"verify", "--candidate", d / "x.bta", "--reference", "dense"}).code == kExitUsage);
}

TEST_CASE("bench report layout") {
  TempDir d;
  const Run r = cli({"bench", "--algo", "rgf", "--n", "32", "--b", "64", "--repeat", "10",
                     "--report", d / "rep.txt"});
  REQUIRE(r.code == kExitOk);
  CHECK(count_lines_starting(r.out, "phase=") == 4);
  CHECK(r.out.find("ci95_low_s=") != std::string::npos);
  CHECK(r.out.find("ci95_high_s=") != std::string::npos);
  CHECK(value_of(r.out, "repeat") == "10");
  CHECK(value_of(r.out, "counts.forward.bbb") == "62");  // 2 (n - 1)
  CHECK(slurp(d / "rep.txt") == r.out);

  const Run q = cli({"bench", "--algo", "dist", "--parts", "2", "--mode", "siq", "--n", "8",
                     "--b", "3", "--a", "2", "--repeat", "2", "--residual"});
  REQUIRE(q.code == kExitOk);
  CHECK(std::stod(value_of(q.out, "residual.max_block_error")) < 1e-10);
}

TEST_CASE("weak-scaling sweep emits one report per point") {
  TempDir d;
  const Run r = cli({"bench", "--b", "8", "--a", "2", "--weak-scaling", "1,2,4",
                     "--blocks-per-rank", "4", "--repeat", "3", "--report", d / "weak.txt"});
  REQUIRE(r.code == kExitOk);
  CHECK(count_lines_starting(r.out, "solver=dist") == 3);
  CHECK(count_lines_starting(r.out, "efficiency=") == 3);
  for (const char* p : {"1", "2", "4"}) {
    const std::string text = slurp(d / (std::string("weak_p") + p + ".txt"));
    CHECK(value_of(text, "parts") == p);
    CHECK(std::stoul(value_of(text, "n")) == 4 * std::stoul(p));
    const double eta = std::stod(value_of(text, "efficiency"));
    CHECK(eta > 0.0);
    CHECK(eta <= 1.0 + 1e-12);
  }
  CHECK(cli({"bench", "--b", "8", "--weak-scaling", "2", "--blocks-per-rank", "1"}).code ==
        kExitUsage);
}
