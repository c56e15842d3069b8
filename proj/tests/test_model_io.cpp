#include <set>
#include <string>
#include <vector>

#include "doctest.h"

#include "common.hpp"
#include "ortho/errors.hpp"
#include "ortho/model_io.hpp"

using namespace ortho;
using testutil::TempFile;

namespace {

const std::set<std::string> kKeys = {"alpha", "beta.vec", "mat", "x_1"};

}  // namespace

TEST_SUITE("model_io") {

TEST_CASE("key-value files parse comments, blanks and typed values") {
  const TempFile f(
      "# leading comment\n"
      "\n"
      "alpha = 2.5\n"
      "  beta.vec =  1 -2 3e-1  \n"
      "mat = 1 2 ; 3 4\n"
      "x_1 = left right\n");
  const auto kv = io::KeyValueFile::parse(f.path(), kKeys);
  CHECK(kv.has("alpha"));
  CHECK_FALSE(kv.has("gamma"));
  CHECK(kv.real("alpha") == 2.5);
  CHECK(kv.reals("beta.vec") == std::vector<double>{1.0, -2.0, 0.3});
  CHECK(kv.strings("x_1") == std::vector<std::string>{"left", "right"});
  const auto m = kv.real_matrix("mat");
  REQUIRE(m.size() == 2);
  CHECK(m[0] == std::vector<double>{1.0, 2.0});
  CHECK(m[1] == std::vector<double>{3.0, 4.0});
  CHECK(kv.line_of("alpha") == 3);
  CHECK(kv.line_of("mat") == 5);
}

TEST_CASE("parse errors carry file and line context") {
  auto what = [](const auto& fn) -> std::string {
    try {
      fn();
    } catch (const io_error& e) {
      return e.what();
    }
    return "";
  };

  {
    const TempFile f("alpha 2.5\n");
    const std::string msg =
        what([&] { io::KeyValueFile::parse(f.path(), kKeys); });
    CHECK(msg.find(f.path() + ":1:") != std::string::npos);
    CHECK(msg.find("expected 'key = value'") != std::string::npos);
  }
  {
    const TempFile f("\n\nal pha = 1\n");
    const std::string msg =
        what([&] { io::KeyValueFile::parse(f.path(), kKeys); });
    CHECK(msg.find(":3:") != std::string::npos);
    CHECK(msg.find("invalid key") != std::string::npos);
  }
  {
    const TempFile f("gamma = 1\n");
    CHECK(what([&] { io::KeyValueFile::parse(f.path(), kKeys); })
              .find("unknown key 'gamma'") != std::string::npos);
  }
  {
    const TempFile f("alpha = 1\nalpha = 2\n");
    const std::string msg =
        what([&] { io::KeyValueFile::parse(f.path(), kKeys); });
    CHECK(msg.find(":2:") != std::string::npos);
    CHECK(msg.find("duplicate key") != std::string::npos);
  }
  {
    const TempFile f("alpha =\n");
    CHECK(what([&] { io::KeyValueFile::parse(f.path(), kKeys); })
              .find("has no value") != std::string::npos);
  }
  {
    const TempFile f("alpha = 1 xyz\n");
    const auto kv = io::KeyValueFile::parse(f.path(), kKeys);
    const std::string msg = what([&] { kv.reals("alpha"); });
    CHECK(msg.find(":1:") != std::string::npos);
    CHECK(msg.find("invalid number 'xyz'") != std::string::npos);
    CHECK(what([&] { kv.real("alpha"); })
              .find("invalid number") != std::string::npos);
  }
  {
    const TempFile f("alpha = 1 2\n");
    const auto kv = io::KeyValueFile::parse(f.path(), kKeys);
    CHECK(what([&] { kv.real("alpha"); })
              .find("expects a single number") != std::string::npos);
  }
  {
    const TempFile f("mat = 1 2 ; ; 3 4\n");
    const auto kv = io::KeyValueFile::parse(f.path(), kKeys);
    CHECK(what([&] { kv.real_matrix("mat"); })
              .find("empty matrix row") != std::string::npos);
  }
  {
    const TempFile f("alpha = 1\n");
    const auto kv = io::KeyValueFile::parse(f.path(), kKeys);
    CHECK(what([&] { kv.require("mat"); })
              .find("missing required key 'mat'") != std::string::npos);
  }
  CHECK_THROWS_WITH_AS(io::KeyValueFile::parse("no_such_file.txt", kKeys),
                       doctest::Contains("cannot open"), io_error);
}

TEST_CASE("model files load the space and base distribution") {
  const TempFile f(
      "# two-point model\n"
      "space.atoms = z0 z1\n"
      "p0 = 0.7 0.3\n");
  const io::ParsedModel pm = io::load_model(f.path());
  CHECK(pm.space->atoms() == std::vector<std::string>{"z0", "z1"});
  CHECK(pm.space->nu() == std::vector<double>{1.0, 1.0});
  CHECK(pm.p0.p() == std::vector<double>{0.7, 0.3});

  const TempFile g(
      "space.atoms = a b\n"
      "space.nu = 2 1\n"
      "p0 = 0.25 0.5\n");
  const io::ParsedModel pw = io::load_model(g.path());
  CHECK(pw.space->nu() == std::vector<double>{2.0, 1.0});
  CHECK(pw.p0.mass(0) == 0.5);
}

TEST_CASE("model files reject malformed content with located errors") {
  auto expect_error = [](const std::string& contents, const std::string& needle) {
    const TempFile f(contents);
    bool threw = false;
    try {
      io::load_model(f.path());
    } catch (const io_error& e) {
      threw = true;
      const std::string msg = e.what();
      CHECK_MESSAGE(msg.find(needle) != std::string::npos, "message: ", msg);
    }
    CHECK(threw);
  };

  expect_error("space.atoms = a b\nspace.nu = 1\np0 = 0.5 0.5\n",
               "space.nu has 1 entries, expected 2");
  expect_error("space.atoms = a b\nspace.nu = 1 -1\np0 = 0.5 0.5\n",
               "strictly positive");
  expect_error("space.atoms = a b\np0 = 0.5\n", "p0 has 1 entries, expected 2");
  expect_error("space.atoms = a b\np0 = 1.5 -0.5\n", "non-negative");
  expect_error("space.atoms = a b\np0 = 0.7 0.2\n", "deviates from 1");
  expect_error("space.atoms = a a\np0 = 0.5 0.5\n", "duplicate atom name");
  expect_error("space.atoms = a\np0 = 1\n", "at least two atoms");
}

TEST_CASE("function files load one value per atom") {
  const io::ParsedModel pm = [&] {
    const TempFile f("space.atoms = z0 z1\np0 = 0.5 0.5\n");
    return io::load_model(f.path());
  }();
  const TempFile good("values = 1.5 -2.5\n");
  const RealFunction fn = io::load_function(good.path(), pm.space);
  CHECK(fn.values() == std::vector<double>{1.5, -2.5});

  const TempFile bad("values = 1.5\n");
  CHECK_THROWS_WITH_AS(io::load_function(bad.path(), pm.space),
                       doctest::Contains("values has 1 entries, expected 2"),
                       io_error);
}

TEST_CASE("digests are deterministic and sensitive to content and order") {
  const TempFile a("alpha = 1\n");
  const TempFile b("alpha = 2\n");
  const std::string d1 = io::digest_files({a.path(), b.path()});
  const std::string d2 = io::digest_files({a.path(), b.path()});
  CHECK(d1 == d2);
  CHECK(d1.size() == 16);
  CHECK(d1.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(d1 != io::digest_files({b.path(), a.path()}));
  CHECK(d1 != io::digest_files({a.path(), a.path()}));
  CHECK_THROWS_WITH_AS(io::digest_files({"no_such_file.txt"}),
                       doctest::Contains("cannot open"), io_error);
}

}  // TEST_SUITE
