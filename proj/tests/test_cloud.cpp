#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "perc/cloud_io.hpp"
#include "perc/generators.hpp"
#include "oracles.hpp"

using namespace perc;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("perc_test_" + name);
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

} // namespace

TEST_CASE("csv parsing of a 1-D cloud") {
    auto p = temp_file("three.csv");
    write_text(p, "0\n1\n3\n");
    PointCloud c = load_cloud(p, CloudFormat::csv);
    REQUIRE(c.size() == 3);
    REQUIRE(c.dim() == 1);
    CHECK(c.points(0, 0) == 0.0);
    CHECK(c.points(1, 0) == 1.0);
    CHECK(c.points(2, 0) == 3.0);
    fs::remove(p);
}

TEST_CASE("csv arity error reports the row") {
    auto p = temp_file("ragged.csv");
    write_text(p, "1,2\n3\n");
    REQUIRE_THROWS_MATCHES(load_cloud(p, CloudFormat::csv), data_error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("row 2")));
    fs::remove(p);
}

TEST_CASE("csv rejects non-numeric fields and empty files") {
    auto p = temp_file("bad.csv");
    write_text(p, "1,2\n3,x\n");
    REQUIRE_THROWS_AS(load_cloud(p, CloudFormat::csv), data_error);
    write_text(p, "");
    REQUIRE_THROWS_AS(load_cloud(p, CloudFormat::csv), data_error);
    write_text(p, "# only a comment\n");
    REQUIRE_THROWS_AS(load_cloud(p, CloudFormat::csv), data_error);
    fs::remove(p);
}

TEST_CASE("csv skips '#' header lines") {
    auto p = temp_file("header.csv");
    write_text(p, "# x,y\n0.5,1.5\n");
    PointCloud c = load_cloud(p, CloudFormat::csv);
    REQUIRE(c.size() == 1);
    REQUIRE(c.dim() == 2);
    fs::remove(p);
}

TEST_CASE("validation rejects non-finite coordinates") {
    auto p = temp_file("nan.csv");
    write_text(p, "1,2\nnan,4\n");
    REQUIRE_THROWS_MATCHES(load_cloud(p, CloudFormat::csv), data_error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("non-finite")));
    write_text(p, "1,inf\n");
    REQUIRE_THROWS_AS(load_cloud(p, CloudFormat::csv), data_error);
    fs::remove(p);

    PointCloud c;
    c.points = Matrix(1, 1);
    c.points(0, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(validate_cloud(c), data_error);
}

TEST_CASE("binary round-trip is bit-exact for random clouds") {
    std::mt19937_64 eng(11);
    auto p = temp_file("rt.pgc");
    for (int rep = 0; rep < 25; ++rep) {
        std::uniform_int_distribution<std::size_t> nn(1, 40), dd(1, 6);
        PointCloud c = oracle::random_cloud(eng, nn(eng), dd(eng), -1e12, 1e12);
        c.label = "rt" + std::to_string(rep);
        c.seed = eng();
        c.meta["kind"] = "random";
        save_cloud(c, p, CloudFormat::binary);
        PointCloud back = load_cloud(p, CloudFormat::binary);
        REQUIRE(back.points == c.points);
        CHECK(back.label == c.label);
        CHECK(back.seed == c.seed);
        CHECK(back.meta == c.meta);
    }
    fs::remove(p);
}

TEST_CASE("csv round-trip preserves exact values") {
    std::mt19937_64 eng(13);
    auto p = temp_file("rt.csv");
    for (int rep = 0; rep < 10; ++rep) {
        PointCloud c = oracle::random_cloud(eng, 17, 3, -1e3, 1e3);
        save_cloud(c, p, CloudFormat::csv);
        PointCloud back = load_cloud(p, CloudFormat::csv);
        REQUIRE(back.points == c.points); // shortest round-trip formatting
    }
    fs::remove(p);
}

TEST_CASE("seeded sphere cloud survives a save/load cycle unchanged") {
    PointCloud c = generate(GeneratorSpec::hypersphere(2, 100, 7));
    auto p = temp_file("s2.pgc");
    save_cloud(c, p, CloudFormat::binary);
    PointCloud back = load_cloud(p);
    REQUIRE(back.points == c.points);
    CHECK(back.meta.at("kind") == "hypersphere");
    fs::remove(p);
}

TEST_CASE("csv of 3 collinear points is 3 lines, 1 column") {
    PointCloud c;
    c.points = Matrix::from_rows({{0.0}, {1.0}, {3.0}});
    auto p = temp_file("line.csv");
    save_cloud(c, p, CloudFormat::csv);
    std::ifstream f(p);
    std::string line;
    int lines = 0;
    while (std::getline(f, line)) {
        ++lines;
        CHECK(line.find(',') == std::string::npos);
    }
    CHECK(lines == 3);
    fs::remove(p);
}

TEST_CASE("saving to an unwritable path raises io_error") {
    PointCloud c;
    c.points = Matrix(1, 1, 0.5);
    REQUIRE_THROWS_AS(save_cloud(c, "/proc/definitely/not/writable.pgc", CloudFormat::binary),
                      io_error);
    REQUIRE_THROWS_AS(load_cloud("/no/such/file.pgc", CloudFormat::binary), io_error);
}

TEST_CASE("binary loader rejects foreign and truncated files") {
    auto p = temp_file("junk.pgc");
    write_text(p, "not a cloud at all");
    REQUIRE_THROWS_AS(load_cloud(p, CloudFormat::binary), data_error);
    fs::remove(p);
}

TEST_CASE("cloud pair dimension mismatch is rejected") {
    CloudPair pair;
    pair.real.points = Matrix(3, 2, 1.0);
    pair.model.points = Matrix(3, 3, 1.0);
    REQUIRE_THROWS_AS(validate_pair(pair), data_error);
}
