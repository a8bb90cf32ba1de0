#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "ewhbench/csv.hpp"
#include "ewhbench/parallel.hpp"

using namespace ewhbench;

TEST_CASE("format_double round-trips exactly") {
    const std::vector<double> values = {0.0,      -0.0,    1.0,           0.1,
                                        -4.5,     1e-300,  1234.56789012, 1.0 / 3.0,
                                        3412.14,  8.34,    -1e308};
    for (double v : values) {
        const double back = parse_double(format_double(v));
        REQUIRE(std::memcmp(&back, &v, sizeof v) == 0);
    }
}

TEST_CASE("parse_double rejects garbage") {
    REQUIRE_THROWS_AS(parse_double("abc"), std::runtime_error);
    REQUIRE_THROWS_AS(parse_double("1.5x"), std::runtime_error);
    REQUIRE_THROWS_AS(parse_double(""), std::runtime_error);
    REQUIRE_THROWS_AS(parse_int("1.5"), std::runtime_error);
}

TEST_CASE("read_csv parses header and rows, rejects empty files") {
    namespace fs = std::filesystem;
    fs::create_directories("test_tmp");
    write_text_file("test_tmp/ok.csv", "a,b\r\n1,2\n3,4\n\n");
    const CsvTable t = read_csv("test_tmp/ok.csv");
    REQUIRE(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    REQUIRE(t.rows[1] == std::vector<std::string>{"3", "4"});

    write_text_file("test_tmp/empty.csv", "");
    REQUIRE_THROWS_AS(read_csv("test_tmp/empty.csv"), std::runtime_error);
    REQUIRE_THROWS_AS(read_csv("test_tmp/missing_file.csv"), std::runtime_error);
}

TEST_CASE("parallel_for fills every slot once regardless of thread count") {
    const std::size_t n = 1000;
    for (unsigned threads : {1u, 2u, 8u}) {
        std::vector<int> hits(n, 0);
        parallel_for(n, [&](std::size_t i) { hits[i] += 1; }, threads);
        for (std::size_t i = 0; i < n; ++i) REQUIRE(hits[i] == 1);
    }
}

TEST_CASE("parallel_for propagates worker exceptions") {
    REQUIRE_THROWS_AS(parallel_for(64,
                                   [](std::size_t i) {
                                       if (i == 13) throw std::runtime_error("boom");
                                   },
                                   4),
                      std::runtime_error);
}
