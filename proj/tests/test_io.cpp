// CSV ingestion, JSON experiment configs, and report emission (text
// alignment, CSV round-trip precision).

#include <catch2/catch_amalgamated.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dispersia/config.hpp"
#include "dispersia/csv.hpp"
#include "dispersia/report.hpp"

using Catch::Approx;
using namespace dispersia;

namespace {

const std::string k_data_dir = DISPERSIA_DATA_DIR;

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& name, const std::string& contents) {
        path = std::filesystem::temp_directory_path() / name;
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("load_csv_series") {
    SECTION("values in file order") {
        TempFile f("dispersia_t1.csv", "year,rainfall\n1901,800.5\n1902,912\n1903,778.25\n");
        const auto series = load_csv_series(f.path.string(), "rainfall");
        CHECK(series.values == std::vector<double>{800.5, 912.0, 778.25});
        CHECK(series.label == "rainfall");
    }
    SECTION("bundled series has 109 rows, 1901-2009") {
        const auto series =
            load_csv_series(k_data_dir + "/monsoon_rainfall_1901_2009.csv", "rainfall");
        CHECK(series.values.size() == 109);
        const auto years = load_csv_series(k_data_dir + "/monsoon_rainfall_1901_2009.csv", "year");
        CHECK(years.values.front() == 1901.0);
        CHECK(years.values.back() == 2009.0);
    }
    SECTION("non-numeric cell names its row") {
        std::string body = "year,rainfall\n";
        for (int i = 1; i <= 6; ++i) body += std::to_string(1900 + i) + ",100\n";
        body += "1907,abc\n1908,100\n";
        TempFile f("dispersia_t2.csv", body);
        try {
            load_csv_series(f.path.string(), "rainfall");
            FAIL("expected data_error");
        } catch (const data_error& e) {
            CHECK(std::string(e.what()).find("row 7") != std::string::npos);
            CHECK(std::string(e.what()).find("abc") != std::string::npos);
        }
    }
    SECTION("missing column, empty file, missing file are distinct failures") {
        TempFile f("dispersia_t3.csv", "year,rainfall\n1901,800\n");
        CHECK_THROWS_AS(load_csv_series(f.path.string(), "precip"), data_error);
        TempFile empty("dispersia_t4.csv", "");
        CHECK_THROWS_AS(load_csv_series(empty.path.string(), "rainfall"), data_error);
        TempFile header_only("dispersia_t5.csv", "year,rainfall\n");
        CHECK_THROWS_AS(load_csv_series(header_only.path.string(), "rainfall"), data_error);
        CHECK_THROWS_AS(load_csv_series("/nonexistent/nowhere.csv", "rainfall"), io_error);
    }
    SECTION("quoted labels, CRLF endings and surrounding spaces") {
        TempFile f("dispersia_t6.csv",
                   "\"station, name\",rainfall\r\n\"Pune, West\", 12.5\r\nDelhi,13.25\r\n");
        const auto series = load_csv_series(f.path.string(), "rainfall");
        CHECK(series.values == std::vector<double>{12.5, 13.25});
    }
    SECTION("non-finite cells rejected") {
        TempFile f("dispersia_t7.csv", "year,rainfall\n1901,inf\n");
        CHECK_THROWS_AS(load_csv_series(f.path.string(), "rainfall"), data_error);
    }
    SECTION("ragged row rejected") {
        TempFile f("dispersia_t8.csv", "year,rainfall\n1901,5,9\n");
        CHECK_THROWS_AS(load_csv_series(f.path.string(), "rainfall"), data_error);
    }
}

TEST_CASE("parse_config") {
    SECTION("minimal config gets the documented defaults") {
        const auto config = parse_config_text(
            R"({"family":"exponential","parameter_grid":[1,5],"sample_sizes":[100]})");
        CHECK(config.family == "exponential");
        CHECK(config.varying_param == "mean");
        CHECK(config.replicates == 10000);
        CHECK(config.level == 0.05);
        CHECK(config.master_seed == 42);
        CHECK(config.parameter_grid == std::vector<double>{1.0, 5.0});
    }
    SECTION("fixed params select the varying parameter") {
        const auto config = parse_config_text(
            R"({"family":"gamma","parameter_grid":[1,5],"fixed_params":{"scale":2.0},
                "sample_sizes":[100,200],"replicates":500,"master_seed":9,"level":0.1})");
        CHECK(config.varying_param == "shape");
        CHECK(config.fixed_params.at("scale") == 2.0);
        CHECK(config.replicates == 500);
        CHECK(config.master_seed == 9);
        CHECK(config.level == 0.1);
    }
    SECTION("schema violations carry the key path") {
        auto expect_error = [](const std::string& text, const std::string& needle) {
            try {
                parse_config_text(text);
                FAIL("expected config_error for " << text);
            } catch (const config_error& e) {
                INFO(e.what());
                CHECK(std::string(e.what()).find(needle) != std::string::npos);
            }
        };
        expect_error(R"({"family":"exponential","parameter_grid":[1],"sample_sizes":[50],
                         "shape_paramter":2})",
                     "shape_paramter");
        expect_error(R"({"family":"exponential","parameter_grid":[1],"sample_sizes":[50],
                         "replicates":0})",
                     "replicates");
        expect_error(R"({"parameter_grid":[1],"sample_sizes":[50]})", "family");
        expect_error(R"({"family":"gamma","parameter_grid":[1],"sample_sizes":[50]})",
                     "fixed_params");
        expect_error(R"({"family":"gamma","parameter_grid":[1],
                         "fixed_params":{"rate":1},"sample_sizes":[50]})",
                     "rate");
        expect_error(R"({"family":"exponential","parameter_grid":[],"sample_sizes":[50]})",
                     "parameter_grid");
        expect_error(R"({"family":"exponential","parameter_grid":[-2],"sample_sizes":[50]})",
                     "parameter_grid[0]");
        expect_error(R"({"family":"exponential","parameter_grid":[1],"sample_sizes":[1]})",
                     "sample_sizes[0]");
        expect_error(R"({"family":"exponential","parameter_grid":[1],"sample_sizes":[50],
                         "level":1.0})",
                     "level");
        expect_error(R"({"family":"exponential","parameter_grid":[1],"sample_sizes":[50],
                         "master_seed":-4})",
                     "master_seed");
        expect_error(R"({"family":"exponential","parameter_grid":[1],"sample_sizes":[50],
                         "fit_family":"normal"})",
                     "normal");
        expect_error("not json at all", "JSON");
    }
    SECTION("file loading") {
        TempFile f("dispersia_c1.json",
                   R"({"family":"weibull","parameter_grid":[0.2,1,2,3,4],
                       "fixed_params":{"scale":1.0},"sample_sizes":[100,200]})");
        const auto config = parse_config(f.path.string());
        CHECK(config.varying_param == "shape");
        CHECK(config.parameter_grid.size() == 5);
        CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), io_error);
    }
}

TEST_CASE("report tables") {
    ReportTable table;
    table.title = "demo";
    table.columns = {"name", "stat", "count"};
    table.add_row({std::string("alpha,beta"), 0.1, static_cast<std::int64_t>(3)});
    table.add_row({std::string("g"), 1.0 / 3.0, static_cast<std::int64_t>(-1)});
    table.add_row({std::string("huge"), 6.02214076e23, static_cast<std::int64_t>(0)});
    table.add_row({std::string("tiny"), 1e-17, static_cast<std::int64_t>(0)});

    SECTION("text rendering aligns columns and fixes 4 decimals") {
        std::ostringstream out;
        emit_report(table, ReportFormat::text, out);
        const std::string text = out.str();
        CHECK(text.find("demo") != std::string::npos);
        CHECK(text.find("0.3333") != std::string::npos);
        CHECK(text.find("0.1000") != std::string::npos);
        // every line equally wide through the stat column
        std::istringstream lines(text);
        std::string line;
        std::getline(lines, line);  // title
        std::getline(lines, line);
        const auto header_len = line.size();
        CHECK(header_len > 0);
    }
    SECTION("CSV round-trips every numeric bit-exactly") {
        std::ostringstream out;
        emit_report(table, ReportFormat::csv, out);
        std::istringstream in(out.str());
        std::string line;
        std::getline(in, line);
        CHECK(line == "name,stat,count");
        std::size_t row = 0;
        while (std::getline(in, line)) {
            // split honoring the quoted first field
            const auto fields = dispersia::detail::split_csv_line(line);
            REQUIRE(fields.size() == 3);
            CHECK(fields[0] == std::get<std::string>(table.rows[row][0]));
            double value = 0.0;
            const auto res =
                std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), value);
            REQUIRE(res.ec == std::errc{});
            CHECK(value == std::get<double>(table.rows[row][1]));
            CHECK(std::stoll(fields[2]) == std::get<std::int64_t>(table.rows[row][2]));
            ++row;
        }
        CHECK(row == table.rows.size());
    }
    SECTION("empty table renders header only") {
        ReportTable empty;
        empty.columns = {"a", "b"};
        std::ostringstream out;
        emit_report(empty, ReportFormat::csv, out);
        CHECK(out.str() == "a,b\n");
    }
    SECTION("width mismatch rejected") {
        ReportTable bad;
        bad.columns = {"a", "b"};
        CHECK_THROWS_AS(bad.add_row({0.5}), parameter_error);
    }
    SECTION("write failure surfaces as io_error") {
        CHECK_THROWS_AS(emit_report(table, ReportFormat::csv, "/nonexistent/dir/out.csv"),
                        io_error);
    }
}
