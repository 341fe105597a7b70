#include "civicrank/date.hpp"
#include "civicrank/error.hpp"
#include "civicrank/tables.hpp"
#include "civicrank/text.hpp"

#include <doctest.h>

#include <sstream>

using namespace civicrank;

TEST_SUITE("text") {
    TEST_CASE("whitespace helpers") {
        CHECK(trim("  a b \t") == "a b");
        CHECK(collapse_whitespace("  Budget   passes \n") == "Budget passes");
        CHECK(to_lower_ascii("AbC") == "abc");
        CHECK(iequals("Perth", "pERTH"));
        CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
    }

    TEST_CASE("tokenize strips edge punctuation and folds curly quotes") {
        CHECK(tokenize("You Won’t Believe!") == std::vector<std::string>{"You", "Won't", "Believe"});
        CHECK(tokenize("\"Quoted,\" -- fine.") == std::vector<std::string>{"Quoted", "fine"});
        CHECK(tokenize("   ").empty());
    }

    TEST_CASE("fixture keys are filename safe") {
        CHECK(fixture_key("Barack Obama") == "Barack_Obama");
        CHECK(fixture_key("AC/DC") == "AC%2FDC");
        CHECK(percent_encode("a b&c") == "a%20b%26c");
    }

    TEST_CASE("stable hash is FNV-1a") {
        CHECK(stable_hash64("") == 0xcbf29ce484222325ULL);
        CHECK(hex64(stable_hash64("a")) == "af63dc4c8601ec8c");
    }

    TEST_CASE("format_double round-trips") {
        for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -0.0}) {
            CHECK(std::stod(format_double(v)) == v);
        }
    }
}

TEST_SUITE("date") {
    TEST_CASE("parse accepted forms") {
        CHECK(parse_date("2025-07-03")->iso() == "2025-07-03");
        CHECK(parse_date("3 July 2025")->iso() == "2025-07-03");
        CHECK(parse_date("03 Jul 2025")->iso() == "2025-07-03");
        CHECK(parse_date("2025-07-03T12:00:00Z")->iso() == "2025-07-03");
        // 08:15 at +10:00 is the previous day in UTC
        CHECK(parse_date("2025-07-03T08:15:00+10:00")->iso() == "2025-07-02");
        CHECK_FALSE(parse_date("2025-13-01"));
        CHECK_FALSE(parse_date("not a date"));
        CHECK_FALSE(parse_date("2025-02-30"));
    }

    TEST_CASE("arithmetic") {
        const Date d(2024, 2, 28);
        CHECK(d.plus_days(1).iso() == "2024-02-29");
        CHECK(d.plus_days(2).iso() == "2024-03-01");
        CHECK(d.days_until(Date(2024, 3, 1)) == 2);
        CHECK(d.compact() == "20240228");
    }

    TEST_CASE("timestamps") {
        const auto t = parse_timestamp("2025-01-01T00:00:05Z");
        REQUIRE(t);
        CHECK(format_timestamp(*t) == "2025-01-01T00:00:05Z");
        CHECK(format_timestamp(*parse_timestamp("2025-01-01T00:00:05.250Z")) == "2025-01-01T00:00:05.250Z");
        CHECK(parse_timestamp("2025-01-01") < parse_timestamp("2025-01-01T00:00:01Z"));
        CHECK_FALSE(parse_timestamp("yesterday"));
    }
}

TEST_SUITE("tables") {
    TEST_CASE("csv round-trip with quoting") {
        std::ostringstream out;
        write_csv_row(out, {"a", "b,c", "say \"hi\"", "multi\nline"});
        std::istringstream in(out.str());
        const auto rows = read_csv(in);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "say \"hi\"", "multi\nline"});
    }

    TEST_CASE("errors") {
        CHECK_THROWS_AS(column_index({"a"}, "b"), Error);
        CHECK_THROWS_AS(parse_double("1.5x"), Error);
        CHECK(parse_double("0.25") == 0.25);
    }
}
