#include "doctest.h"

#include <sstream>

#include "support.hpp"
#include "vpdeq/io.hpp"

using namespace vpdeq;

TEST_SUITE("io") {

TEST_CASE("number formatting round-trips") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5e-300) == "-2.5e-300");
    for (double x : {0.1, 1.0 / 3.0, 2.474873734152916, -1e-17, 6.02e23}) CHECK(parse_double(format_double(x)) == x);
    CHECK(parse_double(" 3.5 ") == 3.5);
    CHECK(parse_double("+2") == 2.0);
    CHECK_THROWS_AS(parse_double("1.0x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_double(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_double("1,5"), std::invalid_argument);
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("profile csv round trip") {
    const auto p = bernoulli_profile(5, 7, 0.5, 3);
    std::stringstream ss;
    write_profile_csv(p, ss);
    const std::string text = ss.str();
    CHECK(text.rfind("rows,cols,mode\n5,7,rectangular\n", 0) == 0);
    const auto back = read_profile_csv(ss);
    CHECK(back.entries() == p.entries());
    CHECK(back.mode() == p.mode());

    const auto h = doubly_stochastic_profile(6, 2, 1, ProfileMode::hermitian);
    std::stringstream hs;
    write_profile_csv(h, hs);
    CHECK(read_profile_csv(hs).is_hermitian());

    std::istringstream bad1("rows,cols\n1,1\n1\n");
    CHECK_THROWS_AS(read_profile_csv(bad1), std::invalid_argument);
    std::istringstream bad2("rows,cols,mode\n2,2,rectangular\n1,2\n3\n");
    CHECK_THROWS_AS(read_profile_csv(bad2), std::invalid_argument);
    std::istringstream bad3("rows,cols,mode\n1,1,rectangular\n-1\n");
    CHECK_THROWS_AS(read_profile_csv(bad3), std::invalid_argument);
}

TEST_CASE("profile json round trip") {
    const auto p = piecewise_profile(4, 8, 0.5, 2.0);
    const auto j = profile_to_json(p);
    CHECK(j.at("rows") == 4);
    CHECK(j.at("cols") == 8);
    CHECK(j.at("mode") == "rectangular");
    CHECK(j.at("entries").size() == 32);
    CHECK(j.at("entries")[1] == 0.5);
    CHECK(j.at("entries")[2] == 2.0);
    CHECK(profile_from_json(nlohmann::json::parse(j.dump())).entries() == p.entries());
    auto broken = j;
    broken["rows"] = 5;
    CHECK_THROWS_AS(profile_from_json(broken), std::invalid_argument);
}

TEST_CASE("outlier report json") {
    OutlierReport r;
    r.threshold = 1e-3;
    r.search_window = {1.5, 4.0};
    r.candidates = {{1.9, 0.2, false}, {2.47, 1e-6, true}};
    const auto j = outlier_report_to_json(r);
    CHECK(j.at("threshold") == 1e-3);
    CHECK(j.at("window")[1] == 4.0);
    CHECK(j.at("candidates")[1].at("accepted") == true);
    const auto back = outlier_report_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.candidates.size() == 2);
    CHECK(back.candidates[1].lambda == 2.47);
    CHECK(back.search_window.lo == 1.5);
}

TEST_CASE("density csv and metadata") {
    DensityCurve c;
    c.grid = {0.0, 0.5};
    c.values = {0.25, 1.0 / 3.0};
    c.eta = 0.01;
    c.converged = {true, false};
    std::ostringstream out;
    write_density_csv(c, out);
    CHECK(out.str() == "t,density\n0,0.25\n0.5,0.33333333333333331\n");
    const auto meta = density_metadata(c, 1e-12, "abc");
    CHECK(meta.at("eta") == 0.01);
    CHECK(meta.at("converged")[1] == false);
    CHECK(meta.at("all_converged") == false);
    CHECK(meta.at("config_hash") == "abc");
}

TEST_CASE("matrix csv and values") {
    const auto dir = oracle::scratch_dir("io");
    write_file(dir / "m.csv", "1,2,3\n4,5,6\n");
    const auto m = read_matrix_csv(dir / "m.csv");
    CHECK(m.rows() == 2);
    CHECK(m(1, 2) == 6.0);
    write_file(dir / "ragged.csv", "1,2\n3\n");
    CHECK_THROWS_AS(read_matrix_csv(dir / "ragged.csv"), std::invalid_argument);
    CHECK_THROWS(read_matrix_csv(dir / "missing.csv"));

    std::ostringstream v;
    write_values_csv(Eigen::Vector3d(1.0, -0.5, 2.0), v);
    CHECK(v.str() == "1\n-0.5\n2\n");

    write_file(dir / "nested" / "deeper" / "x.txt", "ok");
    CHECK(std::filesystem::exists(dir / "nested" / "deeper" / "x.txt"));
    std::filesystem::remove_all(dir);
}

}
