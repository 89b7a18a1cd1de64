#include <doctest.h>

#include <cmath>

#include "gpv/analysis.hpp"
#include "gpv/report.hpp"
#include "gpv/rng.hpp"
#include "oracles.hpp"

using namespace gpv;
using namespace gpv::report;

namespace {

std::vector<ValueVector> batch(std::size_t subjects, std::size_t values, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ValueVector> out;
    for (std::size_t s = 0; s < subjects; ++s) {
        ValueVector v("subj<" + std::to_string(s) + ">", "sys", Tool::gpv);
        for (std::size_t k = 0; k < values; ++k) v.set("V&" + std::to_string(k), rng.uniform(-1, 1));
        out.push_back(v);
    }
    return out;
}

}  // namespace

TEST_CASE("escaping covers markup characters and strips control bytes") {
    CHECK(xml_escape("a<b>&\"c'") == "a&lt;b&gt;&amp;&quot;c&apos;");
    CHECK(xml_escape(std::string("x\x01y\n", 4)) == "x y\n");
    CHECK(oracle::check_xml("<t>" + xml_escape("<&>\"'\x02") + "</t>").ok);
}

TEST_CASE("diverging colours run blue to white to red") {
    CHECK(diverging_color(-1.0) == "#0000ff");
    CHECK(diverging_color(0.0) == "#ffffff");
    CHECK(diverging_color(1.0) == "#ff0000");
    CHECK(diverging_color(7.0) == "#ff0000");
    CHECK(diverging_color(std::nullopt) == "#cccccc");
}

TEST_CASE("heatmap has one cell per matrix entry") {
    const auto vs = batch(8, 10, 1);
    for (const auto& m : {analysis::pearson_matrix(vs), analysis::cosine_matrix(vs)}) {
        const auto x = oracle::check_xml(heatmap_svg(m, "Values & <friends>"));
        REQUIRE_MESSAGE(x.ok, x.error);
        CHECK(oracle::count_class(x, "rect", "cell") == 100);
        CHECK(x.elements.front() == "svg");
    }
}

TEST_CASE("scatter has one point per label and survives odd labels") {
    const auto vs = batch(8, 10, 2);
    const auto d = analysis::to_distance(analysis::cosine_matrix(vs));
    const auto e = analysis::classical_mds(d);
    const auto x = oracle::check_xml(scatter_svg(e, "MDS"));
    REQUIRE_MESSAGE(x.ok, x.error);
    CHECK(oracle::count_class(x, "circle", "point") == 10);

    analysis::Embedding same;
    same.labels = {"a", "b"};
    same.coords = {{1, 1}, {1, 1}};  // zero extent must not divide by zero
    const auto svg = scatter_svg(same, "t");
    CHECK(svg.find("nan") == std::string::npos);
    CHECK(oracle::count_class(oracle::check_xml(svg), "circle", "point") == 2);
}

TEST_CASE("radar has one series per vector") {
    auto vs = batch(3, 6, 3);
    vs[1].set("V&2", std::nullopt);
    const auto x = oracle::check_xml(radar_svg(vs, "Profiles"));
    REQUIRE_MESSAGE(x.ok, x.error);
    CHECK(oracle::count_class(x, "polygon", "series") == 3);

    ValueVector d("dict", "sys", Tool::dictionary);
    d.set("A", 0.0);
    d.set("B", 0.0);
    const auto dx = radar_svg(std::vector<ValueVector>{d}, "flat");
    CHECK(dx.find("nan") == std::string::npos);
    CHECK(oracle::check_xml(dx).ok);

    CHECK_THROWS_AS(radar_svg(std::vector<ValueVector>{}, "none"), ValidationError);
}
