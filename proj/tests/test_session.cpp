#include "vgonio/error.hpp"
#include "vgonio/goniometer.hpp"
#include "vgonio/session.hpp"
#include "vgonio/synthetic.hpp"

#include <catch_amalgamated.hpp>

#include <random>
#include <set>
#include <sstream>
#include <thread>

using namespace vgonio;
using Catch::Matchers::WithinAbs;

namespace {

const Timestamp kFixed = parse_timestamp("2024-03-01T12:00:00Z");

struct Fixture {
    SyntheticShape shape;
    MeshContext ctx;

    Fixture()
    {
        WedgeSpec spec;
        spec.angle_deg = 95.0;
        spec.vertices_per_side = 1000;
        spec.noise_sigma = 0.002;
        shape = make_wedge(spec);
        ctx = MeshContext::build(shape.mesh);
    }

    MeasurementResult at(double x, double radius = 0.3) const
    {
        MeasurementRequest q;
        q.point = Vec3{x, 0.0, 0.0};
        q.params = {2.0, DistanceMetric::Geodesic, radius};
        return measure_at(ctx, q);
    }
};

const Fixture& fixture()
{
    static const Fixture f;
    return f;
}

ErrorCode code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidParams;
}

} // namespace

TEST_CASE("timestamps")
{
    CHECK(format_timestamp(kFixed) == "2024-03-01T12:00:00Z");
    CHECK(format_timestamp(parse_timestamp("1999-12-31T23:59:59Z")) == "1999-12-31T23:59:59Z");
    CHECK(code_of([] { parse_timestamp("yesterday"); }) == ErrorCode::ParseError);
}

TEST_CASE("record ids and palette indices")
{
    Session s("wedge95", [] { return kFixed; });
    const auto r1 = s.record(fixture().at(0.0), MeasurementMethod::Xyz);
    const auto r2 = s.record(fixture().at(0.0, 0.25), MeasurementMethod::Xyz);
    const auto r3 = s.record(fixture().at(0.4), MeasurementMethod::Drag);
    const auto r4 = s.record(fixture().at(0.0), MeasurementMethod::Manual);
    CHECK(r1.id == 1);
    CHECK(r2.id == 2);
    CHECK(r3.id == 3);
    CHECK(r4.id == 4);
    CHECK(r1.palette == 0);
    CHECK(r2.palette == 0);
    CHECK(r3.palette == 1);
    CHECK(r4.palette == 2);
    CHECK(r1.mesh == "wedge95");
    CHECK(r1.timestamp == kFixed);
    CHECK(r2.radius == 0.25);
    CHECK(r1.n == r1.n_plus + r1.n_minus);
    CHECK(s.size() == 4);
    CHECK(s.palette_for(fixture().at(0.4).patch.seed) == 3);
}

TEST_CASE("closed sessions reject new records")
{
    Session s("m");
    s.record(fixture().at(0.0), MeasurementMethod::Xyz);
    s.close();
    CHECK_FALSE(s.is_open());
    CHECK(code_of([&] { s.record(fixture().at(0.0), MeasurementMethod::Xyz); }) == ErrorCode::SessionClosed);
    CHECK(s.size() == 1);
}

TEST_CASE("concurrent commits get gap-free ids")
{
    Session s("m", [] { return kFixed; });
    const MeasurementResult r = fixture().at(0.0);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 25; ++i) s.record(r, MeasurementMethod::Xyz);
        });
    }
    for (auto& t : threads) t.join();
    const auto recs = s.records();
    REQUIRE(recs.size() == 100);
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(recs[i].id == i + 1);
}

TEST_CASE("CSV export")
{
    SECTION("empty session is header only")
    {
        CHECK(export_csv({}) == std::string(kCsvHeader) + "\n");
    }
    SECTION("one record round trips")
    {
        Session s("wedge95", [] { return kFixed; });
        s.record(fixture().at(0.1), MeasurementMethod::Xyz);
        const std::string csv = export_csv(s.records());
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
        std::istringstream in(csv);
        const auto back = parse_measurement_csv(in);
        REQUIRE(back.size() == 1);
        const auto recs = s.records();
        const auto& a = recs[0];
        const auto& b = back[0];
        CHECK(b.id == a.id);
        CHECK(b.mesh == a.mesh);
        CHECK(b.method == a.method);
        CHECK(b.metric == a.metric);
        CHECK(b.n == a.n);
        CHECK(b.palette == a.palette);
        CHECK(b.timestamp == a.timestamp);
        CHECK_THAT(b.theta_deg, WithinAbs(a.theta_deg, 5e-5));
        CHECK_THAT(b.radius, WithinAbs(a.radius, 1e-6 * a.radius));
        CHECK(format_csv_row(b) == format_csv_row(a));
    }
    SECTION("palette column for three records at two locations")
    {
        Session s("wedge95", [] { return kFixed; });
        s.record(fixture().at(0.0), MeasurementMethod::Xyz);
        s.record(fixture().at(0.0), MeasurementMethod::Xyz);
        s.record(fixture().at(0.4), MeasurementMethod::Xyz);
        std::istringstream in(export_csv(s.records()));
        const auto back = parse_measurement_csv(in);
        std::vector<std::size_t> palettes;
        for (const auto& r : back) palettes.push_back(r.palette);
        CHECK(palettes == std::vector<std::size_t>{0, 0, 1});
    }
    SECTION("export is byte-stable")
    {
        auto run = [] {
            Session s("wedge95", [] { return kFixed; });
            s.record(fixture().at(0.0), MeasurementMethod::Xyz);
            s.record(fixture().at(-0.3), MeasurementMethod::Drag);
            return export_csv(s.records());
        };
        CHECK(run() == run());
    }
    SECTION("malformed CSV")
    {
        std::istringstream bad("id,mesh\n1,x\n");
        CHECK(code_of([&] { parse_measurement_csv(bad); }) == ErrorCode::ParseError);
    }
}

TEST_CASE("painting a measurement")
{
    const MeasurementResult r = fixture().at(0.0);
    std::vector<Rgb> colors = base_colors(fixture().ctx.mesh);
    paint(colors, r, 0);
    std::set<std::uint32_t> members(r.patch.indices.begin(), r.patch.indices.end());
    const ColorPair& pair = palette()[0];
    for (std::size_t i = 0; i < colors.size(); ++i) {
        if (!members.contains(static_cast<std::uint32_t>(i))) CHECK(colors[i] == Rgb{255, 255, 255});
    }
    for (std::size_t k = 0; k < r.patch.size(); ++k) {
        CHECK(colors[r.patch.indices[k]] == (r.labels[k] == Side::Minus ? pair.first : pair.second));
    }
    CHECK(palette().size() == kPaletteSize);
    for (const ColorPair& p : palette()) CHECK_FALSE(p.first == p.second);
}

TEST_CASE("iov fixtures and properties")
{
    CHECK(iov(90, 90, 90) == 0.0);
    CHECK_THAT(iov(10, 12, 14), WithinAbs(8.0 / 3.0, 1e-12));
    CHECK(iov(80, 110, 95) == 20.0);
    CHECK(code_of([] { iov(-1, 2, 3); }) == ErrorCode::OutOfRange);
    CHECK(code_of([] { iov(1, 2, 180.5); }) == ErrorCode::OutOfRange);
    CHECK(code_of([] { iov(1, std::nan(""), 3); }) == ErrorCode::OutOfRange);

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 150.0), shift(0.0, 30.0);
    for (int i = 0; i < 500; ++i) {
        const double a = u(rng), b = u(rng), c = u(rng), d = shift(rng);
        const double v = iov(a, b, c);
        CHECK(v >= 0.0);
        CHECK(iov(a, a, a) == 0.0);
        CHECK_THAT(iov(b, c, a), WithinAbs(v, 1e-12));
        CHECK_THAT(iov(c, a, b), WithinAbs(v, 1e-12));
        CHECK_THAT(iov(b, a, c), WithinAbs(v, 1e-12));
        CHECK_THAT(iov(a + d, b + d, c + d), WithinAbs(v, 1e-9));
    }
}

TEST_CASE("iov summaries")
{
    SECTION("singleton")
    {
        const std::vector<IovRecord> one{make_iov_record("b1", MeasurementMethod::Manual, 10, 17.5, 10)};
        REQUIRE(one[0].value == 5.0);
        const IovSummary s = summarize_iov(one);
        CHECK(s.count == 1);
        CHECK(s.min == 5.0);
        CHECK(s.mean == 5.0);
        CHECK(s.median == 5.0);
        CHECK(s.max == 5.0);
        CHECK(s.sd == 0.0);
        CHECK_FALSE(s.sd_defined);
    }
    SECTION("{0, 2, 4}")
    {
        const std::vector<IovRecord> recs{make_iov_record("a", MeasurementMethod::Xyz, 50, 50, 50),
                                          make_iov_record("b", MeasurementMethod::Xyz, 50, 51.5, 53),
                                          make_iov_record("c", MeasurementMethod::Xyz, 50, 53, 56)};
        const IovSummary s = summarize_iov(recs);
        CHECK(s.mean == 2.0);
        CHECK(s.median == 2.0);
        CHECK(s.sd == 2.0);
        CHECK(s.min == 0.0);
        CHECK(s.max == 4.0);
    }
    SECTION("filter by method")
    {
        const std::vector<IovRecord> recs{make_iov_record("a", MeasurementMethod::Xyz, 50, 50, 50),
                                          make_iov_record("b", MeasurementMethod::Manual, 80, 110, 95),
                                          make_iov_record("c", MeasurementMethod::Xyz, 10, 12, 14)};
        const IovSummary s = summarize_iov(recs, MeasurementMethod::Xyz);
        CHECK(s.count == 2);
        CHECK(s.max < 3.0);
        CHECK(summarize_iov(recs).count == 3);
        CHECK(code_of([&] { summarize_iov(recs, MeasurementMethod::Drag); }) == ErrorCode::EmptySet);
        CHECK(code_of([] { summarize_iov({}); }) == ErrorCode::EmptySet);
    }
    SECTION("even count median")
    {
        const std::vector<IovRecord> recs{make_iov_record("a", MeasurementMethod::Xyz, 50, 50, 50),
                                          make_iov_record("b", MeasurementMethod::Xyz, 50, 53, 56)};
        CHECK(summarize_iov(recs).median == 2.0);
    }
}

TEST_CASE("method names")
{
    CHECK(parse_method("man") == MeasurementMethod::Manual);
    CHECK(parse_method("drag") == MeasurementMethod::Drag);
    CHECK(parse_method("xyz") == MeasurementMethod::Xyz);
    CHECK(to_string(MeasurementMethod::Manual) == "man");
    CHECK_THROWS_AS(parse_method("click"), Error);
}
