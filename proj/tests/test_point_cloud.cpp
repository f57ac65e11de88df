#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "localkernels/point_cloud.hpp"

using namespace localkernels;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("csv round trip is bit-exact") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    PointCloud cloud;
    cloud.points.resize(10, 3);
    for (Index i = 0; i < 10; ++i)
        for (Index j = 0; j < 3; ++j) cloud.points(i, j) = unif(rng);
    cloud.points(3, 1) = 1.0 / 3.0;
    cloud.points(4, 2) = 1e-17;

    const std::string path = temp_path("lk_roundtrip.csv");
    save_csv(cloud, path);
    PointCloud back = load_csv(path);
    REQUIRE(back.size() == 10);
    REQUIRE(back.ambient_dim() == 3);
    REQUIRE((back.points - cloud.points).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE_FALSE(back.has_intrinsic());
    std::remove(path.c_str());
}

TEST_CASE("csv carries intrinsic coordinates and labels") {
    PointCloud cloud;
    cloud.points.resize(3, 2);
    cloud.points << 0, 1, 2, 3, 4, 5;
    cloud.intrinsic.resize(3, 1);
    cloud.intrinsic << 0.25, 0.5, 0.75;
    cloud.labels = {5, 9, 2};
    const std::string path = temp_path("lk_intrinsic.csv");
    save_csv(cloud, path);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    REQUIRE(header == "x1,x2,t1,label");
    in.close();

    PointCloud back = load_csv(path);
    REQUIRE(back.has_intrinsic());
    REQUIRE(back.intrinsic_dim() == 1);
    REQUIRE(back.intrinsic(2, 0) == 0.75);
    REQUIRE(back.labels == std::vector<std::int64_t>{5, 9, 2});
    std::remove(path.c_str());
}

TEST_CASE("csv errors carry row numbers") {
    const std::string path = temp_path("lk_bad.csv");
    {
        std::ofstream out(path);
        out << "x1,x2\n1,2\n3\n";
    }
    try {
        load_csv(path);
        FAIL("expected io_error");
    } catch (const io_error& e) {
        REQUIRE(std::string(e.what()).find("row 2") != std::string::npos);
    }
    {
        std::ofstream out(path);
        out << "x1,x2\n1,2\n3,abc\n";
    }
    try {
        load_csv(path);
        FAIL("expected io_error");
    } catch (const io_error& e) {
        REQUIRE(std::string(e.what()).find("row 2") != std::string::npos);
        REQUIRE(std::string(e.what()).find("abc") != std::string::npos);
    }
    {
        std::ofstream out(path); // empty
    }
    REQUIRE_THROWS_AS(load_csv(path), io_error);
    std::remove(path.c_str());
    REQUIRE_THROWS_AS(load_csv(temp_path("lk_does_not_exist.csv")), io_error);
}

TEST_CASE("point cloud invariants are enforced") {
    PointCloud cloud;
    cloud.points.resize(2, 2);
    cloud.points << 0, 0, 1, 1;

    SECTION("valid cloud passes") { REQUIRE_NOTHROW(cloud.validate()); }
    SECTION("non-finite entries rejected") {
        cloud.points(0, 0) = std::numeric_limits<double>::quiet_NaN();
        REQUIRE_THROWS_AS(cloud.validate(), validation_error);
    }
    SECTION("intrinsic row count must match") {
        cloud.intrinsic.resize(3, 1);
        cloud.intrinsic.setZero();
        REQUIRE_THROWS_AS(cloud.validate(), validation_error);
    }
    SECTION("duplicate labels rejected") {
        cloud.labels = {4, 4};
        REQUIRE_THROWS_AS(cloud.validate(), validation_error);
    }
    SECTION("empty cloud rejected") {
        cloud.points.resize(0, 2);
        REQUIRE_THROWS_AS(cloud.validate(), validation_error);
    }
}
