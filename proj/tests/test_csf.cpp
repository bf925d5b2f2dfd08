#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chmkit/csf.hpp"
#include "chmkit/error.hpp"
#include "support/synthetic.hpp"

#include <random>

using namespace chmkit;

TEST_CASE("csf labels a flat plane entirely as ground")
{
    synthetic::SceneSpec spec;
    spec.nx = 100;
    spec.ny = 100;
    spec.crown_count = 0;
    const synthetic::Scene scene = synthetic::make_scene(spec);
    REQUIRE(scene.cloud.size() == 10000);

    const GroundLabels labels = csf_classify(scene.cloud);
    CHECK(labels.ground_count() == scene.cloud.size());
}

TEST_CASE("csf separates canopy points hovering over a plane")
{
    synthetic::SceneSpec spec;
    spec.nx = 60;
    spec.ny = 60;
    spec.crown_count = 0;
    synthetic::Scene scene = synthetic::make_scene(spec);

    // 100 detached canopy returns 10 m up.
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> pos(5.0, 54.0);
    for (int i = 0; i < 100; ++i) {
        scene.cloud.points.push_back(
            {500000.0 + pos(rng), 4000000.0 + pos(rng), 10.0, std::nullopt});
        scene.truth_ground.push_back(false);
    }

    const GroundLabels labels = csf_classify(scene.cloud);
    for (std::size_t i = 0; i < scene.cloud.size(); ++i)
        CHECK(labels.is_ground[i] == scene.truth_ground[i]);
}

TEST_CASE("csf recovers sloped planes completely")
{
    for (double slope : {5.0, 10.0, 20.0, 30.0}) {
        synthetic::SceneSpec spec;
        spec.nx = 50;
        spec.ny = 50;
        spec.slope_deg = slope;
        spec.crown_count = 0;
        const synthetic::Scene scene = synthetic::make_scene(spec);
        const GroundLabels labels = csf_classify(scene.cloud);
        CHECK(labels.ground_count() == scene.cloud.size());
    }
}

TEST_CASE("csf reaches 95 percent accuracy on a sloped scene with crowns")
{
    synthetic::SceneSpec spec;
    spec.nx = 80;
    spec.ny = 80;
    spec.slope_deg = 10.0;
    spec.crown_count = 30;
    spec.seed = 1234;
    const synthetic::Scene scene = synthetic::make_scene(spec);

    const GroundLabels labels = csf_classify(scene.cloud);
    CHECK(synthetic::label_accuracy(scene, labels.is_ground) >= 0.95);
}

TEST_CASE("csf labels partition the cloud")
{
    synthetic::SceneSpec spec;
    spec.nx = 40;
    spec.ny = 40;
    spec.crown_count = 10;
    const synthetic::Scene scene = synthetic::make_scene(spec);
    const GroundLabels labels = csf_classify(scene.cloud);
    const LabelSplit split = split_by_labels(scene.cloud, labels);
    CHECK(split.ground.size() + split.non_ground.size() == scene.cloud.size());
    CHECK(split.ground.size() == labels.ground_count());
}

TEST_CASE("raising the class threshold never shrinks the ground set")
{
    synthetic::SceneSpec spec;
    spec.nx = 40;
    spec.ny = 40;
    spec.crown_count = 12;
    spec.slope_deg = 6.0;
    const synthetic::Scene scene = synthetic::make_scene(spec);

    CsfParams params;
    std::vector<bool> previous;
    for (double threshold : {0.2, 0.5, 1.0, 2.0}) {
        params.class_threshold = threshold;
        const GroundLabels labels = csf_classify(scene.cloud, params);
        if (!previous.empty()) {
            for (std::size_t i = 0; i < labels.is_ground.size(); ++i)
                if (previous[i])
                    CHECK(labels.is_ground[i]);
        }
        previous = labels.is_ground;
    }
}

TEST_CASE("csf is deterministic")
{
    synthetic::SceneSpec spec;
    spec.nx = 30;
    spec.ny = 30;
    spec.crown_count = 8;
    const synthetic::Scene scene = synthetic::make_scene(spec);
    const GroundLabels a = csf_classify(scene.cloud);
    const GroundLabels b = csf_classify(scene.cloud);
    CHECK(a.is_ground == b.is_ground);
}

TEST_CASE("csf rejects degenerate clouds and bad parameters")
{
    PointCloud stack;
    stack.crs = Crs::utm(33, Hemisphere::North);
    for (int i = 0; i < 10; ++i)
        stack.points.push_back({1.0, 2.0, static_cast<double>(i), std::nullopt});
    CHECK_THROWS_AS(csf_classify(stack), InputError);

    synthetic::SceneSpec spec;
    spec.nx = 10;
    spec.ny = 10;
    spec.crown_count = 0;
    const synthetic::Scene scene = synthetic::make_scene(spec);
    CsfParams params;
    params.rigidness = 4;
    CHECK_THROWS_AS(csf_classify(scene.cloud, params), InputError);
    params.rigidness = 2;
    params.cloth_resolution = 0.0;
    CHECK_THROWS_AS(csf_classify(scene.cloud, params), InputError);
}

TEST_CASE("split_by_class partitions by ASPRS code")
{
    PointCloud pc;
    pc.crs = Crs::utm(33, Hemisphere::North);
    pc.classified = true;
    pc.points = {
        {0, 0, 0, std::uint8_t{2}},
        {1, 0, 5, std::uint8_t{3}},
        {2, 0, 9, std::uint8_t{6}},
    };
    const ClassSplit split = split_by_class(pc);
    CHECK(split.ground.size() == 1);
    CHECK(split.vegetation.size() == 1);
    CHECK(split.excluded.size() == 1);
    CHECK(split.ground.points[0].z == 0.0);
    CHECK(split.vegetation.points[0].z == 5.0);
    CHECK(split.excluded.points[0].z == 9.0);
}

TEST_CASE("split_by_class routes water to excluded and keeps single-class clouds intact")
{
    PointCloud water;
    water.crs = Crs::utm(33, Hemisphere::North);
    water.classified = true;
    water.points = {{0, 0, 0, std::uint8_t{9}}, {1, 1, 0, std::uint8_t{2}}};
    const ClassSplit ws = split_by_class(water);
    CHECK(ws.excluded.size() == 1);
    CHECK(*ws.excluded.points[0].classification == 9);

    PointCloud all_ground;
    all_ground.crs = water.crs;
    all_ground.classified = true;
    for (int i = 0; i < 5; ++i)
        all_ground.points.push_back({static_cast<double>(i), 0.0, 0.0, std::uint8_t{2}});
    const ClassSplit gs = split_by_class(all_ground);
    CHECK(gs.ground.size() == 5);
    CHECK(gs.vegetation.size() == 0);
    CHECK(gs.excluded.size() == 0);
}

TEST_CASE("split_by_class covers every vegetation code")
{
    PointCloud pc;
    pc.crs = Crs::utm(33, Hemisphere::North);
    pc.classified = true;
    for (std::uint8_t cls : {0, 1, 2, 3, 4, 5, 6, 7, 9})
        pc.points.push_back({static_cast<double>(cls), 0.0, 0.0, cls});
    const ClassSplit split = split_by_class(pc);
    CHECK(split.ground.size() == 1);
    CHECK(split.vegetation.size() == 3);   // codes 3, 4, 5
    CHECK(split.excluded.size() == 5);     // 0, 1, 6, 7, 9
    CHECK(split.ground.size() + split.vegetation.size() + split.excluded.size() == pc.size());
}

TEST_CASE("split_by_class rejects unclassified clouds")
{
    PointCloud pc;
    pc.crs = Crs::utm(33, Hemisphere::North);
    pc.points = {{0, 0, 0, std::nullopt}};
    CHECK_THROWS_AS(split_by_class(pc), InputError);
}
