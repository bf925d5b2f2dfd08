#ifndef CHMKIT_CSF_HPP
#define CHMKIT_CSF_HPP

#include "chmkit/ingest.hpp"

#include <vector>

namespace chmkit {

/// Cloth simulation parameters. rigidness counts the internal-constraint
/// passes per iteration; class_threshold is the max vertical distance from
/// the settled cloth for a point to count as ground.
struct CsfParams {
    double cloth_resolution = 1.0; // meters between cloth particles
    int rigidness = 2;             // 1..3
    double time_step = 0.65;
    double class_threshold = 0.5;  // meters
    std::size_t max_iterations = 500;
    double convergence_delta = 0.005; // meters

    /// Per-iteration fall of a free particle, g * dt^2 with g = 9.8 m/s^2.
    double gravity_displacement() const { return 9.8 * time_step * time_step; }

    void validate() const;
};

struct GroundLabels {
    std::vector<bool> is_ground; // aligned with the input cloud

    std::size_t ground_count() const;
};

/// Cloth simulation filter: the cloud is inverted, a particle cloth drops
/// onto it under gravity with rigidness constraints, and points within
/// class_threshold of the settled cloth surface are labeled ground.
GroundLabels csf_classify(const PointCloud& pc, const CsfParams& params = {});

/// Splits a classified cloud by ASPRS code: ground (2), vegetation (3,4,5),
/// excluded (everything else, including 6 building and 9 water).
struct ClassSplit {
    PointCloud ground;
    PointCloud vegetation;
    PointCloud excluded;
};

ClassSplit split_by_class(const PointCloud& pc);

/// Partitions a cloud along precomputed ground labels.
struct LabelSplit {
    PointCloud ground;
    PointCloud non_ground;
};

LabelSplit split_by_labels(const PointCloud& pc, const GroundLabels& labels);

} // namespace chmkit

#endif
