#include "chmkit/csf.hpp"

#include "chmkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace chmkit {

void CsfParams::validate() const
{
    if (!(cloth_resolution > 0.0))
        throw InputError("cloth_resolution must be positive");
    if (rigidness < 1 || rigidness > 3)
        throw InputError("rigidness must be 1, 2 or 3");
    if (!(time_step > 0.0))
        throw InputError("time_step must be positive");
    if (!(class_threshold > 0.0))
        throw InputError("class_threshold must be positive");
    if (max_iterations < 1)
        throw InputError("max_iterations must be at least 1");
    if (!(convergence_delta > 0.0))
        throw InputError("convergence_delta must be positive");
}

std::size_t GroundLabels::ground_count() const
{
    return static_cast<std::size_t>(std::count(is_ground.begin(), is_ground.end(), true));
}

namespace {

// Rectangular particle cloth over the inverted cloud. Heights live in the
// inverted frame (z' = -z), so the cloth falls from above onto what were the
// lowest returns.
class Cloth {
public:
    Cloth(const PointCloud& pc, const CsfParams& params)
        : res_(params.cloth_resolution)
    {
        double min_x = pc.points[0].x, max_x = pc.points[0].x;
        double min_y = pc.points[0].y, max_y = pc.points[0].y;
        for (const auto& p : pc.points) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
        if (max_x - min_x <= 0.0 && max_y - min_y <= 0.0)
            throw InputError("cloth simulation needs points spread in x/y (degenerate cloud)");

        // One cell of padding keeps every point strictly inside the node hull.
        x0_ = min_x - res_;
        y0_ = min_y - res_;
        cols_ = static_cast<std::size_t>(std::ceil((max_x - min_x) / res_)) + 3;
        rows_ = static_cast<std::size_t>(std::ceil((max_y - min_y) / res_)) + 3;

        build_surface_targets(pc);

        // Each particle starts a fixed clearance above its own column, so
        // the fall to contact stays bounded no matter how much relief the
        // scene has.
        heights_.resize(target_.size());
        for (std::size_t i = 0; i < target_.size(); ++i)
            heights_[i] = target_[i] + 5.0;
        movable_.assign(rows_ * cols_, true);
    }

    void simulate(const CsfParams& params)
    {
        const double drop = params.gravity_displacement();
        std::vector<double> prev(heights_.size());
        for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
            prev = heights_;

            // Gravity, then pinning against the column surface.
            for (std::size_t i = 0; i < heights_.size(); ++i) {
                if (!movable_[i])
                    continue;
                heights_[i] -= drop;
                if (heights_[i] <= target_[i]) {
                    heights_[i] = target_[i];
                    movable_[i] = false;
                }
            }

            // Internal constraints: each neighbor pair moves toward its
            // midpoint; pinned endpoints stay put.
            for (int pass = 0; pass < params.rigidness; ++pass) {
                for (std::size_t r = 0; r < rows_; ++r) {
                    for (std::size_t c = 0; c < cols_; ++c) {
                        const std::size_t i = r * cols_ + c;
                        if (c + 1 < cols_)
                            relax(i, i + 1);
                        if (r + 1 < rows_)
                            relax(i, i + cols_);
                    }
                }
            }

            double max_move = 0.0;
            for (std::size_t i = 0; i < heights_.size(); ++i)
                max_move = std::max(max_move, std::fabs(heights_[i] - prev[i]));
            if (max_move < params.convergence_delta)
                break;
        }
    }

    // Bilinear cloth height at a map position.
    double height_at(double x, double y) const
    {
        const double u = (x - x0_) / res_;
        const double v = (y - y0_) / res_;
        const double fc = std::clamp(std::floor(u), 0.0, static_cast<double>(cols_ - 2));
        const double fr = std::clamp(std::floor(v), 0.0, static_cast<double>(rows_ - 2));
        const std::size_t c0 = static_cast<std::size_t>(fc);
        const std::size_t r0 = static_cast<std::size_t>(fr);
        const double tx = std::clamp(u - fc, 0.0, 1.0);
        const double ty = std::clamp(v - fr, 0.0, 1.0);
        const double h00 = heights_[r0 * cols_ + c0];
        const double h01 = heights_[r0 * cols_ + c0 + 1];
        const double h10 = heights_[(r0 + 1) * cols_ + c0];
        const double h11 = heights_[(r0 + 1) * cols_ + c0 + 1];
        return h00 * (1 - tx) * (1 - ty) + h01 * tx * (1 - ty)
             + h10 * (1 - tx) * ty + h11 * tx * ty;
    }

private:
    void relax(std::size_t a, std::size_t b)
    {
        const double half = (heights_[b] - heights_[a]) / 2.0;
        if (movable_[a] && movable_[b]) {
            heights_[a] += half;
            heights_[b] -= half;
        } else if (movable_[a]) {
            heights_[a] += half;
        } else if (movable_[b]) {
            heights_[b] -= half;
        }
    }

    // Per-node pin height: the highest inverted return among points nearest
    // to the node; empty nodes take the value of the closest seeded node.
    void build_surface_targets(const PointCloud& pc)
    {
        const double kUnset = -std::numeric_limits<double>::infinity();
        target_.assign(rows_ * cols_, kUnset);
        for (const auto& p : pc.points) {
            const long long c = std::llround((p.x - x0_) / res_);
            const long long r = std::llround((p.y - y0_) / res_);
            if (c < 0 || r < 0 || c >= static_cast<long long>(cols_) || r >= static_cast<long long>(rows_))
                continue;
            const std::size_t i = static_cast<std::size_t>(r) * cols_ + static_cast<std::size_t>(c);
            target_[i] = std::max(target_[i], -p.z);
        }

        // Multi-source BFS fill of empty nodes, row-major seed order.
        std::deque<std::size_t> queue;
        for (std::size_t i = 0; i < target_.size(); ++i)
            if (target_[i] != kUnset)
                queue.push_back(i);
        if (queue.empty())
            throw InputError("no cloth node received a surface sample");
        while (!queue.empty()) {
            const std::size_t i = queue.front();
            queue.pop_front();
            const std::size_t r = i / cols_;
            const std::size_t c = i % cols_;
            const std::size_t neighbors[4] = {
                r > 0 ? i - cols_ : i,
                r + 1 < rows_ ? i + cols_ : i,
                c > 0 ? i - 1 : i,
                c + 1 < cols_ ? i + 1 : i,
            };
            for (std::size_t nb : neighbors) {
                if (nb != i && target_[nb] == kUnset) {
                    target_[nb] = target_[i];
                    queue.push_back(nb);
                }
            }
        }
    }

    double res_;
    double x0_ = 0.0, y0_ = 0.0;
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> heights_;
    std::vector<double> target_;
    std::vector<bool> movable_;
};

} // namespace

GroundLabels csf_classify(const PointCloud& pc, const CsfParams& params)
{
    pc.validate();
    params.validate();

    Cloth cloth(pc, params);
    cloth.simulate(params);

    GroundLabels labels;
    labels.is_ground.resize(pc.points.size());
    for (std::size_t i = 0; i < pc.points.size(); ++i) {
        const auto& p = pc.points[i];
        const double dist = std::fabs(-p.z - cloth.height_at(p.x, p.y));
        labels.is_ground[i] = dist < params.class_threshold;
    }
    return labels;
}

ClassSplit split_by_class(const PointCloud& pc)
{
    pc.validate();
    if (!pc.classified)
        throw InputError("split_by_class requires a classified point cloud");

    ClassSplit out;
    out.ground.crs = out.vegetation.crs = out.excluded.crs = pc.crs;
    out.ground.classified = out.vegetation.classified = out.excluded.classified = true;
    for (const auto& p : pc.points) {
        const std::uint8_t cls = *p.classification;
        if (cls == 2)
            out.ground.points.push_back(p);
        else if (cls == 3 || cls == 4 || cls == 5)
            out.vegetation.points.push_back(p);
        else
            out.excluded.points.push_back(p);
    }
    return out;
}

LabelSplit split_by_labels(const PointCloud& pc, const GroundLabels& labels)
{
    if (labels.is_ground.size() != pc.points.size())
        throw InputError("ground labels do not align with the point cloud");
    LabelSplit out;
    out.ground.crs = out.non_ground.crs = pc.crs;
    out.ground.classified = out.non_ground.classified = pc.classified;
    for (std::size_t i = 0; i < pc.points.size(); ++i)
        (labels.is_ground[i] ? out.ground : out.non_ground).points.push_back(pc.points[i]);
    return out;
}

} // namespace chmkit
