#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace canopyforge::detail {

/// Static 2-D kd-tree for k-nearest-neighbour queries. Ties in distance are
/// broken by the original point index, so results are fully deterministic.
class KdTree2 {
public:
    struct Neighbor {
        double dist2;
        std::uint32_t index;
    };

    explicit KdTree2(std::vector<std::pair<double, double>> points);

    std::size_t size() const noexcept { return pts_.size(); }

    /// Up to k nearest points to (x, y), closest first. `out` is reused.
    void nearest(double x, double y, std::size_t k, std::vector<Neighbor>& out) const;

private:
    struct Node {
        std::uint32_t point; // index into order_
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint8_t axis = 0;
    };

    std::int32_t build(std::size_t lo, std::size_t hi, int depth);
    void search(std::int32_t node, double x, double y, std::size_t k, std::vector<Neighbor>& heap) const;

    std::vector<std::pair<double, double>> pts_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

} // namespace canopyforge::detail
