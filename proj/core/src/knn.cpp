#include "knn.hpp"

#include <algorithm>

namespace canopyforge::detail {

namespace {

bool closer(const KdTree2::Neighbor& a, const KdTree2::Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

} // namespace

KdTree2::KdTree2(std::vector<std::pair<double, double>> points) : pts_(std::move(points)) {
    order_.resize(pts_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
    nodes_.reserve(pts_.size());
    root_ = build(0, pts_.size(), 0);
}

std::int32_t KdTree2::build(std::size_t lo, std::size_t hi, int depth) {
    if (lo >= hi) return -1;
    const std::uint8_t axis = static_cast<std::uint8_t>(depth & 1);
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(lo), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::uint32_t a, std::uint32_t b) {
                         const double va = axis ? pts_[a].second : pts_[a].first;
                         const double vb = axis ? pts_[b].second : pts_[b].first;
                         return va < vb || (va == vb && a < b);
                     });
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{order_[mid], -1, -1, axis});
    const std::int32_t left = build(lo, mid, depth + 1);
    const std::int32_t right = build(mid + 1, hi, depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
}

void KdTree2::search(std::int32_t node, double x, double y, std::size_t k, std::vector<Neighbor>& heap) const {
    if (node < 0) return;
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    const auto& p = pts_[n.point];
    const double dx = p.first - x;
    const double dy = p.second - y;
    const Neighbor cand{dx * dx + dy * dy, n.point};
    if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
    } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
    }

    const double diff = n.axis ? (y - p.second) : (x - p.first);
    const std::int32_t near = diff < 0 ? n.left : n.right;
    const std::int32_t far = diff < 0 ? n.right : n.left;
    search(near, x, y, k, heap);
    // Equality keeps equidistant points reachable for the index tie-break.
    if (heap.size() < k || diff * diff <= heap.front().dist2) search(far, x, y, k, heap);
}

void KdTree2::nearest(double x, double y, std::size_t k, std::vector<Neighbor>& out) const {
    out.clear();
    if (k == 0) return;
    search(root_, x, y, k, out);
    std::sort_heap(out.begin(), out.end(), closer);
}

} // namespace canopyforge::detail
