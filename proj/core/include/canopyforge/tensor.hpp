#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace canopyforge {

/// Dense row-major float64 array with a runtime shape.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
        : shape(std::move(s)), data(element_count(shape), fill) {}

    static std::size_t element_count(const std::vector<std::size_t>& s) {
        return s.empty() ? 0 : std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>{});
    }

    std::size_t size() const noexcept { return data.size(); }
    bool empty() const noexcept { return data.empty(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    std::string shape_string() const;
};

/// Per-element validity flags paired with a 2-D array (1 = valid).
struct Mask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> valid;

    Mask() = default;
    Mask(std::size_t h, std::size_t w, bool fill = true)
        : height(h), width(w), valid(h * w, fill ? std::uint8_t{1} : std::uint8_t{0}) {}

    std::size_t size() const noexcept { return valid.size(); }
};

inline std::string Tensor::shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

} // namespace canopyforge
