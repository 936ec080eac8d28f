#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "poselift/errors.hpp"

namespace poselift {

/// Dense row-major matrix of doubles. Scalars are (1,1), row vectors (1,n).
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static Tensor scalar(double v) {
        Tensor t(1, 1);
        t.data[0] = v;
        return t;
    }
    static Tensor row(std::vector<double> v) {
        Tensor t;
        t.rows = 1;
        t.cols = v.size();
        t.data = std::move(v);
        return t;
    }

    std::size_t size() const { return rows * cols; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double item() const {
        if (size() != 1) throw ShapeMismatch("item() on non-scalar tensor");
        return data[0];
    }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    bool finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        return "(" + std::to_string(rows) + "," + std::to_string(cols) + ")";
    }
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (!a.same_shape(b))
        throw ShapeMismatch(std::string(who) + ": " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace poselift
