#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "enscore/errors.hpp"

namespace enscore {

// Row-major extents. Cube tensors are always (time, channel, height, width).
using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>{});
}

std::string to_string(const Shape& shape);

// Non-owning view over a C-order array. Slicing along the leading axis stays
// contiguous, which is how context/target splits are expressed.
template <typename T>
class TensorView {
public:
    TensorView() = default;

    TensorView(std::span<T> data, Shape shape) : data_(data), shape_(std::move(shape)) {
        if (element_count(shape_) != data_.size())
            throw ShapeMismatch("view of " + std::to_string(data_.size()) +
                                " elements cannot have shape " + to_string(shape_));
    }

    // Implicit T -> const T conversion.
    template <typename U>
        requires std::is_same_v<std::remove_const_t<T>, U> && std::is_const_v<T>
    TensorView(const TensorView<U>& other) : data_(other.data()), shape_(other.shape()) {}

    std::span<T> data() const noexcept { return data_; }
    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }

    // Number of elements in one leading-axis slab.
    std::size_t stride0() const noexcept { return shape_.empty() || shape_[0] == 0 ? 0 : size() / shape_[0]; }

    TensorView frames(std::size_t begin, std::size_t end) const {
        if (shape_.empty() || begin > end || end > shape_[0])
            throw GeometryMismatch("frame range [" + std::to_string(begin) + "," +
                                   std::to_string(end) + ") outside leading axis of " +
                                   to_string(shape_));
        Shape s = shape_;
        s[0] = end - begin;
        const std::size_t stride = stride0();
        return TensorView(data_.subspan(begin * stride, (end - begin) * stride), std::move(s));
    }

    T& operator[](std::size_t flat) const { return data_[flat]; }

private:
    std::span<T> data_;
    Shape shape_;
};

template <typename T>
using ConstView = TensorView<const T>;

// Owning dense tensor.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{})
        : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (element_count(shape_) != data_.size())
            throw ShapeMismatch(std::to_string(data_.size()) +
                                " elements do not fill shape " + to_string(shape_));
    }

    static Tensor copy_of(ConstView<T> view) {
        return Tensor(view.shape(), std::vector<T>(view.data().begin(), view.data().end()));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    TensorView<T> view() { return {std::span<T>(data_), shape_}; }
    ConstView<T> view() const { return {std::span<const T>(data_), shape_}; }
    operator ConstView<T>() const { return view(); }

    T& operator[](std::size_t flat) { return data_[flat]; }
    const T& operator[](std::size_t flat) const { return data_[flat]; }

    T& at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) {
        return data_[((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3];
    }
    const T& at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const {
        return data_[((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3];
    }
    T& at(std::size_t i0, std::size_t i1, std::size_t i2) {
        return data_[(i0 * shape_[1] + i1) * shape_[2] + i2];
    }
    const T& at(std::size_t i0, std::size_t i1, std::size_t i2) const {
        return data_[(i0 * shape_[1] + i1) * shape_[2] + i2];
    }

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

using FloatTensor = Tensor<float>;
using MaskTensor = Tensor<std::uint8_t>;

}  // namespace enscore
