#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace luenn {

/// Dense row-major 2D image.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t height, std::size_t width, T fill = T{})
        : height_(height), width_(width), data_(height * width, fill) {}

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t row, std::size_t col) {
        assert(row < height_ && col < width_);
        return data_[row * width_ + col];
    }
    const T& operator()(std::size_t row, std::size_t col) const {
        assert(row < height_ && col < width_);
        return data_[row * width_ + col];
    }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    bool operator==(const Grid&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<T> data_;
};

}  // namespace luenn
