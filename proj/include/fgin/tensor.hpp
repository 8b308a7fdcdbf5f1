#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fgin {

// Error taxonomy shared by the whole library. The CLI maps these onto
// process exit codes (usage=1, data=2, numeric=3).
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

class shape_error : public error {
public:
    explicit shape_error(const std::string& msg) : error(msg) {}
};

class data_error : public error {
public:
    explicit data_error(const std::string& msg) : error(msg) {}
};

class numeric_error : public error {
public:
    explicit numeric_error(const std::string& msg) : error(msg) {}
};

inline std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ',';
        os << s[i];
    }
    os << ']';
    return os.str();
}

/// Dense row-major tensor (last axis fastest). Feature maps are indexed
/// [batch, height, width, channels].
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;

    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel_of(shape)), T(0));
    }

    Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != static_cast<int64_t>(data.size()))
            throw shape_error("tensor data length " + std::to_string(data.size()) +
                              " does not match shape " + shape_str(shape));
    }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int e : s) {
            if (e <= 0) throw shape_error("non-positive extent in shape " + shape_str(s));
            n *= e;
        }
        return n;
    }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

    static Tensor full(std::vector<int> s, T v) {
        Tensor t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape.at(static_cast<size_t>(i)); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    // 4-d accessors for [B,H,W,C] maps.
    T& at4(int b, int i, int j, int c) {
        return data[idx4(b, i, j, c)];
    }
    T at4(int b, int i, int j, int c) const {
        return data[idx4(b, i, j, c)];
    }
    size_t idx4(int b, int i, int j, int c) const {
        return static_cast<size_t>(((static_cast<int64_t>(b) * shape[1] + i) * shape[2] + j) *
                                       shape[3] +
                                   c);
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    void require_finite(const char* who) const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v)))
                throw numeric_error(std::string(who) + ": non-finite value in tensor");
    }
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* who) {
    if (!a.same_shape(b))
        throw shape_error(std::string(who) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                          shape_str(b.shape));
}

}  // namespace fgin
