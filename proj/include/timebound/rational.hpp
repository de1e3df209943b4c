#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "timebound/errors.hpp"

namespace timebound {

// Exact rational with 64-bit numerator/denominator and 128-bit
// intermediates. Results that no longer fit 64 bits throw InternalError;
// the flow models solved here keep values far below that.
class Rat {
public:
    Rat() = default;
    Rat(std::int64_t n) : num_(n), den_(1) {}
    Rat(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    bool is_integer() const { return den_ == 1; }
    std::int64_t floor() const;
    std::int64_t ceil() const;
    // Distance to the nearest integer, as a rational in [0, 1/2].
    Rat frac_distance() const;

    Rat operator+(const Rat& o) const;
    Rat operator-(const Rat& o) const;
    Rat operator*(const Rat& o) const;
    Rat operator/(const Rat& o) const;
    Rat operator-() const { return Rat(-num_, den_); }
    Rat& operator+=(const Rat& o) { return *this = *this + o; }
    Rat& operator-=(const Rat& o) { return *this = *this - o; }
    Rat& operator*=(const Rat& o) { return *this = *this * o; }
    Rat& operator/=(const Rat& o) { return *this = *this / o; }

    bool operator==(const Rat& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rat& o) const { return !(*this == o); }
    bool operator<(const Rat& o) const;
    bool operator>(const Rat& o) const { return o < *this; }
    bool operator<=(const Rat& o) const { return !(o < *this); }
    bool operator>=(const Rat& o) const { return !(*this < o); }

    bool is_zero() const { return num_ == 0; }
    std::string str() const;

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;

    void normalize();
    static std::int64_t narrow(__int128 v);
};

} // namespace timebound
