#include "timebound/rational.hpp"

namespace timebound {

namespace {
__int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}
} // namespace

std::int64_t Rat::narrow(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) throw InternalError("rational overflow");
    return static_cast<std::int64_t>(v);
}

void Rat::normalize() {
    if (den_ == 0) throw InternalError("rational with zero denominator");
    if (den_ < 0) {
        num_ = -num_;
        den_ = -den_;
    }
    if (num_ == 0) {
        den_ = 1;
        return;
    }
    std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    num_ /= g;
    den_ /= g;
}

Rat Rat::operator+(const Rat& o) const {
    __int128 n = static_cast<__int128>(num_) * o.den_ + static_cast<__int128>(o.num_) * den_;
    __int128 d = static_cast<__int128>(den_) * o.den_;
    __int128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    Rat r;
    r.num_ = narrow(n);
    r.den_ = narrow(d);
    return r;
}

Rat Rat::operator-(const Rat& o) const { return *this + (-o); }

Rat Rat::operator*(const Rat& o) const {
    // Cross-reduce before multiplying to keep magnitudes down.
    std::int64_t g1 = std::gcd(num_ < 0 ? -num_ : num_, o.den_);
    std::int64_t g2 = std::gcd(o.num_ < 0 ? -o.num_ : o.num_, den_);
    __int128 n = static_cast<__int128>(num_ / g1) * (o.num_ / g2);
    __int128 d = static_cast<__int128>(den_ / g2) * (o.den_ / g1);
    Rat r;
    r.num_ = narrow(n);
    r.den_ = narrow(d);
    return r;
}

Rat Rat::operator/(const Rat& o) const {
    if (o.num_ == 0) throw InternalError("rational division by zero");
    Rat inv;
    inv.num_ = o.den_;
    inv.den_ = o.num_;
    if (inv.den_ < 0) {
        inv.num_ = -inv.num_;
        inv.den_ = -inv.den_;
    }
    return *this * inv;
}

bool Rat::operator<(const Rat& o) const {
    return static_cast<__int128>(num_) * o.den_ < static_cast<__int128>(o.num_) * den_;
}

std::int64_t Rat::floor() const {
    if (num_ >= 0) return num_ / den_;
    return -((-num_ + den_ - 1) / den_);
}

std::int64_t Rat::ceil() const { return -(-*this).floor(); }

Rat Rat::frac_distance() const {
    Rat f = *this - Rat(floor());
    Rat g = Rat(1) - f;
    return f < g ? f : g;
}

std::string Rat::str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

} // namespace timebound
