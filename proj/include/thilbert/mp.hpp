#pragma once

// Extended-precision scalar used where double cannot resolve the spectrum
// (singular values far below machine epsilon relative to the largest one).

#include <boost/multiprecision/mpfr.hpp>

namespace thilbert {

using mp_real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<80>,
                                              boost::multiprecision::et_off>;

template <class Real>
inline double to_double(const Real& x)
{
    return static_cast<double>(x);
}

}  // namespace thilbert
