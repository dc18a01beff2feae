#pragma once

#include <boost/math/policies/policy.hpp>

namespace expertsurv::detail {

// Report domain/overflow problems through return values instead of throwing
// so that callers inside samplers and optimizers can treat them as rejections.
using MathPolicy = boost::math::policies::policy<
    boost::math::policies::domain_error<boost::math::policies::ignore_error>,
    boost::math::policies::pole_error<boost::math::policies::ignore_error>,
    boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::evaluation_error<boost::math::policies::ignore_error>,
    boost::math::policies::promote_double<false>>;

}  // namespace expertsurv::detail
