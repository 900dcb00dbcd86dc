#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tpms/field.hpp"
#include "tpms/rng.hpp"

using namespace tpms;

namespace {

Vec3 random_point(Rng& rng, double lo = -10.0, double hi = 10.0) {
    return Vec3(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
}

WeightVector random_weights(Rng& rng) {
    WeightVector w;
    double sum = 0.0;
    for (int i = 0; i < kNumPrimitives; ++i) {
        w[i] = rng.exponential();
        sum += w[i];
    }
    return w / sum;
}

// Independent central-difference gradient.
Vec3 fd_gradient(const TpmsField& field, const Vec3& p, double h = 1e-5) {
    Vec3 g;
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 up = p, down = p;
        up[axis] += h;
        down[axis] -= h;
        g[axis] = (eval_field(field, up) - eval_field(field, down)) / (2.0 * h);
    }
    return g;
}

} // namespace

TEST_CASE("primitive values at reference points") {
    CHECK(eval_primitive(Primitive::schwarz_p, Vec3::Zero()) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(eval_primitive(Primitive::gyroid, Vec3::Zero()) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(eval_primitive(Primitive::gyroid, Vec3(M_PI / 2.0, 0.0, 0.0)) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("primitive index mapping") {
    CHECK(primitive_from_index(1) == Primitive::schwarz_p);
    CHECK(primitive_from_index(8) == Primitive::split_p);
    CHECK_THROWS_AS(primitive_from_index(0), std::domain_error);
    CHECK_THROWS_AS(primitive_from_index(9), std::domain_error);
}

TEST_CASE("field interpolation of gyroid and schwarz p") {
    WeightVector w = WeightVector::Zero();
    w[static_cast<int>(Primitive::gyroid) - 1] = 0.4;
    w[static_cast<int>(Primitive::schwarz_p) - 1] = 0.6;
    const TpmsField field = make_field(w);
    CHECK(eval_field(field, Vec3::Zero()) == doctest::Approx(1.8).epsilon(1e-15));
}

TEST_CASE("unit weight reproduces the primitive exactly") {
    Rng rng(11);
    for (int id = 1; id <= kNumPrimitives; ++id) {
        const TpmsField field = primitive_field(primitive_from_index(id));
        for (int trial = 0; trial < 20; ++trial) {
            const Vec3 p = random_point(rng);
            CHECK(eval_field(field, p) == eval_primitive(primitive_from_index(id), p));
        }
    }
}

TEST_CASE("eval_field is linear in the weights") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const WeightVector w = random_weights(rng);
        const Vec3 p = random_point(rng);
        const PrimitiveBasis basis = eval_primitive_basis(p);
        double summed = 0.0;
        for (int i = 0; i < kNumPrimitives; ++i) summed += w[i] * basis.value[i];
        CHECK(eval_field(make_field(w), p) == doctest::Approx(summed).epsilon(1e-12));
    }
}

TEST_CASE("all primitives are 2pi periodic") {
    Rng rng(13);
    const double period = 2.0 * M_PI;
    for (int id = 1; id <= kNumPrimitives; ++id) {
        const Primitive prim = primitive_from_index(id);
        for (int trial = 0; trial < 50; ++trial) {
            const Vec3 p = random_point(rng);
            const double base = eval_primitive(prim, p);
            for (int axis = 0; axis < 3; ++axis) {
                Vec3 shifted = p;
                shifted[axis] += period;
                CHECK(std::abs(eval_primitive(prim, shifted) - base) < 1e-9);
            }
        }
    }
}

TEST_CASE("analytic gradients match finite differences") {
    CHECK(eval_primitive_gradient(Primitive::schwarz_p, Vec3::Zero()).norm() == doctest::Approx(0.0));
    CHECK((eval_primitive_gradient(Primitive::gyroid, Vec3::Zero()) - Vec3(1, 1, 1)).norm() ==
          doctest::Approx(0.0).epsilon(1e-15));

    Rng rng(14);
    for (int trial = 0; trial < 200; ++trial) {
        const TpmsField field = make_field(random_weights(rng));
        const Vec3 p = random_point(rng);
        const Vec3 analytic = eval_gradient(field, p);
        const Vec3 fd = fd_gradient(field, p);
        const double scale = std::max(analytic.norm(), 1.0);
        CHECK((analytic - fd).norm() / scale < 1e-6);
    }
}

TEST_CASE("solid membership under the gradient-scaled thickness") {
    const TpmsField gyroid = primitive_field(Primitive::gyroid);
    CHECK(is_solid(gyroid, Vec3::Zero()));          // on the midsurface
    CHECK_FALSE(is_solid(gyroid, Vec3(M_PI / 2.0, 0.0, 0.0))); // |F| = 1, grad norm 1

    // The Schwarz P field maximum sits far from the F=0 midsurface, so it
    // is not wall material even though the gradient vanishes there.
    const TpmsField schwarz = primitive_field(Primitive::schwarz_p);
    CHECK_FALSE(is_solid(schwarz, Vec3::Zero()));
}

TEST_CASE("solid predicate matches the literal normalized-offset form away from critical points") {
    Rng rng(15);
    for (int trial = 0; trial < 500; ++trial) {
        const TpmsField field = make_field(random_weights(rng), rng.uniform(0.1, 1.0));
        const Vec3 p = random_point(rng);
        const FieldSample s = eval_field_and_gradient(field, p);
        const double gn = s.gradient.norm();
        if (gn <= 1e-8) continue;
        const bool literal = std::abs(s.value) / gn <= 0.5 * field.thickness;
        CHECK(is_solid(field, p) == literal);
    }
}

TEST_CASE("schwarz p shell symmetry under sign flip") {
    const TpmsField field = primitive_field(Primitive::schwarz_p);
    Rng rng(16);
    const Vec3 half_period(M_PI, M_PI, M_PI);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 p = random_point(rng);
        // F(p + (pi,pi,pi)) == -F(p) for Schwarz P; the shell must not care.
        CHECK(eval_field(field, p + half_period) == doctest::Approx(-eval_field(field, p)).epsilon(1e-9));
        CHECK(is_solid(field, p) == is_solid(field, p + half_period));
    }
}

TEST_CASE("field construction validates invariants") {
    WeightVector w = WeightVector::Zero();
    w[0] = 0.5; // sums to 0.5
    CHECK_THROWS_AS(make_field(w), std::invalid_argument);
    w[1] = 0.5;
    CHECK_NOTHROW(make_field(w));
    CHECK_THROWS_AS(make_field(w, 0.0), std::invalid_argument);
    w[0] = -0.1;
    w[1] = 1.1;
    CHECK_THROWS_AS(make_field(w), std::invalid_argument);
}

TEST_CASE("weight vector textual round trip") {
    Rng rng(17);
    const WeightVector w = random_weights(rng);
    const WeightVector back = parse_weights(format_weights(w));
    CHECK((w - back).norm() == 0.0);
    CHECK_THROWS_AS(parse_weights("1,2,3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_weights("a,b,c,d,e,f,g,h"), std::invalid_argument);
}
