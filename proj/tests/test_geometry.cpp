#include "priorpose/geometry.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace priorpose;
using testsupport::quaternion_angle_deg;

TEST_CASE("gram_schmidt_to_rotation examples") {
    CHECK(gram_schmidt_to_rotation({{1, 0, 0}, {0, 1, 0}}).isApprox(Eigen::Matrix3d::Identity(), 0));
    CHECK((gram_schmidt_to_rotation({{2, 0, 0}, {0, 3, 0}}) - Eigen::Matrix3d::Identity()).norm() < 1e-15);
    CHECK_THROWS_AS(gram_schmidt_to_rotation({{0, 0, 0}, {0, 1, 0}}), Error);
    CHECK_THROWS_AS(gram_schmidt_to_rotation({{1, 0, 0}, {2, 0, 0}}), Error);
}

TEST_CASE("rotation_to_6d reads the first two columns") {
    const Rotation6D id = rotation_to_6d(Eigen::Matrix3d::Identity());
    CHECK(id.a1 == Eigen::Vector3d(1, 0, 0));
    CHECK(id.a2 == Eigen::Vector3d(0, 1, 0));
    Eigen::Matrix3d rz;
    rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    const Rotation6D r = rotation_to_6d(rz);
    CHECK(r.a1 == Eigen::Vector3d(0, 1, 0));
    CHECK(r.a2 == Eigen::Vector3d(-1, 0, 0));
}

TEST_CASE("6D roundtrip and Gram-Schmidt validity over random inputs") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Matrix3d r = testsupport::random_rotation(rng);
        worst = std::max(worst, (gram_schmidt_to_rotation(rotation_to_6d(r)) - r).cwiseAbs().maxCoeff());
        const Rotation6D any{{n(rng), n(rng), n(rng)}, {n(rng), n(rng), n(rng)}};
        CHECK(is_rotation(gram_schmidt_to_rotation(any)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("essential_from_pose examples") {
    Eigen::Matrix3d ex;
    ex << 0, 0, 0, 0, 0, -1, 0, 1, 0;
    CHECK(essential_from_pose({Eigen::Matrix3d::Identity(), {1, 0, 0}}) == ex);
    Eigen::Matrix3d ez;
    ez << 0, -1, 0, 1, 0, 0, 0, 0, 0;
    CHECK(essential_from_pose({Eigen::Matrix3d::Identity(), {0, 0, 1}}) == ez);
    CHECK_THROWS_AS(essential_from_pose({Eigen::Matrix3d::Identity(), {0, 0, 0}}), Error);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Pose pose = testsupport::random_pose(rng);
        const EssentialMatrix e = essential_from_pose(pose);
        CHECK(is_essential(e));
        CHECK(testsupport::essential_distance(e, testsupport::essential_oracle(pose)) < 1e-12);
        double worst = 0.0;
        for (const auto &c : testsupport::project_scene(pose, 50, rng))
            worst = std::max(worst, std::abs(c.q.homogeneous().dot(e * c.p.homogeneous())));
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("sampson_error examples") {
    Eigen::Matrix3d e;
    e << 0, 0, 0, 0, 0, -1, 0, 1, 0;
    // numerator (q^T E p)^2 = 0.01, denominator 2
    CHECK(sampson_error({{0, 0}, {0, 0.1}}, e) == doctest::Approx(5.0e-3).epsilon(1e-15));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 20; ++i) {
        const Eigen::Vector2d p(u(rng), u(rng));
        CHECK(sampson_error({p, p}, e) == 0.0);
    }
    const Pose pose = testsupport::random_pose(rng);
    const EssentialMatrix eg = essential_from_pose(pose);
    for (const auto &c : testsupport::project_scene(pose, 100, rng))
        CHECK(sampson_error(c, eg) < 1e-20);
}

TEST_CASE("sampson_error agrees with an explicit formula") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 200; ++i) {
        Eigen::Matrix3d e = Eigen::Matrix3d::Random();
        const Correspondence c{{u(rng), u(rng)}, {u(rng), u(rng)}};
        const double x1 = c.p.x(), y1 = c.p.y(), x2 = c.q.x(), y2 = c.q.y();
        double r = 0, a = 0, b = 0, cc = 0, d = 0;
        const double p[3] = {x1, y1, 1}, q[3] = {x2, y2, 1};
        for (int k = 0; k < 3; ++k) {
            for (int l = 0; l < 3; ++l)
                r += q[k] * e(k, l) * p[l];
            a += e(0, k) * p[k];
            b += e(1, k) * p[k];
            cc += e(k, 0) * q[k];
            d += e(k, 1) * q[k];
        }
        CHECK(sampson_error(c, e) == doctest::Approx(r * r / (a * a + b * b + cc * cc + d * d)).epsilon(1e-12));
    }
}

TEST_CASE("triangulate") {
    const Pose stereo{Eigen::Matrix3d::Identity(), {-0.5, 0, 0}};
    const Eigen::Vector3d x(0, 0, 5);
    const Correspondence c{x.hnormalized(), stereo.apply(x).hnormalized()};
    const Triangulation t = triangulate(c, stereo);
    CHECK((t.point - x).norm() < 1e-9);
    CHECK(t.depth1 > 0);
    CHECK(t.depth2 > 0);

    // A point behind camera 2 only.
    const Pose forward{Eigen::Matrix3d::Identity(), {0, 0, -6}};
    const Eigen::Vector3d y(0.3, 0.2, 4);
    const Eigen::Vector3d y2 = forward.apply(y);
    const Triangulation back = triangulate({y.hnormalized(), y2.hnormalized()}, forward);
    CHECK(back.depth1 > 0);
    CHECK(back.depth2 < 0);

    CHECK_THROWS_AS(triangulate(c, {Eigen::Matrix3d::Identity(), {0, 0, 0}}), Error);
}

TEST_CASE("candidate_transforms") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        Pose pose = testsupport::random_pose(rng);
        pose.translation *= 2.7;
        const auto c = candidate_transforms(essential_from_pose(pose), pose.translation.norm());
        int matches = 0;
        for (const auto &p : c) {
            CHECK(is_rotation(p.rotation));
            CHECK(std::abs(p.translation.norm() - 2.7) < 1e-12);
            if ((p.rotation - pose.rotation).norm() < 1e-6 && (p.translation - pose.translation).norm() < 1e-6)
                ++matches;
        }
        CHECK(matches == 1);
        for (const auto &p : candidate_transforms(essential_from_pose(pose), 2.0))
            CHECK(std::abs(p.translation.norm() - 2.0) < 1e-12);
    }
    CHECK_THROWS_AS(candidate_transforms(Eigen::Matrix3d::Identity(), 1.0), Error);
    CHECK_THROWS_AS(candidate_transforms(essential_from_pose({Eigen::Matrix3d::Identity(), {1, 0, 0}}), 0.0), Error);
}

TEST_CASE("decompose_essential examples") {
    std::mt19937_64 rng(4);
    const Pose px{Eigen::Matrix3d::Identity(), {1, 0, 0}};
    const auto m = testsupport::project_scene(px, 20, rng);
    const EssentialMatrix e = essential_from_pose(px);
    const Pose d = decompose_essential(e, m);
    CHECK(geodesic_rotation_error(d.rotation, px.rotation) < 1e-6);
    CHECK(translation_errors(d.translation, px.translation).angular_deg < 1e-6);
    const Pose dn = decompose_essential(-e, m);
    CHECK(dn == d);

    // Mirrored scene: the same matches seen with swapped depth signs.
    const Pose mirrored{Eigen::Matrix3d::Identity(), {-1, 0, 0}};
    CorrespondenceSet flipped;
    for (const Eigen::Vector3d &x : {Eigen::Vector3d(0.1, 0.2, 4), Eigen::Vector3d(-0.3, 0.1, 5),
                                     Eigen::Vector3d(0.2, -0.4, 6), Eigen::Vector3d(0.5, 0.3, 3)})
        flipped.push_back({x.hnormalized(), mirrored.apply(x).hnormalized()});
    const Pose dm = decompose_essential(e, flipped);
    CHECK(translation_errors(dm.translation, mirrored.translation).angular_deg < 1e-6);
}

TEST_CASE("essential compose/decompose roundtrip over random poses") {
    std::mt19937_64 rng(77);
    double worst_r = 0.0, worst_t = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Pose pose = testsupport::random_pose(rng, 60.0);
        const auto m = testsupport::project_scene(pose, 12, rng);
        const Pose d = decompose_essential(essential_from_pose(pose), m);
        worst_r = std::max(worst_r, geodesic_rotation_error(d.rotation, pose.rotation));
        worst_t = std::max(worst_t, translation_errors(d.translation, pose.translation).angular_deg);
    }
    CHECK(worst_r < 1e-6);
    CHECK(worst_t < 1e-6);
}

TEST_CASE("geodesic_rotation_error") {
    Eigen::Matrix3d rz;
    rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK(geodesic_rotation_error(rz, rz) == 0.0);
    CHECK(geodesic_rotation_error(Eigen::Matrix3d::Identity(), rz) == doctest::Approx(90.0).epsilon(1e-14));

    std::mt19937_64 rng(8);
    for (int i = 0; i < 500; ++i) {
        const Eigen::Matrix3d a = axis_angle(testsupport::random_direction(rng), 0.7) *
                                  axis_angle(testsupport::random_direction(rng), 1.9);
        const Eigen::Matrix3d b = testsupport::random_rotation(rng);
        const Eigen::Matrix3d c = testsupport::random_rotation(rng);
        const double ab = geodesic_rotation_error(a, b);
        CHECK(std::abs(ab - quaternion_angle_deg(a, b)) < 1e-9);
        CHECK(std::abs(ab - geodesic_rotation_error(b, a)) < 1e-9);
        CHECK(ab <= geodesic_rotation_error(a, c) + geodesic_rotation_error(c, b) + 1e-9);
    }
}

TEST_CASE("translation_errors") {
    const Eigen::Vector3d t(0.3, -0.4, 1.2);
    const auto same = translation_errors(t, t);
    CHECK(same.euclidean_m == 0.0);
    CHECK(same.angular_deg == 0.0);
    const Eigen::Vector3d unit = t.normalized();
    const auto dbl = translation_errors(2.0 * unit, unit);
    CHECK(dbl.euclidean_m == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(dbl.angular_deg < 1e-6);
    CHECK(translation_errors(Eigen::Vector3d::Zero(), t).angular_deg == 0.0);

    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector3d a = testsupport::random_direction(rng) * 3.0;
        const Eigen::Vector3d b = testsupport::random_direction(rng);
        const double cosang = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
        const auto te = translation_errors(a, b);
        CHECK(std::abs(te.angular_deg - std::acos(cosang) * 180.0 / M_PI) < 1e-6);
        CHECK(std::abs(te.euclidean_m - (a - b).norm()) < 1e-12);
    }
}

TEST_CASE("normalize_pixels") {
    const CameraIntrinsics k{585, 590, 320, 240};
    CHECK(normalize_pixel({320, 240}, k) == Eigen::Vector2d(0, 0));
    CHECK(normalize_pixel({320 + 585, 240}, k) == Eigen::Vector2d(1, 0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 640);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector2d px(u(rng), u(rng));
        CHECK((denormalize_point(normalize_pixel(px, k), k) - px).norm() < 1e-12);
    }
    const PixelCorrespondenceSet set{{{320, 240}, {905, 240}}};
    const auto n = normalize_pixels(set, k);
    REQUIRE(n.size() == 1);
    CHECK(n[0].q == Eigen::Vector2d(1, 0));
}
